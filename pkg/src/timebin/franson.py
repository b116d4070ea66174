"""Multi-time-bin single-photon state and the unbalanced interferometer test.

A photon spread over J bins passes an interferometer whose arm difference
equals the bin spacing. At the output the detector-1 mean count is

    n1(theta) = 1/2 [1 + Re(exp(i theta) Z)],
    Z = sum_{j,k} |C_j| |C_k| O_jk exp(i (phi_j - phi_k + noise_jk)),

with O_jk the overlap of mode j and mode k delayed by the arm difference;
n2 = 1 - n1.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np
from scipy.integrate import quad, trapezoid

from .dynamics import BinBreakdown, DynamicsTrace
from .pulse_model import PulseTrain

CHUNK_SIZE = 8192
DEFAULT_THETA_POINTS = 121


class DelayMismatchError(ValueError):
    """Interferometer delay does not match the bin spacing."""


# ---------------------------------------------------------------- modes


@dataclass(frozen=True)
class GaussianMode:
    """Gaussian amplitude exp(-(t-center)^2 / (2 width^2)) restricted to ``support``."""

    center: float
    width: float
    support: tuple[float, float]
    scale: float = field(init=False)

    def __post_init__(self) -> None:
        a, b = self.support
        norm = quad(lambda t: self._raw(t) ** 2, a, b, points=[self.center] if a < self.center < b else None,
                    epsabs=1e-14, epsrel=1e-13, limit=200)[0]
        object.__setattr__(self, "scale", 1.0 / math.sqrt(norm))

    def _raw(self, t):
        return np.exp(-0.5 * ((np.asarray(t, dtype=float) - self.center) / self.width) ** 2)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        a, b = self.support
        return np.where((t >= a) & (t <= b), self.scale * self._raw(t), 0.0)

    def nodes(self):
        return None


@dataclass(frozen=True)
class SampledMode:
    """Piecewise-linear mode from samples, zero outside ``support``."""

    t: np.ndarray
    values: np.ndarray
    support: tuple[float, float]

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        a, b = self.support
        inside = (t >= a) & (t <= b)
        return np.where(inside, np.interp(t, self.t, self.values, left=0.0, right=0.0), 0.0)

    def nodes(self):
        return self.t

    def normalized(self) -> "SampledMode":
        norm = overlap(self, self, 0.0)
        return SampledMode(self.t, self.values / math.sqrt(norm), self.support)


def overlap(mode_a, mode_b, delay: float = 0.0) -> float:
    """Integral of mode_a(t) * mode_b(t - delay) over the common support."""
    lo = max(mode_a.support[0], mode_b.support[0] + delay)
    hi = min(mode_a.support[1], mode_b.support[1] + delay)
    if not hi > lo:
        return 0.0
    na, nb = mode_a.nodes(), mode_b.nodes()
    if na is None and nb is None:
        def f(t):
            return float(mode_a(t) * mode_b(t - delay))

        pts = [c for c in (getattr(mode_a, "center", None), getattr(mode_b, "center", None))
               if c is not None]
        pts = [p for p in (pts[0], pts[1] + delay) if lo < p < hi] if len(pts) == 2 else []
        return quad(f, lo, hi, points=pts or None, epsabs=1e-14, epsrel=1e-12, limit=400)[0]
    grids = [np.linspace(lo, hi, 2001)]
    if na is not None:
        grids.append(na[(na > lo) & (na < hi)])
    if nb is not None:
        shifted = nb + delay
        grids.append(shifted[(shifted > lo) & (shifted < hi)])
    ts = np.unique(np.concatenate(grids))
    return float(trapezoid(mode_a(ts) * mode_b(ts - delay), ts))


# ---------------------------------------------------------------- state


@dataclass(frozen=True)
class TimeBinState:
    amplitudes: tuple[complex, ...]
    centers: tuple[float, ...]
    tau: float
    modes: tuple = ()
    equal_spacing: bool = True

    def __post_init__(self) -> None:
        amps = tuple(complex(c) for c in self.amplitudes)
        object.__setattr__(self, "amplitudes", amps)
        object.__setattr__(self, "centers", tuple(float(c) for c in self.centers))
        object.__setattr__(self, "modes", tuple(self.modes))
        J = len(amps)
        if J == 0:
            raise ValueError("a time-bin state needs at least one bin")
        if len(self.centers) != J or len(self.modes) != J:
            raise ValueError("amplitudes, centers and modes must have equal length")
        norm = math.fsum(abs(c) ** 2 for c in amps)
        if abs(norm - 1.0) > 1e-10:
            raise ValueError(f"sum |C_j|^2 = {norm!r}, expected 1")
        gram = self.gram()
        err = np.max(np.abs(gram - np.eye(J)))
        if err > 1e-6:
            raise ValueError(f"bin modes are not orthonormal (max deviation {err:.2e})")

    @property
    def J(self) -> int:
        return len(self.amplitudes)

    @property
    def populations(self) -> np.ndarray:
        return np.abs(np.array(self.amplitudes)) ** 2

    def gram(self) -> np.ndarray:
        J = len(self.modes)
        g = np.empty((J, J))
        for j in range(J):
            for k in range(j, J):
                g[j, k] = g[k, j] = overlap(self.modes[j], self.modes[k], 0.0)
        return g

    def overlap_matrix(self, delay: float | None = None) -> np.ndarray:
        """O[j, k] = overlap of mode j with mode k delayed by ``delay``."""
        d = self.tau if delay is None else delay
        J = self.J
        return np.array([[overlap(self.modes[j], self.modes[k], d) for k in range(J)] for j in range(J)])


def _spacing(centers: Sequence[float]) -> tuple[float, bool]:
    if len(centers) < 2:
        return 0.0, True
    gaps = np.diff(centers)
    tau = float(np.mean(gaps))
    return tau, bool(np.all(np.abs(gaps - tau) <= 1e-9 * max(abs(tau), 1.0)))


def ideal_state(
    weights: int | Sequence[float],
    tau: float,
    width: float,
    phases: Sequence[float] | None = None,
    *,
    t0: float = 0.0,
    truncate: bool = True,
) -> TimeBinState:
    """State with identical Gaussian bin modes spaced by ``tau``.

    ``weights`` is either J (equal populations) or the bin populations. With
    ``truncate`` each mode is restricted to its own bin, |t - t_j| <= tau/2,
    and renormalized there.
    """
    if isinstance(weights, int):
        pops = np.full(weights, 1.0 / weights)
    else:
        pops = np.asarray(weights, dtype=float)
        pops = pops / pops.sum()
    J = pops.size
    phases = np.zeros(J) if phases is None else np.asarray(phases, dtype=float)
    centers = t0 + tau * np.arange(J)
    half = 0.5 * tau if truncate else 12.0 * width
    modes = [GaussianMode(float(c), width, (float(c - half), float(c + half))) for c in centers]
    amps = np.sqrt(pops) * np.exp(1j * phases)
    amps = amps / np.linalg.norm(amps)
    return TimeBinState(tuple(amps), tuple(centers), tau if J > 1 else 0.0, tuple(modes))


def state_from_trace(
    breakdown: BinBreakdown,
    train: PulseTrain,
    read_phases: Sequence[float] | None = None,
    *,
    trace: DynamicsTrace | None = None,
) -> TimeBinState:
    """Build the time-bin state from simulated bin areas.

    Populations are the bin areas over their total; phases default to the
    read-pulse phases. With ``trace`` the bin modes are the normalized
    anti-Stokes amplitude envelopes sqrt(flux) within each window, otherwise
    idealized Gaussian modes of the read-pulse width.
    """
    if not breakdown.total > 0:
        raise ValueError("no anti-Stokes photon retrieved; cannot form a time-bin state")
    J = len(breakdown.areas)
    if J != train.J:
        raise ValueError(f"breakdown has {J} bins but train has {train.J} reads")
    phases = [r.phase for r in train.reads] if read_phases is None else list(read_phases)
    if len(phases) != J:
        raise ValueError(f"need {J} read phases, got {len(phases)}")
    pops = np.array(breakdown.areas) / breakdown.total
    if np.any(pops < 0):
        raise ValueError("negative bin area")
    amps = np.sqrt(pops) * np.exp(1j * np.asarray(phases, dtype=float))
    amps = amps / np.linalg.norm(amps)
    centers = [r.center for r in train.reads]
    tau, equal = _spacing(centers)

    modes = []
    for (a, b), r in zip(breakdown.windows, train.reads):
        if trace is None:
            modes.append(GaussianMode(r.center, r.duration, (a, b)))
            continue
        g = trace.grid
        inside = (g > a) & (g < b)
        ts = np.concatenate(([a], g[inside], [b]))
        flux = np.interp(ts, g, trace.flux_as)
        amp = np.sqrt(np.clip(flux, 0.0, None))
        mode = SampledMode(ts, amp, (a, b))
        if overlap(mode, mode, 0.0) <= 0:
            raise ValueError(f"bin window ({a:g}, {b:g}) carries no anti-Stokes flux")
        modes.append(mode.normalized())
    return TimeBinState(tuple(amps), tuple(centers), tau, tuple(modes), equal)


# ---------------------------------------------------------------- interferometer


class NoiseKind(str, Enum):
    NONE = "none"
    SHARED_GAUSSIAN = "shared_gaussian"
    IID_GAUSSIAN = "iid_gaussian"


@dataclass(frozen=True)
class PhaseNoiseModel:
    kind: NoiseKind = NoiseKind.SHARED_GAUSSIAN
    variance: float = 0.0
    sample_count: int = 100_000
    seed: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", NoiseKind(self.kind))
        if not (math.isfinite(self.variance) and self.variance >= 0):
            raise ValueError(f"variance must be >= 0, got {self.variance!r}")
        if self.sample_count < 1:
            raise ValueError("sample_count must be >= 1")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must fit in 64 unsigned bits")

    @property
    def is_exact(self) -> bool:
        return self.kind is NoiseKind.NONE or self.variance == 0


@dataclass(frozen=True)
class FransonResult:
    theta_grid: np.ndarray
    counts1: np.ndarray
    counts2: np.ndarray
    stderr: np.ndarray
    noise: PhaseNoiseModel
    J: int

    @property
    def visibility(self) -> float:
        hi, lo = float(self.counts1.max()), float(self.counts1.min())
        return (hi - lo) / (hi + lo)

    @property
    def fit_amplitude(self) -> float:
        """Least-squares A in counts1 = 1/2 [1 + A cos(theta + psi)]."""
        X = np.column_stack([np.cos(self.theta_grid), np.sin(self.theta_grid)])
        coef, *_ = np.linalg.lstsq(X, 2 * self.counts1 - 1, rcond=None)
        return float(np.hypot(*coef))

    def summary(self) -> dict:
        return {
            "J": self.J,
            "visibility": self.visibility,
            "fit_amplitude": self.fit_amplitude,
            "noise": {
                "kind": self.noise.kind.value,
                "variance_rad2": self.noise.variance,
                "sample_count": self.noise.sample_count,
                "seed": int(self.noise.seed),
            },
            "max_stderr": float(self.stderr.max()),
        }


def _check_delay(state: TimeBinState, delay: float | None, allow_mismatch: bool, tol: float) -> float:
    d = state.tau if delay is None else float(delay)
    if state.J < 2 or allow_mismatch:
        return d
    if not state.equal_spacing:
        raise DelayMismatchError("bins are not equally spaced; one arm difference cannot match all pairs")
    if abs(d - state.tau) > tol * state.tau:
        raise DelayMismatchError(
            f"interferometer delay {d:g} does not match bin spacing {state.tau:g}; "
            "consecutive bins would not overlap and the fringe would vanish"
        )
    return d


def _pair_terms(state: TimeBinState, delay: float):
    """Split Z into the static part and the consecutive-pair terms that carry noise."""
    if state.J < 2:
        # nothing for the delayed copy to meet
        return 0j, np.zeros(0, dtype=complex)
    O = state.overlap_matrix(delay)
    c = np.array(state.amplitudes)
    mag, ph = np.abs(c), np.angle(c)
    terms = mag[:, None] * mag[None, :] * O * np.exp(1j * (ph[:, None] - ph[None, :]))
    J = state.J
    idx = np.arange(J - 1)
    pair = terms[idx + 1, idx].copy()
    static = terms.sum() - pair.sum()
    return complex(static), pair


def interferometer_counts(
    state: TimeBinState,
    theta: float,
    noise_phases: Sequence[float] | None = None,
    *,
    delay: float | None = None,
    allow_mismatch: bool = False,
    delay_tol: float = 1e-3,
) -> tuple[float, float]:
    """Mean detector counts (n1, n2) at phase-shifter setting ``theta``.

    ``noise_phases`` adds a random phase to each consecutive pair k -> k+1.
    """
    d = _check_delay(state, delay, allow_mismatch, delay_tol)
    static, pair = _pair_terms(state, d)
    if noise_phases is not None:
        noise = np.asarray(noise_phases, dtype=float)
        if noise.shape != pair.shape:
            raise ValueError(f"expected {pair.size} pair phases, got {noise.size}")
        pair = pair * np.exp(1j * noise)
    z = static + pair.sum()
    fringe = float(np.real(np.exp(1j * theta) * z))
    return 0.5 * (1 + fringe), 0.5 * (1 - fringe)


def _chunk_moments(index: int, n: int, pair: np.ndarray, static: complex, noise: PhaseNoiseModel):
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(noise.seed), spawn_key=(index,))))
    sigma = math.sqrt(noise.variance)
    if noise.kind is NoiseKind.SHARED_GAUSSIAN:
        phi = rng.normal(0.0, sigma, size=(n, 1))
    else:
        phi = rng.normal(0.0, sigma, size=(n, pair.size))
    z = static + (pair[None, :] * np.exp(1j * phi)).sum(axis=1)
    x, y = z.real, z.imag
    return np.array([x.sum(), y.sum(), (x * x).sum(), (y * y).sum(), (x * y).sum()])


def averaged_counts(
    state: TimeBinState,
    theta_grid: Sequence[float] | None = None,
    noise: PhaseNoiseModel | None = None,
    *,
    delay: float | None = None,
    workers: int = 1,
) -> FransonResult:
    """Fringe curves averaged over random conversion phases.

    Monte Carlo draws are generated in fixed-size chunks, each seeded from
    (seed, chunk index), and merged in chunk order, so results do not depend
    on ``workers``.
    """
    noise = noise or PhaseNoiseModel(NoiseKind.NONE)
    theta = (np.linspace(0.0, 2 * np.pi, DEFAULT_THETA_POINTS) if theta_grid is None
             else np.asarray(theta_grid, dtype=float))
    d = _check_delay(state, delay, False, 1e-3)
    static, pair = _pair_terms(state, d)
    c, s = np.cos(theta), np.sin(theta)

    if noise.is_exact or pair.size == 0:
        z = static + pair.sum()
        fringe = c * z.real - s * z.imag
        stderr = np.zeros_like(theta)
    else:
        S = int(noise.sample_count)
        sizes = [min(CHUNK_SIZE, S - i) for i in range(0, S, CHUNK_SIZE)]
        jobs = [(i, n, pair, static, noise) for i, n in enumerate(sizes)]
        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                parts = list(pool.map(lambda a: _chunk_moments(*a), jobs))
        else:
            parts = [_chunk_moments(*a) for a in jobs]
        sx, sy, sxx, syy, sxy = np.sum(parts, axis=0)
        mx, my = sx / S, sy / S
        fringe = c * mx - s * my
        if S > 1:
            vxx = (sxx - S * mx * mx) / (S - 1)
            vyy = (syy - S * my * my) / (S - 1)
            vxy = (sxy - S * mx * my) / (S - 1)
            var = np.clip(c * c * vxx + s * s * vyy - 2 * c * s * vxy, 0.0, None)
            stderr = 0.5 * np.sqrt(var / S)
        else:
            stderr = np.full_like(theta, np.inf)
    n1 = 0.5 * (1 + fringe)
    n2 = 0.5 * (1 - fringe)
    return FransonResult(theta, n1, n2, stderr, noise, state.J)


def analytic_averaged_counts(state: TimeBinState, theta, variance: float):
    """Closed-form Gaussian average for equal bins with identical modes."""
    J = state.J
    pops = state.populations
    if np.any(np.abs(pops - 1.0 / J) > 1e-9):
        raise ValueError("closed form needs equal bin populations 1/J")
    ph = np.angle(np.array(state.amplitudes))
    if np.any(np.abs(np.angle(np.exp(1j * (ph - ph[0])))) > 1e-12):
        raise ValueError("closed form needs equal read phases")
    if variance < 0:
        raise ValueError("variance must be >= 0")
    amp = (J - 1) / J * math.exp(-0.5 * variance)
    fringe = amp * np.cos(np.asarray(theta, dtype=float))
    return 0.5 * (1 + fringe), 0.5 * (1 - fringe)
