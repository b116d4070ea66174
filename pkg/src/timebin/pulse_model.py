"""Physical constants, pulse envelopes and the time-dependent rates they drive.

Everything is dimensionless: rates in units of the upper-state decay rate
``gamma`` and times in units of ``1/gamma``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np
from scipy.special import erf as _erf

DEFAULT_SEPARATION = 6.0

SPEED_OF_LIGHT_CM_PER_S = 2.99792458e10


class ParameterError(ValueError):
    """Invalid physical parameter or pulse definition.

    ``field`` names the offending attribute so that the config layer can map
    it back to the key the user wrote.
    """

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


class ShapeKind(str, Enum):
    GAUSSIAN = "gaussian"
    SQUARED_COSINE = "squared_cosine"
    SQUARE = "square"


@dataclass(frozen=True)
class PhysicalParams:
    """System constants in units of ``gamma``.

    ``gamma32`` and ``gamma41`` are the partial decay rates that set optical
    pumping by the write and read fields. They may be zero to switch the
    pumping off; ``gamma_c`` is the ground-state coherence decay.
    """

    delta_W: float = 20.0
    delta_R: float = 20.0
    N_atoms: float = 1.0e4
    chi: float = 276.6
    gS: float = 1.0
    gAS: float = 1.0
    gamma32: float = 0.5
    gamma41: float = 0.5
    gamma_c: float = 0.0
    gamma: float = 1.0

    def __post_init__(self) -> None:
        for name in ("gamma", "N_atoms", "chi", "gS", "gAS"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ParameterError(name, f"must be finite and > 0, got {value!r}")
        for name in ("gamma32", "gamma41", "gamma_c"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value >= 0):
                raise ParameterError(name, f"must be finite and >= 0, got {value!r}")
        for name in ("gamma32", "gamma41"):
            if getattr(self, name) > self.gamma:
                raise ParameterError(name, "partial decay rate cannot exceed gamma")
        for name in ("delta_W", "delta_R"):
            value = getattr(self, name)
            if not math.isfinite(value) or value == 0:
                raise ParameterError(name, "detuning must be finite and nonzero")

    @property
    def gain_prefactor(self) -> float:
        """2N/chi, the factor turning a squared coupling into a gain."""
        return 2.0 * self.N_atoms / self.chi

    @staticmethod
    def chi_from_length(length_cm: float, gamma_per_s: float) -> float:
        """Cavity damping c/L expressed in units of gamma."""
        if length_cm <= 0 or gamma_per_s <= 0:
            raise ParameterError("chi", "fiber length and gamma must be positive")
        return SPEED_OF_LIGHT_CM_PER_S / length_cm / gamma_per_s


@dataclass(frozen=True)
class PulseShape:
    """One laser pulse: envelope kind, center, width and peak Rabi frequency.

    ``duration`` is the Gaussian standard deviation, the full width at half
    maximum of a squared-cosine pulse, or the full length of a square pulse.
    The peak is stored as a non-negative magnitude plus a phase.
    """

    kind: ShapeKind = ShapeKind.GAUSSIAN
    center: float = 0.0
    duration: float = 1.0
    peak: float = 0.0
    phase: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", ShapeKind(self.kind))
        if not (math.isfinite(self.duration) and self.duration > 0):
            raise ParameterError("duration", f"must be > 0, got {self.duration!r}")
        if not (math.isfinite(self.peak) and self.peak >= 0):
            raise ParameterError("peak", f"must be >= 0, got {self.peak!r}")
        if not math.isfinite(self.center):
            raise ParameterError("center", "must be finite")
        if not math.isfinite(self.phase):
            raise ParameterError("phase", "must be finite")

    def envelope(self, t):
        return eval_shape(self, t)

    @property
    def half_extent(self) -> float:
        """Distance from the center beyond which the pulse counts as off."""
        if self.kind is ShapeKind.GAUSSIAN:
            return 0.5 * DEFAULT_SEPARATION * self.duration
        if self.kind is ShapeKind.SQUARED_COSINE:
            return self.duration
        return 0.5 * self.duration

    @property
    def start(self) -> float:
        return self.center - self.half_extent

    @property
    def end(self) -> float:
        return self.center + self.half_extent

    @property
    def intensity_integral(self) -> float:
        """Integral of f(t)^2 for the unit-peak envelope."""
        if self.kind is ShapeKind.GAUSSIAN:
            return self.duration * math.sqrt(math.pi)
        if self.kind is ShapeKind.SQUARED_COSINE:
            return 0.75 * self.duration
        return self.duration

    @property
    def complex_peak(self) -> complex:
        return self.peak * complex(math.cos(self.phase), math.sin(self.phase))

    def with_peak(self, peak: float) -> "PulseShape":
        return PulseShape(self.kind, self.center, self.duration, peak, self.phase)


@dataclass(frozen=True)
class PulseTrain:
    """Write pulse followed by J well separated read pulses."""

    write: PulseShape
    reads: tuple[PulseShape, ...] = ()
    separation_factor: float = DEFAULT_SEPARATION

    def __post_init__(self) -> None:
        object.__setattr__(self, "reads", tuple(self.reads))
        if self.separation_factor <= 0:
            raise ParameterError("separation_factor", "must be > 0")
        for i, (a, b) in enumerate(zip(self.reads, self.reads[1:]), start=1):
            if b.center <= a.center:
                raise ParameterError(
                    f"reads[{i}].center", "read centers must be strictly increasing"
                )
            needed = self.separation_factor * max(a.duration, b.duration)
            if b.center - a.center < needed:
                raise ParameterError(
                    f"reads[{i}].center",
                    f"spacing {b.center - a.center:g} below {self.separation_factor:g} "
                    f"x duration ({needed:g})",
                )
        if self.reads and not self.delay > self.write.duration:
            raise ParameterError(
                "reads[0].center",
                f"write-to-read delay {self.delay:g} must exceed write duration "
                f"{self.write.duration:g}",
            )

    @property
    def J(self) -> int:
        return len(self.reads)

    @property
    def write_end(self) -> float:
        return self.write.end

    @property
    def delay(self) -> float:
        """Gap between the end of the write pulse and the start of the first read."""
        if not self.reads:
            return math.inf
        return self.reads[0].start - self.write.end

    @property
    def span(self) -> tuple[float, float]:
        pulses = (self.write, *self.reads)
        return min(p.start for p in pulses), max(p.end for p in pulses)

    def with_read_peaks(self, peaks: Sequence[float]) -> "PulseTrain":
        if len(peaks) != self.J:
            raise ValueError(f"expected {self.J} peaks, got {len(peaks)}")
        reads = tuple(r.with_peak(float(p)) for r, p in zip(self.reads, peaks))
        return PulseTrain(self.write, reads, self.separation_factor)

    def with_write_peak(self, peak: float) -> "PulseTrain":
        return PulseTrain(self.write.with_peak(peak), self.reads, self.separation_factor)


def eval_shape(p: PulseShape, t):
    """Unit-peak envelope f(t - center); accepts scalars or arrays."""
    x = np.asarray(t, dtype=float) - p.center
    if p.kind is ShapeKind.GAUSSIAN:
        out = np.exp(-0.5 * (x / p.duration) ** 2)
    elif p.kind is ShapeKind.SQUARED_COSINE:
        inside = np.abs(x) <= p.duration
        out = np.where(inside, np.cos(0.5 * np.pi * x / p.duration) ** 2, 0.0)
    else:
        out = np.where(np.abs(x) <= 0.5 * p.duration, 1.0, 0.0)
    return out if out.ndim else float(out)


def intensity_cumulative(p: PulseShape, t):
    """Running integral of f(t')^2 from -inf to t for the unit-peak envelope."""
    x = np.asarray(t, dtype=float) - p.center
    T = p.duration
    if p.kind is ShapeKind.GAUSSIAN:
        out = 0.5 * T * math.sqrt(math.pi) * (1.0 + _erf(x / T))
    elif p.kind is ShapeKind.SQUARED_COSINE:
        u = 0.5 * np.pi * np.clip(x, -T, T) / T
        out = (2 * T / np.pi) * (
            3 * u / 8 + np.sin(2 * u) / 4 + np.sin(4 * u) / 32 + 3 * np.pi / 16
        )
    else:
        out = np.clip(x + 0.5 * T, 0.0, T)
    return out if np.ndim(out) else float(out)


def write_field(train: PulseTrain, t):
    """Real write Rabi frequency Omega_W f_W(t)."""
    return train.write.peak * eval_shape(train.write, t)


def read_field(train: PulseTrain, t):
    """Complex read Rabi frequency: sum of Omega_i f_i(t - t_i)."""
    t = np.asarray(t, dtype=float)
    total = np.zeros(t.shape, dtype=complex)
    for p in train.reads:
        total = total + p.complex_peak * eval_shape(p, t)
    return total if total.ndim else complex(total)


def coupling_G(params: PhysicalParams, train: PulseTrain, t):
    return params.gS * write_field(train, t) / params.delta_W


def coupling_F(params: PhysicalParams, train: PulseTrain, t):
    return params.gAS * read_field(train, t) / params.delta_R


def gain_alpha(params: PhysicalParams, train: PulseTrain, t):
    return params.gain_prefactor * coupling_G(params, train, t) ** 2


def gain_beta(params: PhysicalParams, train: PulseTrain, t):
    return params.gain_prefactor * np.abs(coupling_F(params, train, t)) ** 2


def relaxation_rates(params: PhysicalParams, train: PulseTrain, t):
    """Optical pumping rates (Gamma_W, Gamma_R) and their total with gamma_c."""
    gw = (write_field(train, t) / params.delta_W) ** 2 * params.gamma32
    gr = np.abs(read_field(train, t) / params.delta_R) ** 2 * params.gamma41
    return gw, gr, params.gamma_c + gw + gr


def integrated_gain(params: PhysicalParams, write: PulseShape) -> float:
    """Integral of alpha over the whole write pulse."""
    return (
        params.gain_prefactor
        * (params.gS * write.peak / params.delta_W) ** 2
        * write.intensity_integral
    )


def pulse_exposure(params: PhysicalParams, read: PulseShape) -> float:
    """Integral of beta over one isolated read pulse."""
    return (
        params.gain_prefactor
        * (params.gAS * read.peak / params.delta_R) ** 2
        * read.intensity_integral
    )


def write_peak_for_gain(params: PhysicalParams, write: PulseShape, target: float) -> float:
    """Write Rabi frequency whose integrated Stokes gain equals ``target``."""
    if target < 0:
        raise ParameterError("integrated_gain", "must be >= 0")
    scale = params.gain_prefactor * (params.gS / params.delta_W) ** 2 * write.intensity_integral
    return math.sqrt(target / scale)
