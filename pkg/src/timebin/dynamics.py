"""Spin-wave and photon-flux dynamics.

The stored spin-wave number obeys

    dN/dt = alpha(t) (N + 1) - [beta(t) + Gamma_tot(t)] N

with Stokes flux ``alpha (N + 1)`` and anti-Stokes flux ``beta N``. The
cumulative photon numbers are carried as extra ODE components so that the
linear invariant ``N + n_AS`` is preserved by the Runge-Kutta stages when
``alpha`` and ``Gamma_tot`` vanish.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad, solve_ivp, trapezoid

from .pulse_model import (
    PhysicalParams,
    PulseTrain,
    intensity_cumulative,
    integrated_gain,
    pulse_exposure,
    read_field,
    write_field,
)

GRID_MARGIN = 4.0
START_OFFSET = 6.0


class IntegrationError(RuntimeError):
    pass


@dataclass(frozen=True)
class GridSpec:
    """Time range and step control for :func:`integrate`.

    ``t_start``/``t_end`` default to six durations beyond the first and last
    active pulse. ``dt_out`` is the output sample spacing (default: a
    twentieth of the shortest pulse duration). When ``fixed_step`` is set a
    classical RK4 stepper with that step replaces the adaptive one and the
    output grid is the step grid.
    """

    t_start: float | None = None
    t_end: float | None = None
    dt_out: float | None = None
    rtol: float = 1e-8
    atol: float = 1e-10
    fixed_step: float | None = None
    initial_n_sp: float = 0.0


@dataclass(frozen=True)
class DynamicsTrace:
    grid: np.ndarray
    n_sp: np.ndarray
    flux_s: np.ndarray
    flux_as: np.ndarray
    cum_s: np.ndarray
    cum_as: np.ndarray

    def __post_init__(self) -> None:
        for name in ("grid", "n_sp", "flux_s", "flux_as", "cum_s", "cum_as"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        n = self.grid.size
        if any(getattr(self, k).shape != (n,) for k in ("n_sp", "flux_s", "flux_as", "cum_s", "cum_as")):
            raise ValueError("trace columns must share the grid length")
        if n > 1 and np.any(np.diff(self.grid) <= 0):
            raise ValueError("trace grid must be strictly increasing")

    @property
    def n_s_total(self) -> float:
        return float(self.cum_s[-1])

    @property
    def n_as_total(self) -> float:
        return float(self.cum_as[-1])

    def n_sp_at(self, t: float) -> float:
        """Linear interpolation between output points; coarse inside a read pulse."""
        return float(np.interp(t, self.grid, self.n_sp))


@dataclass(frozen=True)
class BinBreakdown:
    windows: tuple[tuple[float, float], ...]
    areas: tuple[float, ...]
    total: float

    @property
    def fractions(self) -> tuple[float, ...]:
        return tuple(a / self.total for a in self.areas) if self.total else ()


def _active_pulses(train: PulseTrain, initial_n_sp: float):
    pulses = list(train.reads)
    if train.write.peak > 0 or initial_n_sp == 0:
        pulses.insert(0, train.write)
    return pulses


def default_range(train: PulseTrain, initial_n_sp: float = 0.0) -> tuple[float, float]:
    pulses = _active_pulses(train, initial_n_sp)
    t0 = min(p.center - START_OFFSET * p.duration for p in pulses)
    t1 = max(p.center + START_OFFSET * p.duration for p in pulses)
    return t0, t1


def _resolve_grid(train: PulseTrain, spec: GridSpec) -> tuple[float, float]:
    d0, d1 = default_range(train, spec.initial_n_sp)
    t0 = d0 if spec.t_start is None else float(spec.t_start)
    t1 = d1 if spec.t_end is None else float(spec.t_end)
    if not t1 > t0:
        raise ValueError(f"empty time range [{t0}, {t1}]")
    for p in _active_pulses(train, spec.initial_n_sp):
        lo, hi = p.center - GRID_MARGIN * p.duration, p.center + GRID_MARGIN * p.duration
        if t0 > lo or t1 < hi:
            raise ValueError(
                f"grid [{t0:g}, {t1:g}] does not cover pulse at {p.center:g} "
                f"with a {GRID_MARGIN:g}-duration margin [{lo:g}, {hi:g}]"
            )
    return t0, t1


def _rate_function(params: PhysicalParams, train: PulseTrain):
    pre = params.gain_prefactor
    ka = pre * (params.gS / params.delta_W) ** 2
    kb = pre * (params.gAS / params.delta_R) ** 2
    kw = params.gamma32 / params.delta_W**2
    kr = params.gamma41 / params.delta_R**2
    gc = params.gamma_c

    def rates(t):
        w2 = write_field(train, t) ** 2
        r2 = np.abs(read_field(train, t)) ** 2
        return ka * w2, kb * r2, gc + kw * w2 + kr * r2

    return rates


def _rk4(rhs, y0, t0, t1, h):
    n = max(1, int(math.ceil((t1 - t0) / h - 1e-9)))
    ts = t0 + h * np.arange(n + 1)
    ts[-1] = t1
    ys = np.empty((n + 1, len(y0)))
    ys[0] = y = np.asarray(y0, dtype=float)
    for i in range(n):
        t, dt = ts[i], ts[i + 1] - ts[i]
        k1 = rhs(t, y)
        k2 = rhs(t + dt / 2, y + dt / 2 * k1)
        k3 = rhs(t + dt / 2, y + dt / 2 * k2)
        k4 = rhs(t + dt, y + dt * k3)
        y = y + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        ys[i + 1] = y
    return ts, ys


def integrate(
    params: PhysicalParams, train: PulseTrain, grid_spec: GridSpec | None = None
) -> DynamicsTrace:
    """Integrate the spin-wave and photon-flux equations over the pulse train."""
    spec = grid_spec or GridSpec()
    t0, t1 = _resolve_grid(train, spec)
    rates = _rate_function(params, train)

    def rhs(t, y):
        a, b, g = rates(t)
        n = y[0]
        return np.array([a * (n + 1) - (b + g) * n, a * (n + 1), b * n])

    y0 = [float(spec.initial_n_sp), 0.0, 0.0]
    if spec.fixed_step is not None:
        if not spec.fixed_step > 0:
            raise ValueError("fixed_step must be > 0")
        grid, ys = _rk4(rhs, y0, t0, t1, float(spec.fixed_step))
    else:
        shortest = min(p.duration for p in (train.write, *train.reads))
        dt_out = spec.dt_out or shortest / 20
        n_out = max(2, int(math.ceil((t1 - t0) / dt_out)) + 1)
        grid = np.linspace(t0, t1, n_out)
        sol = solve_ivp(
            rhs,
            (t0, t1),
            y0,
            method="DOP853",
            t_eval=grid,
            rtol=spec.rtol,
            atol=spec.atol,
            max_step=shortest / 2,
        )
        if not sol.success:
            where = sol.t[-1] if sol.t.size else t0
            raise IntegrationError(
                f"step control failed on [{where:g}, {t1:g}]: {sol.message}"
            )
        ys = sol.y.T

    n_sp = ys[:, 0]
    a, b, _ = rates(grid)
    return DynamicsTrace(
        grid=grid,
        n_sp=n_sp,
        flux_s=a * (n_sp + 1),
        flux_as=b * n_sp,
        cum_s=ys[:, 1],
        cum_as=ys[:, 2],
    )


def stokes_gain_until(params: PhysicalParams, train: PulseTrain, t) -> float:
    """Integral of alpha from -inf to t, from the analytic envelope integral."""
    full = integrated_gain(params, train.write)
    if full == 0:
        return 0.0
    return full * intensity_cumulative(train.write, t) / train.write.intensity_integral


def read_exposure_until(params: PhysicalParams, train: PulseTrain, t) -> float:
    """Integral of beta from -inf to t, neglecting cross terms between reads."""
    total = 0.0
    for r in train.reads:
        if r.peak > 0:
            total = total + pulse_exposure(params, r) * intensity_cumulative(r, t) / r.intensity_integral
    return total


def closed_form_stokes(params: PhysicalParams, train: PulseTrain, t):
    """Relaxation-free Stokes photon number exp(int alpha) - 1 up to time t."""
    return np.expm1(stokes_gain_until(params, train, t))


def closed_form_antistokes(params: PhysicalParams, train: PulseTrain, t, n_s_inf: float):
    """Relaxation-free anti-Stokes number n_S(inf) (1 - exp(-int beta))."""
    return n_s_inf * -np.expm1(-read_exposure_until(params, train, t))


def _segment_area(grid: np.ndarray, y: np.ndarray, a: float, b: float) -> float:
    inner = (grid > a) & (grid < b)
    ts = np.concatenate(([a], grid[inner], [b]))
    ys = np.concatenate(([np.interp(a, grid, y)], y[inner], [np.interp(b, grid, y)]))
    return float(trapezoid(ys, ts))


def bin_windows(train: PulseTrain, t_end: float) -> list[tuple[float, float]]:
    if not train.reads:
        return []
    bounds = [train.write_end + 0.5 * train.delay]
    bounds += [0.5 * (a.center + b.center) for a, b in zip(train.reads, train.reads[1:])]
    bounds.append(t_end)
    return list(zip(bounds[:-1], bounds[1:]))


def bin_areas(trace: DynamicsTrace, train: PulseTrain) -> BinBreakdown:
    """Anti-Stokes photon number in each read window, by trapezoid quadrature."""
    g = trace.grid
    for r in train.reads:
        if not g[0] <= r.center <= g[-1]:
            raise ValueError(f"trace grid does not reach read pulse centered at {r.center:g}")
    windows = bin_windows(train, float(g[-1]))
    windows = [(max(a, float(g[0])), b) for a, b in windows]
    areas = tuple(_segment_area(g, trace.flux_as, a, b) for a, b in windows)
    return BinBreakdown(tuple(windows), areas, float(sum(areas)))


def n_sp_nested_quadrature(
    params: PhysicalParams,
    train: PulseTrain,
    t: float,
    t0: float,
    initial_n_sp: float = 0.0,
) -> float:
    """Spin-wave number from the double-integral form, by nested adaptive quadrature.

    O(n^2) and slow; used to check :func:`integrate`.
    """
    rates = _rate_function(params, train)
    centers = sorted([train.write.center] + [r.center for r in train.reads])

    def net(s):
        a, b, g = rates(s)
        return float(a - b - g)

    def inner(lo, hi):
        pts = [c for c in centers if lo < c < hi]
        return quad(net, lo, hi, points=pts or None, limit=400, epsabs=1e-13, epsrel=1e-12)[0]

    def outer_integrand(tp):
        a = float(rates(tp)[0])
        if a == 0.0:
            return 0.0
        return a * math.exp(inner(tp, t))

    pts = [c for c in centers if t0 < c < t]
    w = train.write
    pts += [x for x in (w.center - 3 * w.duration, w.center + 3 * w.duration) if t0 < x < t]
    body = quad(outer_integrand, t0, t, points=sorted(set(pts)) or None, limit=400,
                epsabs=1e-13, epsrel=1e-11)[0]
    if initial_n_sp:
        body += initial_n_sp * math.exp(inner(t0, t))
    return body

