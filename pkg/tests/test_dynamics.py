import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from timebin.dynamics import (
    GridSpec,
    IntegrationError,
    bin_areas,
    bin_windows,
    closed_form_antistokes,
    closed_form_stokes,
    integrate,
    n_sp_nested_quadrature,
)
from timebin.pulse_model import PhysicalParams, PulseShape, PulseTrain

from conftest import make_train


def test_stokes_only_matches_closed_form(free_params):
    tr = make_train(free_params, gain=0.7)
    trace = integrate(free_params, tr)
    assert trace.n_s_total == pytest.approx(math.expm1(0.7), rel=1e-7)
    assert trace.n_sp[-1] == pytest.approx(math.expm1(0.7), rel=1e-7)
    assert trace.n_as_total == 0.0


def test_stokes_closed_form_along_trajectory(free_params):
    tr = make_train(free_params, gain=1.3)
    trace = integrate(free_params, tr)
    cf = closed_form_stokes(free_params, tr, trace.grid)
    np.testing.assert_allclose(trace.cum_s, cf, rtol=1e-6, atol=1e-10)


def test_antistokes_relaxation_free(free_params):
    b = 0.9
    tr = make_train(free_params, read_peaks=(1.0,))
    peak = math.sqrt(b / (free_params.gain_prefactor * (free_params.gAS / free_params.delta_R) ** 2
                          * tr.reads[0].intensity_integral))
    tr = tr.with_read_peaks([peak])
    trace = integrate(free_params, tr)
    ns = trace.n_s_total
    assert trace.n_as_total == pytest.approx(ns * -math.expm1(-b), rel=1e-6)
    cf = closed_form_antistokes(free_params, tr, trace.grid[-1], ns)
    assert trace.n_as_total == pytest.approx(float(cf), rel=1e-6)


def test_rk4_and_adaptive_agree(free_params):
    params = PhysicalParams(gamma32=0.5, gamma41=0.5, gamma_c=0.002)
    tr = make_train(params, read_peaks=(1.0, 1.2))
    a = integrate(params, tr)
    b = integrate(params, tr, GridSpec(fixed_step=0.25))
    assert b.n_as_total == pytest.approx(a.n_as_total, rel=1e-6)
    assert b.n_s_total == pytest.approx(a.n_s_total, rel=1e-6)


def test_invariant_holds_for_rk4(free_params):
    tr = make_train(free_params, gain=0.0, read_peaks=(1.5, 2.0))
    trace = integrate(free_params, tr, GridSpec(fixed_step=1.0, initial_n_sp=1.0))
    assert np.max(np.abs(trace.n_sp + trace.cum_as - 1.0)) < 1e-12


def test_initial_excitation_starts_grid_at_first_read(free_params):
    tr = make_train(free_params, gain=0.0, read_peaks=(1.0,))
    trace = integrate(free_params, tr, GridSpec(initial_n_sp=1.0))
    assert trace.grid[0] > tr.write_end


def test_grid_must_cover_pulses(free_params):
    tr = make_train(free_params, read_peaks=(1.0,))
    with pytest.raises(ValueError):
        integrate(free_params, tr, GridSpec(t_start=-10.0, t_end=400.0))


def test_bin_windows_partition_after_write():
    w = PulseShape("gaussian", 0.0, 20.0, 1.0)
    reads = tuple(PulseShape("gaussian", 200.0 + 150 * k, 20.0, 1.0) for k in range(3))
    tr = PulseTrain(w, reads)
    win = bin_windows(tr, 1000.0)
    assert win[0][0] == pytest.approx(60.0 + 0.5 * tr.delay)
    assert [b for _, b in win[:-1]] == [a for a, _ in win[1:]]
    assert win[1] == (275.0, 425.0)
    assert win[-1][1] == 1000.0


def test_bin_areas_rejects_short_grid(free_params):
    tr = make_train(free_params, read_peaks=(1.0, 1.0))
    trace = integrate(free_params, make_train(free_params, read_peaks=(1.0,)))
    with pytest.raises(ValueError):
        bin_areas(trace, tr)


def test_trace_is_read_only(free_params):
    trace = integrate(free_params, make_train(free_params))
    with pytest.raises(ValueError):
        trace.n_sp[0] = 3.0


def test_negative_relaxation_impossible():
    with pytest.raises(ValueError):
        PhysicalParams(gamma_c=-0.1)


def test_nested_quadrature_agrees_with_ode():
    params = PhysicalParams(gamma32=0.5, gamma41=0.5, gamma_c=0.003)
    tr = make_train(params, read_peaks=(1.0, 1.5))
    trace = integrate(params, tr, GridSpec(rtol=1e-11, atol=1e-13))
    t0 = float(trace.grid[0])
    for i in np.searchsorted(trace.grid, (-20.0, 10.0, 250.0, 380.0)):
        q = n_sp_nested_quadrature(params, tr, float(trace.grid[i]), t0)
        assert trace.n_sp[i] == pytest.approx(q, rel=1e-5)


def test_integration_failure_surfaces(free_params, monkeypatch):
    import timebin.dynamics as dyn

    class Bad:
        success = False
        message = "forced"
        t = np.array([1.0])

    monkeypatch.setattr(dyn, "solve_ivp", lambda *a, **k: Bad())
    with pytest.raises(IntegrationError, match="forced"):
        integrate(free_params, make_train(free_params))


@settings(max_examples=8, deadline=None)
@given(st.floats(0.0, 0.02), st.floats(0.0, 0.02))
def test_more_collisional_damping_never_helps(g1, g2):
    lo, hi = sorted((g1, g2))
    results = []
    for gc in (lo, hi):
        params = PhysicalParams(gamma32=0.0, gamma41=0.0, gamma_c=gc)
        tr = make_train(params, read_peaks=(1.0, 1.0))
        trace = integrate(params, tr, GridSpec(fixed_step=1.0))
        results.append((trace.n_as_total, trace.n_s_total))
    assert results[1][0] <= results[0][0] + 1e-12
    assert results[1][1] <= results[0][1] + 1e-12
