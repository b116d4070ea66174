import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from timebin.dynamics import BinBreakdown, DynamicsTrace
from timebin.franson import (
    DelayMismatchError,
    GaussianMode,
    NoiseKind,
    PhaseNoiseModel,
    SampledMode,
    TimeBinState,
    analytic_averaged_counts,
    averaged_counts,
    ideal_state,
    interferometer_counts,
    overlap,
    state_from_trace,
)
from timebin.pulse_model import PulseShape, PulseTrain

THETA = np.linspace(0, 2 * np.pi, 25)


def test_single_bin_has_flat_fringe():
    st1 = ideal_state(1, 150.0, 20.0)
    res = averaged_counts(st1, THETA)
    np.testing.assert_allclose(res.counts1, 0.5, atol=1e-15)


def test_two_bins_half_visibility():
    res = averaged_counts(ideal_state(2, 150.0, 20.0), THETA)
    assert res.visibility == pytest.approx(0.5, abs=1e-9)


def test_phase_shift_moves_fringe():
    a = averaged_counts(ideal_state(2, 150.0, 20.0), THETA)
    b = averaged_counts(ideal_state(2, 150.0, 20.0, phases=[0.0, 0.4]), THETA - 0.4)
    np.testing.assert_allclose(a.counts1, b.counts1, atol=1e-9)


def test_delay_mismatch_rejected():
    st3 = ideal_state(3, 150.0, 20.0)
    with pytest.raises(DelayMismatchError):
        interferometer_counts(st3, 0.0, delay=140.0)
    n1, n2 = interferometer_counts(st3, 0.0, delay=140.0, allow_mismatch=True)
    assert n1 + n2 == pytest.approx(1.0)


def test_unequal_spacing_rejected():
    modes = [GaussianMode(c, 5.0, (c - 40, c + 40)) for c in (0.0, 100.0, 250.0)]
    s = TimeBinState((1 / math.sqrt(3),) * 3, (0.0, 100.0, 250.0), 125.0, tuple(modes), False)
    with pytest.raises(DelayMismatchError):
        averaged_counts(s, THETA)


def test_untruncated_modes_at_six_widths_not_orthonormal():
    # gaussians six widths apart overlap by exp(-9) ~ 1.2e-4
    with pytest.raises(ValueError, match="orthonormal"):
        ideal_state(3, 120.0, 20.0, truncate=False)
    ideal_state(3, 160.0, 20.0, truncate=False)


def test_state_rejects_bad_norm():
    m = GaussianMode(0.0, 1.0, (-5.0, 5.0))
    with pytest.raises(ValueError, match="sum"):
        TimeBinState((0.9,), (0.0,), 0.0, (m,))


def test_sampled_mode_normalized_and_overlap_matches_quad():
    t = np.linspace(-60, 60, 4001)
    g = GaussianMode(0.0, 10.0, (-60.0, 60.0))
    s = SampledMode(t, 3.0 * g(t), (-60.0, 60.0)).normalized()
    assert overlap(s, s) == pytest.approx(1.0, abs=1e-12)
    assert overlap(s, g) == pytest.approx(1.0, abs=1e-6)


def test_noise_chunks_independent_of_workers():
    st3 = ideal_state(3, 150.0, 20.0)
    nm = PhaseNoiseModel(NoiseKind.IID_GAUSSIAN, 1.0, 30_000, seed=7)
    a = averaged_counts(st3, THETA, nm, workers=1)
    b = averaged_counts(st3, THETA, nm, workers=4)
    assert np.array_equal(a.counts1, b.counts1)
    assert np.array_equal(a.stderr, b.stderr)


def test_different_seeds_differ():
    st3 = ideal_state(3, 150.0, 20.0)
    a = averaged_counts(st3, THETA, PhaseNoiseModel(variance=1.0, sample_count=5000, seed=1))
    b = averaged_counts(st3, THETA, PhaseNoiseModel(variance=1.0, sample_count=5000, seed=2))
    assert not np.array_equal(a.counts1, b.counts1)


def test_noise_model_validation():
    with pytest.raises(ValueError):
        PhaseNoiseModel(variance=-1.0)
    with pytest.raises(ValueError):
        PhaseNoiseModel(sample_count=0)


def test_analytic_counts_need_equal_bins():
    with pytest.raises(ValueError):
        analytic_averaged_counts(ideal_state([1, 2, 1], 150.0, 20.0), THETA, 0.5)


def test_fit_amplitude_recovers_exact():
    res = averaged_counts(ideal_state(4, 150.0, 20.0), THETA)
    assert res.fit_amplitude == pytest.approx(0.75, abs=1e-9)


@settings(max_examples=40, deadline=None)
@given(
    mags=st.lists(st.floats(0.05, 1.0), min_size=2, max_size=5),
    theta=st.floats(-10, 10),
    data=st.data(),
)
def test_counts_sum_to_one_and_lie_in_unit_interval(mags, theta, data):
    phases = data.draw(st.lists(st.floats(-math.pi, math.pi), min_size=len(mags), max_size=len(mags)))
    s = ideal_state(np.square(mags), 150.0, 20.0, phases)
    n1, n2 = interferometer_counts(s, theta)
    assert n1 + n2 == pytest.approx(1.0, abs=1e-12)
    assert -1e-12 <= n1 <= 1 + 1e-12


def _synthetic(J, rng):
    w = PulseShape("gaussian", 0.0, 20.0, 1.0)
    reads = tuple(PulseShape("gaussian", 200.0 + 150.0 * k, 20.0, 1.0, float(rng.uniform(-3, 3)))
                  for k in range(J))
    train = PulseTrain(w, reads)
    g = np.linspace(-120.0, reads[-1].center + 100.0, 3000)
    amps = rng.uniform(0.05, 1.0, J)
    flux = sum(a * np.exp(-((g - r.center) / 20.0) ** 2) for a, r in zip(amps, reads))
    z = np.zeros_like(g)
    trace = DynamicsTrace(g, z, z, flux, z, np.cumsum(flux))
    from timebin.dynamics import bin_areas
    return trace, bin_areas(trace, train), train


@pytest.mark.parametrize("seed", range(5))
def test_state_from_trace_normalized(seed):
    rng = np.random.default_rng(seed)
    trace, bins, train = _synthetic(int(rng.integers(1, 6)), rng)
    s = state_from_trace(bins, train, trace=trace)
    assert s.populations.sum() == pytest.approx(1.0, abs=1e-12)
    np.testing.assert_allclose(s.populations, np.array(bins.areas) / bins.total, rtol=1e-12)
    np.testing.assert_allclose(np.angle(s.amplitudes), [r.phase for r in train.reads], atol=1e-12)


def test_state_from_trace_rejects_empty():
    w = PulseShape("gaussian", 0.0, 20.0, 1.0)
    train = PulseTrain(w, (PulseShape("gaussian", 200.0, 20.0, 1.0),))
    with pytest.raises(ValueError):
        state_from_trace(BinBreakdown(((100.0, 300.0),), (0.0,), 0.0), train)
