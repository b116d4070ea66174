import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from timebin.pulse_model import (
    ParameterError,
    PhysicalParams,
    PulseShape,
    PulseTrain,
    coupling_F,
    coupling_G,
    eval_shape,
    gain_alpha,
    gain_beta,
    intensity_cumulative,
    integrated_gain,
    pulse_exposure,
    read_field,
    relaxation_rates,
    write_peak_for_gain,
)
from scipy.integrate import quad


def _train(write_peak=2.0, read_peaks=(3.0,), spacing=150.0, duration=20.0, phases=None):
    phases = phases or [0.0] * len(read_peaks)
    write = PulseShape("gaussian", 0.0, duration, write_peak)
    reads = [PulseShape("gaussian", 200.0 + k * spacing, duration, p, ph)
             for k, (p, ph) in enumerate(zip(read_peaks, phases))]
    return PulseTrain(write, tuple(reads))


class TestEvalShape:
    def test_gaussian_peak_is_one(self):
        assert eval_shape(PulseShape("gaussian", 0.0, 1.0, 1.0), 0.0) == 1.0

    def test_gaussian_one_width_out(self):
        assert eval_shape(PulseShape("gaussian", 0.0, 1.0, 1.0), 1.0) == pytest.approx(math.exp(-0.5), abs=1e-15)

    def test_square_outside_half_width(self):
        assert eval_shape(PulseShape("square", 5.0, 2.0, 1.0), 6.01) == 0.0
        assert eval_shape(PulseShape("square", 5.0, 2.0, 1.0), 5.99) == 1.0

    @pytest.mark.parametrize("kind", ["gaussian", "squared_cosine", "square"])
    def test_bounded_with_unit_max_at_center(self, kind):
        p = PulseShape(kind, 3.0, 2.0, 1.0)
        t = np.linspace(-20, 20, 4001)
        f = eval_shape(p, t)
        assert f.min() >= 0 and f.max() <= 1
        assert eval_shape(p, 3.0) == 1.0

    @pytest.mark.parametrize("kind", ["gaussian", "squared_cosine", "square"])
    def test_intensity_integral_matches_quadrature(self, kind):
        p = PulseShape(kind, 1.0, 2.5, 1.0)
        num = quad(lambda t: eval_shape(p, t) ** 2, -40, 40, points=[1.0 - 2.5, 1.0 - 1.25, 1.0, 1.0 + 1.25, 1.0 + 2.5], limit=200)[0]
        assert p.intensity_integral == pytest.approx(num, rel=1e-10)

    @pytest.mark.parametrize("kind", ["gaussian", "squared_cosine", "square"])
    def test_cumulative_intensity_matches_quadrature(self, kind):
        p = PulseShape(kind, 0.0, 2.0, 1.0)
        for t in (-1.5, -0.3, 0.0, 0.7, 1.9, 5.0):
            num = quad(lambda s: eval_shape(p, s) ** 2, -30, t, points=[x for x in (-2.0, -1.0, 0.0, 1.0, 2.0) if x < t], limit=200)[0]
            assert intensity_cumulative(p, t) == pytest.approx(num, rel=1e-9, abs=1e-14)

    def test_invalid_pulses_rejected(self):
        with pytest.raises(ParameterError):
            PulseShape("gaussian", 0.0, 0.0, 1.0)
        with pytest.raises(ParameterError):
            PulseShape("gaussian", 0.0, 1.0, -1.0)
        with pytest.raises(ValueError):
            PulseShape("lorentzian", 0.0, 1.0, 1.0)


class TestParams:
    def test_partial_rate_above_total_rejected(self):
        with pytest.raises(ParameterError) as e:
            PhysicalParams(gamma32=1.5)
        assert e.value.field == "gamma32"

    def test_zero_detuning_rejected(self):
        with pytest.raises(ParameterError) as e:
            PhysicalParams(delta_R=0.0)
        assert e.value.field == "delta_R"

    @pytest.mark.parametrize("name", ["N_atoms", "chi", "gS", "gAS"])
    def test_nonpositive_rejected(self, name):
        with pytest.raises(ParameterError):
            PhysicalParams(**{name: 0.0})

    def test_chi_from_fiber_length(self):
        # c / 3 cm in units of gamma = 3.613e7 / s
        assert PhysicalParams.chi_from_length(3.0, 3.613e7) == pytest.approx(2.99792458e10 / 3 / 3.613e7)


class TestTrain:
    def test_read_centers_must_increase(self):
        w = PulseShape("gaussian", 0.0, 20.0, 1.0)
        with pytest.raises(ParameterError):
            PulseTrain(w, (PulseShape("gaussian", 400.0, 20.0, 1.0), PulseShape("gaussian", 300.0, 20.0, 1.0)))

    def test_separation_factor_enforced(self):
        w = PulseShape("gaussian", 0.0, 20.0, 1.0)
        reads = (PulseShape("gaussian", 200.0, 20.0, 1.0), PulseShape("gaussian", 310.0, 20.0, 1.0))
        with pytest.raises(ParameterError):
            PulseTrain(w, reads)
        PulseTrain(w, reads, separation_factor=5.0)

    def test_delay_must_exceed_write_duration(self):
        w = PulseShape("gaussian", 0.0, 20.0, 1.0)
        # write ends at 60, read starts at 130 - 60 = 70: delay 10 < 20
        with pytest.raises(ParameterError):
            PulseTrain(w, (PulseShape("gaussian", 130.0, 20.0, 1.0),))
        assert PulseTrain(w, (PulseShape("gaussian", 200.0, 20.0, 1.0),)).delay == pytest.approx(80.0)


class TestCouplings:
    def test_G_substitution(self):
        params = PhysicalParams(gS=1.0, delta_W=20.0)
        tr = _train(write_peak=2.0)
        assert coupling_G(params, tr, 0.0) == pytest.approx(0.1, rel=1e-15)
        assert coupling_G(params, tr, 20.0) == pytest.approx(0.1 * math.exp(-0.5), rel=1e-14)

    def test_G_zero_outside_write(self):
        params = PhysicalParams()
        tr = PulseTrain(PulseShape("square", 0.0, 10.0, 2.0), (PulseShape("gaussian", 200.0, 20.0, 1.0),))
        assert coupling_G(params, tr, 50.0) == 0.0

    def test_F_single_read(self):
        params = PhysicalParams(gAS=1.0, delta_R=20.0)
        tr = _train(read_peaks=(3.0,))
        assert coupling_F(params, tr, 200.0) == pytest.approx(0.15, rel=1e-14)
        assert abs(coupling_F(params, tr, 2000.0)) == 0.0

    def test_F_two_reads_neighbour_tail(self):
        # spacing 6 durations: the other pulse contributes exp(-18) of its peak
        params = PhysicalParams(gAS=1.0, delta_R=20.0)
        tr = _train(read_peaks=(3.0, 4.0), spacing=120.0)
        f2 = coupling_F(params, tr, 320.0)
        assert f2.real == pytest.approx(4.0 / 20.0 + 3.0 / 20.0 * math.exp(-18.0), rel=1e-14)
        tail = abs(f2 - 4.0 / 20.0) / (4.0 / 20.0)
        assert tail == pytest.approx(0.75 * math.exp(-18.0), rel=1e-6)
        assert tail < 1.2e-8

    def test_tail_of_other_pulses_bounded_at_centres(self):
        # at a read centre each neighbour six widths away adds exp(-18) ~ 1.5e-8
        tr = _train(read_peaks=(1.0, 1.0, 1.0, 1.0), spacing=120.0)
        for c in (200.0, 320.0, 440.0, 560.0):
            terms = sorted((float(eval_shape(r, c)) for r in tr.reads), reverse=True)
            assert terms[0] == 1.0
            assert sum(terms[1:]) <= 2 * math.exp(-18.0) * (1 + 1e-9)
            assert sum(terms[3:]) < 1e-30

    def test_alpha_hand_value(self):
        # N = chi = 1e4, G = 0.01 -> alpha = 2 * 1e-4
        params = PhysicalParams(N_atoms=1e4, chi=1e4, gS=1.0, delta_W=20.0)
        tr = _train(write_peak=0.2)
        assert coupling_G(params, tr, 0.0) == pytest.approx(0.01)
        assert gain_alpha(params, tr, 0.0) == pytest.approx(2e-4, rel=1e-13)

    def test_beta_quadruples_with_peak(self):
        params = PhysicalParams()
        b1 = gain_beta(params, _train(read_peaks=(1.0,)), 200.0)
        b2 = gain_beta(params, _train(read_peaks=(2.0,)), 200.0)
        assert b2 == pytest.approx(4 * b1, rel=1e-14)

    def test_alpha_zero_without_write(self):
        assert gain_alpha(PhysicalParams(), _train(write_peak=0.0), 0.0) == 0.0

    def test_read_phase_enters_field(self):
        tr = _train(read_peaks=(1.0,), phases=[math.pi / 2])
        assert read_field(tr, 200.0) == pytest.approx(1j, abs=1e-15)


class TestRelaxation:
    def test_all_off(self):
        params = PhysicalParams(gamma_c=0.0)
        _, _, tot = relaxation_rates(params, _train(write_peak=0.0, read_peaks=(0.0,)), 10.0)
        assert tot == 0.0

    def test_write_pumping_hand_value(self):
        params = PhysicalParams(delta_W=20.0, gamma32=0.5)
        gw, gr, tot = relaxation_rates(params, _train(write_peak=2.0), 0.0)
        assert gw == pytest.approx(0.005, rel=1e-14)
        assert tot == pytest.approx(gw + gr)

    def test_signal_to_noise_ratio_constant_in_write_window(self):
        params = PhysicalParams(gamma32=0.3)
        expected = 2 * params.N_atoms * params.gS**2 / (params.chi * params.gamma32)
        for peak in (0.1, 1.0, 3.0):
            tr = _train(write_peak=peak)
            for t in (-30.0, -5.0, 0.0, 12.0, 40.0):
                a = gain_alpha(params, tr, t)
                gw = relaxation_rates(params, tr, t)[0]
                assert a / gw == pytest.approx(expected, rel=1e-12)


@settings(max_examples=60, deadline=None)
@given(
    s=st.floats(0.05, 20.0),
    t=st.floats(-100.0, 700.0),
    wp=st.floats(0.01, 5.0),
    rp=st.lists(st.floats(0.0, 5.0), min_size=1, max_size=3),
)
def test_rates_scale_quadratically_and_stay_nonnegative(s, t, wp, rp):
    params = PhysicalParams(gamma32=0.4, gamma41=0.6, gamma_c=0.01)
    a = _train(wp, tuple(rp))
    b = _train(wp * s, tuple(x * s for x in rp))
    for f in (gain_alpha, gain_beta):
        assert f(params, a, t) >= 0
        assert f(params, b, t) == pytest.approx(s * s * f(params, a, t), rel=1e-12, abs=1e-300)
    ra, rb = relaxation_rates(params, a, t), relaxation_rates(params, b, t)
    assert ra[2] >= 0
    assert rb[0] == pytest.approx(s * s * ra[0], rel=1e-12, abs=1e-300)
    assert rb[1] == pytest.approx(s * s * ra[1], rel=1e-12, abs=1e-300)
    G = coupling_G(params, a, t)
    if G**2 > 1e-290:  # subnormal squares lose digits
        assert gain_alpha(params, a, t) / G**2 == pytest.approx(params.gain_prefactor, rel=1e-12)


def test_write_calibration_roundtrip():
    params = PhysicalParams()
    w = PulseShape("squared_cosine", 0.0, 30.0, 0.0)
    w = w.with_peak(write_peak_for_gain(params, w, 0.7))
    assert integrated_gain(params, w) == pytest.approx(0.7, rel=1e-14)


def test_pulse_exposure_matches_quadrature():
    params = PhysicalParams()
    tr = _train(read_peaks=(0.4,))
    num = quad(lambda t: gain_beta(params, tr, t), 50, 350, points=[200.0], limit=200)[0]
    assert pulse_exposure(params, tr.reads[0]) == pytest.approx(num, rel=1e-10)
