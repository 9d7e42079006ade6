import math

import numpy as np
import pytest
from scipy.optimize import minimize_scalar

from remag.models import re_signal_full_echo
from remag.sensing import (
    ReadoutModel,
    corrected_sensitivity,
    normalize,
    optimal_interrogation_times,
    rabi_asymptote,
    re_coefficient,
    readout_factors,
    repeated_readout_gain,
    sensitivity_from_trace,
    sensitivity_ideal,
    sensitivity_ratio_re_ramsey,
)
from remag.units import GAMMA_E_RAD_PER_S_PER_T as GAMMA
from remag.units import mhz_to_rad

W17 = mhz_to_rad(17.0)


class TestIdeal:
    def test_re_coefficient_minimum(self):
        res = minimize_scalar(re_coefficient, bounds=(1.5, 3.0),
                              method="bounded")
        assert res.fun == pytest.approx(1.3801, abs=1e-3)
        assert res.x == pytest.approx(2.3311, abs=0.02)

    def test_re_coefficient_rejects_refocus(self):
        with pytest.raises(ValueError):
            re_coefficient(2 * math.pi)

    def test_ratio_minimum(self):
        res = minimize_scalar(sensitivity_ratio_re_ramsey,
                              bounds=(0.3 * math.pi, 1.5 * math.pi),
                              method="bounded")
        assert 1.19 <= res.fun <= 1.22
        assert 0.7 * math.pi <= res.x <= 0.9 * math.pi

    def test_scalings(self):
        t = 2e-6
        assert sensitivity_ideal("ramsey", t) == pytest.approx(
            1.0 / (GAMMA * math.sqrt(t)))
        assert sensitivity_ideal("rotary_echo", t, theta=math.pi) == \
            pytest.approx(re_coefficient(math.pi) / (GAMMA * math.sqrt(t)))
        # pi-RE is pi/2 times worse than Ramsey at equal t
        ratio = sensitivity_ideal("rotary_echo", t, theta=math.pi) / \
            sensitivity_ideal("ramsey", t)
        assert ratio == pytest.approx(math.pi / 2)

    def test_rabi_beat_minima_approach_asymptote(self):
        omega = W17
        asym = rabi_asymptote(omega)
        for k in (10, 100, 1000):
            x = (2 * k + 1.5) * math.pi
            eta = sensitivity_ideal("rabi", x / omega, omega=omega)
            assert eta == pytest.approx(asym * math.sqrt(x / (x + 2)), rel=1e-9)
        # the minima converge to the asymptote from below
        x = 2001.5 * math.pi
        assert sensitivity_ideal("rabi", x / omega, omega=omega) == \
            pytest.approx(asym, rel=1e-3)

    def test_rabi_insensitive_phase(self):
        # near t Omega = 2 pi k the signal has no field dependence;
        # rounding may leave a huge finite value instead of inf
        eta = sensitivity_ideal("rabi", 2 * math.pi / W17, omega=W17)
        assert eta > 100 * rabi_asymptote(W17)

    def test_full_echo_warning(self):
        with pytest.warns(UserWarning):
            sensitivity_ideal("rotary_echo", 1.3e-7, theta=math.pi, omega=W17)


class TestNormalize:
    def test_values_and_errors(self):
        out = normalize(0.7, 1.0, 0.5, ds=0.01, dr0=0.02, dr1=0.02)
        assert float(out.values) == pytest.approx(0.4)
        # quadrature of the three exact partial derivatives
        span = 0.5
        expect = math.sqrt((0.01 / span) ** 2
                           + (0.02 * 0.2 / span ** 2) ** 2
                           + (0.02 * (0.2 / span ** 2 - 1 / span)) ** 2)
        assert float(out.errors) == pytest.approx(expect)

    def test_degenerate_references(self):
        with pytest.raises(ZeroDivisionError):
            normalize(0.5, 0.8, 0.8)


class TestFromTrace:
    @pytest.mark.parametrize("theta", [0.75 * math.pi, math.pi, 5 * math.pi])
    def test_recovers_ideal(self, theta):
        n = 8
        t = n * 2 * theta / W17
        dw = mhz_to_rad(np.linspace(-6.0, 6.0, 4001))
        sbar = re_signal_full_echo(theta, W17, dw, n)
        curve = sensitivity_from_trace(dw, sbar, t, theta=theta)
        ideal = sensitivity_ideal("rotary_echo", t, theta=theta)
        assert curve.eta_min == pytest.approx(ideal, rel=1e-2)

    def test_needs_resolution(self):
        dw = mhz_to_rad(np.linspace(-6.0, 6.0, 10))
        sbar = re_signal_full_echo(math.pi, W17, dw, 40)
        with pytest.raises(ValueError):
            sensitivity_from_trace(dw, sbar, 40 * 2 * math.pi / W17,
                                   theta=math.pi)


class TestReadout:
    def test_detection_factor_value(self):
        r = ReadoutModel(n0=0.0022, n1=0.0015)
        c, c_a, c_nr = readout_factors(r, math.pi, 0.0, 1e-6)
        assert c == pytest.approx(6.64e-3, rel=0.02)
        assert c_a == 1.0
        # at theta = k pi the general form reduces to the simple one
        reduced = (1 + 3 * (r.n0 + r.n1) / (r.n0 - r.n1) ** 2) ** -0.5
        assert c == pytest.approx(reduced, rel=1e-12)

    def test_repeated_readout_gain(self):
        r100 = ReadoutModel(n0=0.0022, n1=0.0015, n_r=100)
        gain = repeated_readout_gain(r100)
        assert 9.5 <= gain <= 10.5

    def test_hyperfine_factor(self):
        r = ReadoutModel(n0=0.0022, n1=0.0015)
        a = mhz_to_rad(2.17)
        # beat node: 2 A t sin(theta/2)/theta = 2 pi / 3 makes C_A = 0
        t = (2 * math.pi / 3) * math.pi / (2 * a * math.sin(math.pi / 2))
        _, c_a, _ = readout_factors(r, math.pi, a, t)
        assert c_a == pytest.approx(0.0, abs=1e-9)
        assert corrected_sensitivity(1.0, 0.5, 0.0, 1.0, 1e-6) == math.inf

    def test_corrected_overhead(self):
        eta = corrected_sensitivity(1.0, 1.0, 1.0, 1.0, t=1e-6, t_d=3e-6)
        assert eta == pytest.approx(2.0)

    def test_optimal_times_spacing(self):
        a = mhz_to_rad(2.17)
        times = optimal_interrogation_times(math.pi, W17, a, 5e-6)
        # principal C_A maxima recur every pi theta/(A sin(theta/2))
        spacing = math.pi ** 2 / a
        assert np.allclose(np.diff(times), spacing, rtol=0.1)
        no_hf = optimal_interrogation_times(math.pi, W17, 0.0, 1e-6)
        assert no_hf.size == int(1e-6 / (2 * math.pi / W17))
