import math

import numpy as np
import pytest
import scipy.integrate
from hypothesis import given, settings
from hypothesis import strategies as st
from pytest import approx
from scipy.integrate import quad

from roughwave.chaos import (
    ChaosConfig,
    I0_gaussian,
    TruncationError,
    _cos_tail,
    _erf_shift,
    dh_i1_second_moment,
    dh_i1_variance_physical,
    g1_kernel_eval,
    i1_second_moment,
    i1_variance_physical,
    i2_divergence_scan,
    i2_upper_term,
    i2_upper_term_closed_form,
    increment_profile,
    loglog_slope,
    scan_csv,
    window_transform,
)
from roughwave.norms import isometry_constant


def window_oracle(s, lo, hi, xi):
    f = lambda y: 0.5 * I0_gaussian(s, y)
    re = quad(lambda y: f(y) * math.cos(y * xi), lo, hi, limit=200)[0]
    im = -quad(lambda y: f(y) * math.sin(y * xi), lo, hi, limit=200)[0]
    return complex(re, im)


class TestWindow:
    @pytest.mark.parametrize("s,lo,hi,xi", [
        (0.3, -0.7, 0.7, 0.0), (0.5, -0.2, 1.3, 3.0), (1.2, -3.0, 0.1, -7.5), (0.0, 0.5, 2.5, 40.0),
    ])
    def test_against_quadrature(self, s, lo, hi, xi):
        assert complex(window_transform(s, lo, hi, xi)) == approx(window_oracle(s, lo, hi, xi), abs=1e-10)

    def test_large_frequency_finite(self):
        v = _erf_shift(np.array([-30.0, 0.0, 30.0]), np.array([1e4, 1e4, 1e4]))
        assert np.all(np.isfinite(v))

    @given(st.floats(-3, 3), st.floats(0.01, 3), st.floats(-50, 50))
    def test_conjugate_symmetry(self, lo, width, xi):
        a = window_transform(0.4, lo, lo + width, xi)
        b = window_transform(0.4, lo, lo + width, -xi)
        assert complex(a) == approx(complex(b).conjugate(), abs=1e-12)

    def test_kernel(self):
        assert g1_kernel_eval(0.5, 0.1, 1.0, 0.0) == approx(0.5 * I0_gaussian(0.5, 0.1))
        assert g1_kernel_eval(0.5, 0.6, 1.0, 0.0) == 0.0
        with pytest.raises(ValueError):
            g1_kernel_eval(1.0, 0.0, 1.0, 0.0)


class TestTail:
    def test_zero_frequency(self):
        assert _cos_tail(0.0, 10.0, 0.3) == approx(10.0**-0.6 / 0.6)

    def test_against_split_quadrature(self):
        H, c, w = 0.35, 50.0, 0.7
        f = lambda v: math.cos(w * v) * v ** (-1 - 2 * H)
        edges = np.arange(c, 20000.0, 2 * math.pi / w)
        direct = sum(quad(f, a, b)[0] for a, b in zip(edges[:-1], edges[1:]))
        # remaining oscillatory tail is O(edge^{-1-2H}) small
        assert _cos_tail(w, c, H) == approx(direct, abs=1e-5)


class TestSecondMoment:
    def test_routes_agree(self):
        cfg = ChaosConfig(hurst=0.4, t=1.0, x=0.0)
        spec = i1_second_moment(cfg)
        phys = i1_variance_physical(cfg)
        assert spec.value == approx(phys, rel=1e-6)
        assert spec.truncation_error < 1e-3 * spec.value

    def test_even_in_x(self):
        a = i1_variance_physical(ChaosConfig(0.35, 1.5, 0.4))
        b = i1_variance_physical(ChaosConfig(0.35, 1.5, -0.4))
        assert a == approx(b, rel=1e-12)

    def test_amplitude_quadratic(self):
        a = i1_variance_physical(ChaosConfig(0.3, 1.0, 0.2))
        b = i1_variance_physical(ChaosConfig(0.3, 1.0, 0.2, amplitude=3.0))
        assert b == approx(9 * a, rel=1e-12)

    def test_constant_switch(self):
        cfg = ChaosConfig(0.3, 1.0, 0.0)
        bare = ChaosConfig(0.3, 1.0, 0.0, spectral_constant=False)
        c = isometry_constant(0.3)
        assert i1_second_moment(bare).value == approx(i1_second_moment(cfg).value / c, rel=1e-12)
        assert i1_variance_physical(bare) == approx(i1_variance_physical(cfg) / c, rel=1e-12)

    def test_increment_zero_lag(self):
        cfg = ChaosConfig(0.4, 1.0, 0.0)
        assert dh_i1_second_moment(cfg, 0.0).value == approx(0.0, abs=1e-14)

    def test_increment_routes_agree(self):
        cfg = ChaosConfig(0.3, 1.0, 0.0)
        spec = dh_i1_second_moment(cfg, 2.0**-5).value
        phys = float(dh_i1_variance_physical(cfg, 2.0**-5))
        assert spec == approx(phys, rel=1e-5)

    def test_increment_domain(self):
        with pytest.raises(ValueError):
            dh_i1_second_moment(ChaosConfig(0.4, 1.0, 0.0), 0.6)

    @pytest.mark.filterwarnings("ignore::scipy.integrate.IntegrationWarning")
    def test_truncation_guard(self):
        cfg = ChaosConfig(0.3, 1.0, 0.0, xi_cutoff=1.01, xi_nodes=256)
        try:
            est = i1_second_moment(cfg)
        except TruncationError:
            return
        assert est.truncation_error <= 0.1 * est.value

    def test_config_validation(self):
        with pytest.raises(ValueError):
            ChaosConfig(hurst=0.5)
        with pytest.raises(ValueError):
            ChaosConfig(xi_nodes=10)


class TestSecondChaos:
    def test_upper_term(self):
        for H in (0.1, 0.2, 0.3, 0.45):
            assert i2_upper_term(H) == approx(i2_upper_term_closed_form(H), rel=1e-12)

    def test_profile_power_law(self):
        cfg = ChaosConfig(0.3, 2.0, 0.0)
        hs = 2.0 ** -np.arange(6, 11)
        q = increment_profile(cfg, hs, 4, 4)
        assert loglog_slope(hs, q) == approx(2 * 0.3, abs=0.03)

    def test_scan_monotone_in_eps(self):
        cfg = ChaosConfig(0.3, 2.0, 0.0)
        rows = i2_divergence_scan(cfg, [2.0**-4, 2.0**-6, 2.0**-8], s_count=4, y_count=4)
        vals = [v for _, v in rows]
        assert all(v > 0 for v in vals) and vals[0] < vals[1] < vals[2]

    def test_scan_domain(self):
        with pytest.raises(ValueError):
            i2_divergence_scan(ChaosConfig(0.3, 2.0, 0.0), [1.5])

    def test_csv(self):
        assert scan_csv([(0.5, 1.0, 0.0)]) == "parameter,value,truncation_error\n0.5,1.0,0.0\n"
