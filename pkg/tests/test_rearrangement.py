import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from krrlab.errors import DomainError
from krrlab.fourier import RadialKernel
from krrlab.index_functions import Power
from krrlab.rearrangement import (PowerWeight, StepFunction, boas_check,
                                  corollary_range_function,
                                  decreasing_rearrangement,
                                  fundamental_function_check, indicator,
                                  lorentz_norm, marcinkiewicz_norm,
                                  orlicz_lorentz_norm, radial_step_function,
                                  tight_range_check)

EXP_PROFILE = lambda r: np.exp(-np.asarray(r, dtype=float))

samples_strategy = st.lists(
    st.tuples(st.floats(min_value=-5, max_value=5,
                        allow_nan=False, allow_infinity=False),
              st.floats(min_value=0.01, max_value=3.0)),
    min_size=1, max_size=10)


class TestRearrangement:
    def test_sorting(self):
        sf = decreasing_rearrangement([(3, 1), (1, 1), (2, 1)])
        np.testing.assert_array_equal(sf.breakpoints, [1, 2, 3])
        np.testing.assert_array_equal(sf.values, [3, 2, 1])

    def test_indicator(self):
        sf = indicator(0.7)
        assert sf.breakpoints[0] == 0.7 and sf.values[0] == 1.0

    @given(samples_strategy)
    @settings(max_examples=60, deadline=None)
    def test_equimeasurability(self, samples):
        sf = decreasing_rearrangement(samples)
        for p in (1, 2):
            direct = sum(abs(v) ** p * w for v, w in samples)
            assert sf.lp_integral(p) == pytest.approx(direct, rel=1e-12)

    def test_weights_must_be_positive(self):
        with pytest.raises(DomainError):
            decreasing_rearrangement([(1.0, 0.0)])

    def test_step_function_validation(self):
        with pytest.raises(DomainError):
            StepFunction(np.array([1.0, 0.5]), np.array([1.0, 0.5]))
        with pytest.raises(DomainError):
            StepFunction(np.array([0.5, 1.0]), np.array([0.5, 1.0]))

    def test_radial_monotone_profile(self):
        sf = radial_step_function(EXP_PROFILE, 1, np.geomspace(0.01, 10, 50))
        # omega_1 = 2: breakpoints are t = 2r and values sample the profile
        assert sf.values[0] == pytest.approx(math.exp(-0.01))
        assert sf.breakpoints[0] == pytest.approx(0.02)


class TestLorentzNorms:
    def test_indicator_any_q(self):
        psi = Power(0.5, T=1e6)
        for q in (1.0, 2.0, 3.0):
            assert lorentz_norm(indicator(2.0), psi, q) == pytest.approx(
                math.sqrt(2.0), rel=1e-12)

    def test_lp_recovery(self):
        samples = [(2.5, 0.7), (1.0, 1.3), (0.3, 2.0)]
        g = decreasing_rearrangement(samples)
        for p in (1.0, 2.0):
            direct = sum(abs(v) ** p * w for v, w in samples) ** (1 / p)
            got = lorentz_norm(g, Power(1.0 / p, T=1e6), p)
            assert got == pytest.approx(direct, rel=1e-12)

    def test_zero_function(self):
        g = decreasing_rearrangement([(0.0, 1.0)])
        assert lorentz_norm(g, Power(0.5, T=1e6), 2.0) == 0.0

    def test_marcinkiewicz_cases(self):
        assert marcinkiewicz_norm(indicator(3.0), Power(1.0, T=1e6)) == 3.0
        atom = decreasing_rearrangement([(5.0, 0.25)])
        assert marcinkiewicz_norm(atom, Power(1.0, T=1e6)) == pytest.approx(1.25)

    def test_endpoint_inclusion_random(self):
        # M-norm <= Lorentz(q=1) norm for every increasing phi
        rng = np.random.default_rng(0)
        for _ in range(100):
            m = int(rng.integers(1, 8))
            sf = decreasing_rearrangement(
                [(rng.random() * 3, rng.random() + 0.1) for _ in range(m)])
            phi = Power(float(rng.random() * 1.5 + 0.1), T=1e9)
            assert marcinkiewicz_norm(sf, phi) <= lorentz_norm(sf, phi, 1.0) \
                + 1e-12


class TestOrliczLorentz:
    def test_unit_indicator_flat_weight(self):
        got = orlicz_lorentz_norm(indicator(1.0), Power(2.0, T=1e300),
                                  PowerWeight(0.0))
        assert got == pytest.approx(1.0, rel=1e-9)

    def test_sqrt_two_case(self):
        # rho=2, p=1/2, s=1: the gauge is (1/(1-p))^(1/rho) = sqrt(2)
        got = orlicz_lorentz_norm(indicator(1.0), Power(2.0, T=1e300),
                                  PowerWeight(0.5))
        assert got == pytest.approx(math.sqrt(2), rel=1e-9)

    def test_zero_function(self):
        g = decreasing_rearrangement([(0.0, 2.0)])
        assert orlicz_lorentz_norm(g, Power(2.0, T=1e300), PowerWeight(0.5)) == 0.0

    @given(st.floats(min_value=0.25, max_value=4.0))
    @settings(max_examples=30, deadline=None)
    def test_absolute_homogeneity(self, c):
        g = decreasing_rearrangement([(2.0, 0.5), (1.0, 1.0), (0.25, 2.0)])
        Phi, w = Power(2.0, T=1e300), PowerWeight(0.5)
        base = orlicz_lorentz_norm(g, Phi, w)
        scaled = orlicz_lorentz_norm(g.scale(c), Phi, w)
        assert scaled == pytest.approx(c * base, rel=1e-7)

    def test_non_integrable_weight_rejected(self):
        with pytest.raises(DomainError):
            orlicz_lorentz_norm(indicator(1.0), Power(2.0, T=1e300),
                                PowerWeight(1.5))

    def test_quasi_triangle_constant_reported(self):
        # quasi-norm: ||f+g|| <= C(||f|| + ||g||) with a modest constant on
        # random pairs (the gauge with Phi = t^(1/2) is not subadditive)
        rng = np.random.default_rng(1)
        Phi, w = Power(0.5, T=1e300), PowerWeight(0.25)
        worst = 0.0
        for _ in range(50):
            vals = rng.random(4) * 3
            widths = rng.random(4) + 0.1
            f = decreasing_rearrangement(zip(vals, widths))
            g = decreasing_rearrangement(zip(vals[::-1], widths))
            merged = decreasing_rearrangement(
                list(zip(vals, widths)) + list(zip(vals[::-1], widths)))
            num = orlicz_lorentz_norm(merged, Phi, w)
            den = (orlicz_lorentz_norm(f, Phi, w)
                   + orlicz_lorentz_norm(g, Phi, w))
            worst = max(worst, num / den)
        assert worst < 4.0


class TestFundamentalFunction:
    @pytest.mark.parametrize("rho,p", [(2.0, 0.5), (0.75, 0.25), (1.0, 0.5)])
    def test_closed_form_match(self, rho, p):
        res = fundamental_function_check(rho, p, np.geomspace(1e-3, 1e3, 25))
        assert res["deviation_closed_form"] <= 1e-6
        assert res["deviation_stated_form"] <= 1e-12

    def test_small_s_limit(self):
        # the gauge of chi_(0,s) vanishes as s -> 0 like (2 sqrt(s))^(1/2)
        s = 1e-9
        got = orlicz_lorentz_norm(indicator(s), Power(2.0, T=1e300),
                                  PowerWeight(0.5))
        assert got == pytest.approx((2 * math.sqrt(s)) ** 0.5, rel=1e-8)

    def test_p_zero_reduces_to_orlicz(self):
        # w == 1: gauge of chi_(0,s) is s^(1/rho) = 1/Phi^{-1}(1/s)
        for s in (0.25, 1.0, 4.0):
            got = orlicz_lorentz_norm(indicator(s), Power(2.0, T=1e300),
                                      PowerWeight(0.0))
            assert got == pytest.approx(s**0.5, rel=1e-9)

    def test_bad_parameters(self):
        with pytest.raises(DomainError):
            fundamental_function_check(2.0, 1.5, [1.0])
        with pytest.raises(DomainError):
            fundamental_function_check(-1.0, 0.5, [1.0])


class TestBoas:
    def test_exponential_profile_dilate_stable(self):
        res = boas_check(EXP_PROFILE, Power(0.25, T=1e300), 2.0, 1)
        assert res["passes"]
        assert res["ratio_max"] / res["ratio_min"] < 1.2

    def test_flat_weight_plancherel_adjacent(self):
        res = boas_check(EXP_PROFILE, Power(1e-9, T=1e300), 2.0, 1)
        assert res["passes"]
        assert np.isfinite(res["ratio_min"]) and res["ratio_min"] > 0

    def test_increasing_profile_rejected(self):
        with pytest.raises(DomainError):
            boas_check(lambda r: np.exp(-1.0 / np.asarray(r, dtype=float)),
                       Power(0.25, T=1e300), 2.0, 1)


class TestTightRange:
    def test_exponent_identity(self):
        # the range function for psi = t^rho has exponent 1 + 1/p - 1/rho,
        # which matches the classical space with index p*rho'/(rho'+p)
        p, rho = 2.0, 0.8
        Psi = corollary_range_function(Power(rho), p)
        assert isinstance(Psi, Power)
        rho_star = rho / (rho - 1)  # dual exponent (negative for rho < 1)
        m = p * rho_star / (rho_star + p)
        assert Psi.rho == pytest.approx(1 + 1 / p - 1 / rho, rel=1e-12)
        assert 1.0 / m == pytest.approx(Psi.rho, rel=1e-12)

    def test_identity_multiplier(self):
        # F_d kappa == 1 and s = t make T the identity; with psi = t the
        # range space is L^(p,q) itself so the ratio is ~1 for decreasing f
        rr = np.geomspace(1e-6, 1e8, 40)
        ident = RadialKernel("table", d=1, table_r=rr,
                             table_F=np.ones_like(rr), certify=False)
        res = tight_range_check(Power(1.0, T=1e300), Power(1.0, T=1e18),
                                ident, p=2.0, q=2.0,
                                profiles={"exp": EXP_PROFILE},
                                dilates=(0.5, 1.0, 2.0),
                                r_grid=np.geomspace(1e-3, 1e3, 61))
        assert res["spread"] < 1.2
        for row in res["rows"]:
            assert row["ratio"] == pytest.approx(1.0, abs=0.1)

    def test_exponential_kernel_bounded_spread(self):
        kernel = RadialKernel("exponential", d=1)
        res = tight_range_check(Power(2.0 / 3.0, T=1e300),
                                Power(4.0, T=1e18), kernel, p=1.5, q=2.0,
                                profiles={"exp": EXP_PROFILE},
                                dilates=(0.5, 1.0, 2.0),
                                r_grid=np.geomspace(1e-3, 1e3, 61))
        assert res["passes"] and res["spread"] < 50

    def test_rho_precondition(self):
        kernel = RadialKernel("exponential", d=1)
        with pytest.raises(DomainError):
            tight_range_check(Power(0.5, T=1e300), Power(2.0, T=1e18),
                              kernel, p=2.0, q=2.0,
                              profiles={"exp": EXP_PROFILE})
