"""Explicit speed bounds: closed forms, regimes, and the r-family."""

import math

import pytest

from conftest import AD_OPT_GAUSS_P2_H1, K1_GAUSS_P2, K2_GAUSS_P2, rel
from wavespeed.bounds import (
    ad_upper,
    ad_upper_opt,
    bound_window,
    k1,
    k2,
    speed_bounds,
)
from wavespeed.charfun import ModelParams
from wavespeed.errors import DomainError
from wavespeed.kernels import (
    DiracKernel,
    GaussianKernel,
    TwoPointKernel,
    UniformKernel,
)
from wavespeed.solver import solve_critical

GAUSS1 = GaussianKernel(1.0)


class TestExplicitConstants:
    def test_k1_closed_form(self):
        # q = sqrt((p-1)/(1+(p/2)m2)) = 1/sqrt(3) at p=2, m2=2, and
        # k1 = 2q + p M'(q) = 2q + 4q e^{q^2}
        q = 1.0 / math.sqrt(3.0)
        expected = 2.0 * q + 4.0 * q * math.exp(q * q)
        assert rel(k1(2.0, GAUSS1), expected) < 1e-14
        assert rel(k1(2.0, GAUSS1), K1_GAUSS_P2) < 1e-14

    def test_k2_closed_form(self):
        # ln(p M(sqrt(ln p)))/sqrt(ln p) with M = e^{lam^2} collapses to
        # ln(p^2)/sqrt(ln p) = 2 sqrt(ln p)
        assert rel(k2(2.0, GAUSS1), 2.0 * math.sqrt(math.log(2.0))) < 1e-14
        assert rel(k2(2.0, GAUSS1), K2_GAUSS_P2) < 1e-14

    def test_k2_general_identity(self):
        for kernel in (UniformKernel(1.0), TwoPointKernel(1.0)):
            for p in (2.0, 3.0):
                root = math.sqrt(math.log(p))
                expected = math.log(p * kernel.mgf(root)) / root
                assert rel(k2(p, kernel), expected) < 1e-14

    def test_dirac_k2_is_exact_speed(self):
        # point kernel: M = 1, so k2 = sqrt(ln p), which is exactly the
        # unit-delay speed; the upper bound is sharp there
        for p in (2.0, math.e, 5.0):
            assert rel(k2(p, DiracKernel()), math.sqrt(math.log(p))) < 1e-14


class TestSpeedBounds:
    def test_short_delay_regime(self):
        b = speed_bounds(ModelParams(p=2.0, h=0.5), GAUSS1)
        assert b.regime == "h<=1"
        assert rel(b.upper_k1, b.k1 / 1.5) < 1e-15
        assert rel(b.upper_k2, b.k2 / 0.5) < 1e-15
        assert rel(b.lower_log, 2.0 * math.sqrt(math.log(2.0)) / 1.5) < 1e-15
        assert b.lower == max(b.lower_add, b.lower_log)
        assert b.upper == min(b.upper_k1, b.upper_k2)

    def test_long_delay_regime(self):
        b = speed_bounds(ModelParams(p=2.0, h=4.0), GAUSS1)
        assert b.regime == "h>=1"
        assert rel(b.upper_k1, b.k1 / 2.0) < 1e-15
        assert rel(b.upper_k2, b.k2 / 2.0) < 1e-15
        assert rel(b.lower_log, math.sqrt(math.log(2.0)) / 4.0) < 1e-15

    def test_regimes_join_continuously(self):
        # at h = 1 both branches give the same four candidates
        b = speed_bounds(ModelParams(p=2.0, h=1.0), GAUSS1)
        assert rel(b.upper_k1, b.k1 / 2.0) < 1e-15
        assert rel(b.upper_k2, b.k2) < 1e-15
        assert rel(b.lower_log, math.sqrt(math.log(2.0))) < 1e-15

    def test_no_delay_drops_k2(self):
        b = speed_bounds(ModelParams(p=2.0, h=0.0), GAUSS1)
        assert b.upper_k2 == math.inf
        assert b.upper == b.upper_k1

    def test_lower_add_formula(self):
        for h in (0.0, 0.5, 2.0):
            b = speed_bounds(ModelParams(p=2.0, h=h), GAUSS1)
            expected = 2.0 * math.sqrt(1.0 / (2.0 * (2.0 * h + h * h) + 1.0))
            assert rel(b.lower_add, expected) < 1e-15

    def test_sandwich_is_strict(self):
        for kernel in (GAUSS1, UniformKernel(1.0), TwoPointKernel(1.0)):
            for h in (0.0, 0.7, 1.0, 2.5):
                params = ModelParams(p=2.0, h=h)
                b = speed_bounds(params, kernel)
                c = solve_critical(params, kernel).c_star
                assert b.lower < c < b.upper

    def test_window_helper(self):
        params = ModelParams(p=2.0, h=1.0)
        lo, hi = bound_window(params, GAUSS1)
        b = speed_bounds(params, GAUSS1)
        assert (lo, hi) == (b.lower, b.upper)

    def test_with_ad_populates_optimum(self):
        b = speed_bounds(ModelParams(p=2.0, h=1.0), GAUSS1, with_ad=True)
        assert b.upper_ad_opt is not None
        assert rel(b.upper_ad_opt, AD_OPT_GAUSS_P2_H1["value"]) < 1e-9


class TestAdFamily:
    def test_h_scaling(self):
        # h * ad_upper(r) does not depend on h: the whole family is a
        # single function of r rescaled by the delay
        r = 0.4
        base = 1.0 * ad_upper(ModelParams(p=2.0, h=1.0), GAUSS1, r)
        for h in (0.5, 2.0, 7.0):
            val = h * ad_upper(ModelParams(p=2.0, h=h), GAUSS1, r)
            assert rel(val, base) < 1e-14

    def test_optimum_matches_frozen_value(self):
        r_star, value = ad_upper_opt(ModelParams(p=2.0, h=1.0), GAUSS1)
        assert rel(value, AD_OPT_GAUSS_P2_H1["value"]) < 1e-10
        assert abs(r_star - AD_OPT_GAUSS_P2_H1["r"]) < 1e-5

    def test_optimum_never_beats_probes(self):
        params = ModelParams(p=2.0, h=1.0)
        _, value = ad_upper_opt(params, GAUSS1)
        for r in (0.2, 0.4, 0.55, 0.7, 0.9):
            assert value <= ad_upper(params, GAUSS1, r) + 1e-12

    def test_is_an_upper_bound(self):
        params = ModelParams(p=2.0, h=1.0)
        _, value = ad_upper_opt(params, GAUSS1)
        assert value > solve_critical(params, GAUSS1).c_star

    def test_domain_errors(self):
        params = ModelParams(p=2.0, h=1.0)
        for r in (0.0, 1.0, -0.3, 1.7):
            with pytest.raises(DomainError):
                ad_upper(params, GAUSS1, r)
        with pytest.raises(DomainError):
            ad_upper(ModelParams(p=2.0, h=0.0), GAUSS1, 0.5)
        with pytest.raises(DomainError):
            ad_upper_opt(ModelParams(p=2.0, h=0.0), GAUSS1)
