import math
import warnings

import numpy as np
import pytest

from tmsv_bell import threshold as th
from tmsv_bell.errors import BracketingError, DomainError, NeverNonlocalError


def scan_crossing(scenario, step=1e-3, stop=0.75):
    """First grid R where B_max drops to 2 or below (brute force)."""
    for R in np.arange(0.0, stop, step):
        if scenario.bmax(R) <= 2.0:
            return R
    raise AssertionError("no crossing")


class TestScenario:
    def test_params(self):
        s = th.Scenario("symmetric", 1.0).params(0.3)
        a = th.Scenario("asymmetric", 1.0).params(0.3)
        assert (s.rA, s.rB) == (0.3, 0.3)
        assert (a.rA, a.rB) == (0.3, 0.0)

    def test_bad_mode(self):
        with pytest.raises(ValueError):
            th.Scenario("sideways", 1.0)


class TestRmax:
    def test_symmetric_r1(self):
        p = th.rmax(th.Scenario("symmetric", 1.0))
        assert abs(p.r_max - 0.42) <= 0.01
        assert abs(p.bmax_at_threshold - 2.0) < 1e-3
        assert p.gamma_max == pytest.approx(-0.5 * math.log(1 - p.r_max**2), abs=1e-12)

    def test_asymmetric_r2(self):
        assert abs(th.rmax(th.Scenario("asymmetric", 2.0)).r_max - 0.24) <= 0.01

    @pytest.mark.parametrize("mode", ["symmetric", "asymmetric"])
    @pytest.mark.parametrize("r", [0.5, 1.0, 2.0])
    def test_bracketing(self, mode, r):
        sc = th.Scenario(mode, r)
        p = th.rmax(sc)
        assert sc.bmax(p.r_max - th.BISECTION_TOL) > 2.0
        assert sc.bmax(p.r_max + th.BISECTION_TOL) < 2.0

    def test_matches_brute_force_scan(self):
        sc = th.Scenario("symmetric", 1.0)
        assert abs(th.rmax(sc).r_max - scan_crossing(sc)) <= 1e-3

    def test_small_squeezing(self):
        sc = th.Scenario("symmetric", 0.01)
        assert 2.0 < sc.bmax(0.0) < 2.001
        p = th.rmax(sc)
        # weak squeezing: B^2/4 ~ 1 + 4 lam^2 (1-R^2)(1-3R^2), root at 1/sqrt(3)
        assert abs(p.r_max - scan_crossing(sc)) <= 1e-3
        assert abs(p.r_max - 1 / math.sqrt(3)) < 1e-3

    def test_never_nonlocal(self):
        with pytest.raises(NeverNonlocalError):
            th.rmax(th.Scenario("symmetric", 0.0))

    def test_fallback_scan(self, monkeypatch):
        # force a non-monotone profile: violated at both ends, dip in the middle
        sc = th.Scenario("symmetric", 1.0)
        monkeypatch.setattr(th.Scenario, "bmax",
                            lambda self, R, tol=None: 2.5 - 4 * R if R < 0.75 else 2.5)
        p = th.rmax(sc)
        assert p.r_max == pytest.approx(0.125, abs=1e-4)

    def test_no_crossing(self, monkeypatch):
        sc = th.Scenario("symmetric", 1.0)
        monkeypatch.setattr(th.Scenario, "bmax", lambda self, R, tol=None: 2.5)
        with pytest.raises(BracketingError) as info:
            th.rmax(sc)
        assert len(info.value.scan) == 101

    @pytest.mark.parametrize("mode", ["symmetric", "asymmetric"])
    def test_decreasing_in_squeezing(self, mode):
        rs = np.arange(1.0, 3.01, 0.25)
        values = [th.rmax(th.Scenario(mode, r)).r_max for r in rs]
        assert all(b < a for a, b in zip(values, values[1:]))


class TestFit:
    def test_values(self):
        assert th.fit_rmax(th.Scenario("symmetric", 1.5)) == pytest.approx(0.3660, abs=1e-4)
        assert th.fit_rmax(th.Scenario("asymmetric", 2.0)) == pytest.approx(0.1624, abs=1e-4)
        assert th.fit_rmax(th.Scenario("symmetric", 2.5)) == pytest.approx(0.1346, abs=1e-4)

    def test_validity_warning(self):
        with pytest.warns(th.FitValidityWarning):
            v = th.fit_rmax(th.Scenario("symmetric", 1.0))
        assert v == pytest.approx(1.64 * math.exp(-1))
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            th.fit_rmax(th.Scenario("symmetric", 1.5))

    def test_fit_coefficient_exact_data(self):
        pts = [th.ThresholdPoint(r, 1.3 * math.exp(-r), 2.0, 0.0, 0.0) for r in (1, 2, 3)]
        assert th.fit_coefficient(pts) == pytest.approx(1.3, rel=1e-14)

    @pytest.mark.parametrize("mode,coef", [("symmetric", 1.2), ("asymmetric", 1.64)])
    def test_exchanged_coefficients_describe_the_curves(self, mode, coef):
        # the published coefficients fit the opposite geometry to within 10%
        for r in (1.5, 2.0, 2.5, 3.0):
            rm = th.rmax(th.Scenario(mode, r)).r_max
            assert abs(rm - coef * math.exp(-r)) / rm <= 0.10


class TestGamma:
    def test_values(self):
        assert th.gamma_from_R(0.0) == 0.0
        assert th.gamma_from_R(0.42) == pytest.approx(0.097, abs=1e-3)
        assert th.gamma_from_R(0.13) == pytest.approx(8.5e-3, abs=1e-4)

    def test_inverse(self):
        assert th.R_from_gamma(0.0) == 0.0
        assert th.R_from_gamma(0.0969) == pytest.approx(0.42, abs=1e-3)
        for x in (0.1, 0.5, 0.9):
            assert abs(th.R_from_gamma(th.gamma_from_R(x)) - x) < 1e-12

    def test_errors(self):
        with pytest.raises(DomainError):
            th.gamma_from_R(1.0)
        with pytest.raises(DomainError):
            th.R_from_gamma(-0.1)


def test_squeezing_for_threshold():
    r = th.squeezing_for_threshold("symmetric", 0.13, 2.0, 3.0, tol=1e-2)
    assert 2.0 < r <= 3.0
    with pytest.raises(BracketingError):
        th.squeezing_for_threshold("symmetric", 0.5, 2.0, 3.0)
