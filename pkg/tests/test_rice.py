import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate as sp_integrate

from kssroots import rice
from kssroots.asymptotics import rho_limit, sigma2_direct
from kssroots.errors import DomainError
from kssroots.kernels import covariance
from oracle_values import SECOND_FACTORIAL_MOMENT, TWO_POINT


def _lag(d, t):
    return math.sqrt(d) * math.pi / 2 if t == "end" else t


def test_exact_rational_points():
    t2 = math.sqrt(2) * math.pi / 4
    assert rice.conditional_variance(2, t2) == pytest.approx(1 / 3, rel=1e-14)
    assert rice.conditional_variance(4, math.pi / 2) == pytest.approx(11 / 15, rel=1e-14)
    assert rice.joint_density(4, math.pi / 2) == pytest.approx(2 / (math.pi * math.sqrt(15)), rel=1e-14)
    assert rice.joint_density(2, t2) == pytest.approx(1 / (math.pi * math.sqrt(3)), rel=1e-14)
    assert rice.conditional_correlation(4, math.pi / 2) == pytest.approx(-17 / 22, rel=1e-14)
    assert rice.conditional_correlation(2, t2) == pytest.approx(-1.0, abs=1e-14)


@pytest.mark.parametrize("key", list(TWO_POINT))
def test_against_conditioned_covariance_oracle(key):
    d, t = key
    _, _, _, v, p, rho, g = TWO_POINT[key]
    pt = rice.rice_integrand(d, _lag(d, t))
    assert pt.v == pytest.approx(v, rel=1e-10)
    assert pt.p == pytest.approx(p, rel=1e-12)
    assert pt.rho == pytest.approx(rho, rel=1e-10, abs=1e-15)
    assert pt.g == pytest.approx(g, rel=1e-10)


def test_small_lag_series_value():
    v = TWO_POINT[(50, 0.0001)][3]
    assert abs(rice.conditional_variance(50, 1e-4) - v) < 1e-6 * v


def test_density_approaches_limit_at_large_degree():
    # finite-d value from the oracle; the Gaussian-limit formula differs by ~1.3e-7
    p = rice.joint_density(1000, 3.0)
    assert p == pytest.approx(TWO_POINT[(1000, 3)][4], rel=1e-13)
    assert abs(p - 1 / (2 * math.pi * math.sqrt(1 - math.exp(-9)))) < 2e-7


def test_correlation_near_limit():
    assert abs(rice.conditional_correlation(10**4, 1.0) - rho_limit(1.0)) < 1e-3


def test_degree_one_density():
    assert rice.joint_density(1, 0.5) == pytest.approx(1 / (2 * math.pi * math.sin(0.5)))


@pytest.mark.parametrize("d", [2, 3, 5, 10, 50, 64, 100, 1000, 10**4, 10**6])
def test_branches_agree_at_cutoff(d):
    assert rice.branch_disagreement(d) < 1e-8


@pytest.mark.parametrize("d", range(2, 51))
def test_integrand_invariants(d):
    t = np.linspace(1e-6, math.sqrt(d) * math.pi / 2, 997)
    v = rice.conditional_variance(d, t)
    rho = rice.conditional_correlation(d, t)
    g = rice.two_point_factor(d, t)
    p = rice.joint_density(d, t)
    assert np.all((0 <= v) & (v <= 1))
    assert np.all(np.abs(rho) <= 1)
    assert np.all(g >= 0) and np.all(p > 0)
    # 1 - r^2 without cancellation at small lags
    with np.errstate(divide="ignore"):
        one_minus_r2 = -np.expm1(d * np.log1p(-np.sin(t / math.sqrt(d)) ** 2))
    np.testing.assert_allclose(g * np.sqrt(one_minus_r2), v, rtol=1e-10, atol=1e-300)


def _large_lags(d, a=0.5):
    return np.linspace(a * math.sqrt(d), math.sqrt(d) * math.pi / 2, 2000)


@pytest.mark.xfail(strict=True, reason="near t = a*sqrt(d) |rho_d| is about d*sin(a)^2*cos(a)^(d-2)")
@pytest.mark.parametrize("d", [64, 100, 256, 1000, 4096])
def test_large_lag_correlation_bound(d):
    t = _large_lags(d)
    assert np.all(np.abs(rice.conditional_correlation(d, t)) <= math.cos(0.5) ** (d - 2))


@pytest.mark.parametrize("d", [64, 100, 256, 1000, 4096])
def test_large_lag_correlation_bound_with_degree_factor(d):
    t = _large_lags(d)
    rho = np.abs(rice.conditional_correlation(d, t))
    assert np.all(rho <= (d + 1) * math.cos(0.5) ** (d - 2))
    # the factor is needed: at the split point the plain power is exceeded
    assert rho[0] > math.cos(0.5) ** (d - 2)


@pytest.mark.parametrize("d", [2, 5, 50, 1000])
def test_small_lag_limits(d):
    assert rice.two_point_factor(d, 1e-6) < 1e-5
    assert rice.conditional_variance(d, 1e-6) < 1e-11


@settings(max_examples=300, deadline=None)
@given(st.floats(1e-9, 1.0))
def test_degree_two_correlation_is_minus_one(frac):
    t = frac * math.sqrt(2) * math.pi / 2
    assert abs(rice.conditional_correlation(2, t) + 1) < 1e-12


def test_bracket_values():
    assert rice.rice_bracket(0.0) == 1.0
    assert rice.rice_bracket(-1.0) == pytest.approx(math.pi / 2, rel=1e-15)
    assert rice.rice_bracket(1.0) == pytest.approx(math.pi / 2, rel=1e-15)
    mp.mp.dps = 30
    ref = mp.sqrt(1 - mp.mpf("0.8444") ** 2) + mp.mpf("0.8444") * mp.asin(mp.mpf("0.8444"))
    assert rice.rice_bracket(-0.8444) == pytest.approx(float(ref), rel=1e-14)
    assert rice.rice_bracket(-0.8444) == pytest.approx(1.384710, abs=1e-6)


@given(st.floats(-0.999999, 0.999999))
def test_bracket_matches_arctan_form(rho):
    s = math.sqrt(1 - rho * rho)
    assert rice.rice_bracket(rho) == pytest.approx(s + rho * math.atan(rho / s), rel=1e-13)


def test_bracket_domain():
    with pytest.raises(DomainError):
        rice.rice_bracket(1.0 + 1e-9)


def test_second_factorial_moment_degree_two():
    res = rice.second_factorial_moment(2)
    assert res.converged and res.abs_error_estimate <= 1e-9
    assert abs(res.value - math.sqrt(2)) < 1e-6
    assert abs(rice.variance_exact(2) - (2 * math.sqrt(2) - 2)) < 1e-6


@pytest.mark.parametrize("d", sorted(SECOND_FACTORIAL_MOMENT))
def test_second_factorial_moment_oracle(d):
    assert rice.second_factorial_moment(d).value == pytest.approx(SECOND_FACTORIAL_MOMENT[d], abs=1e-8)


def test_second_factorial_moment_against_scipy():
    d = 7

    def f(t):
        pt = rice.rice_integrand(d, t)
        return pt.g * rice.rice_bracket(pt.rho)

    ref, _ = sp_integrate.quad(f, 1e-12, math.sqrt(d) * math.pi / 2, epsabs=1e-12, limit=200)
    assert rice.second_factorial_moment(d).value == pytest.approx(2 * math.sqrt(d) / math.pi * ref, abs=1e-8)


def test_degree_one():
    assert rice.variance_exact(1) == 0.0
    assert rice.second_factorial_moment(1).value == 0.0


def test_variance_ratio_near_sigma2():
    sigma2 = sigma2_direct().value
    sfm = rice.second_factorial_moment(100).value
    assert abs((sfm - 100 + 10) / 10 - sigma2) < 5e-3
    assert abs(rice.variance_exact(10**4) / 100 - sigma2) < 0.02


@pytest.mark.parametrize("bad", [0.0, -1.0, math.sqrt(5) * math.pi / 2 * 1.001])
def test_domain_errors(bad):
    with pytest.raises(DomainError):
        rice.conditional_variance(5, bad)
    with pytest.raises(DomainError):
        rice.conditional_correlation(1, 0.3)
    with pytest.raises(DomainError):
        rice.second_factorial_moment(3, tol=0)


@pytest.mark.parametrize("d", [2, 3, 9, 40, 500, 20000])
def test_dense_scan_against_extended_precision(d):
    from gen_oracles import two_point

    end = math.sqrt(d) * math.pi / 2
    for t in np.geomspace(1e-5, end * 0.999, 60):
        v, p, rho, g = (float(x) for x in two_point(d, mp.mpf(float(t))))
        pt = rice.rice_integrand(d, t)
        assert pt.v == pytest.approx(v, rel=1e-10)
        assert pt.p == pytest.approx(p, rel=1e-12)
        assert pt.rho == pytest.approx(rho, rel=1e-9, abs=1e-14)
        assert pt.g == pytest.approx(g, rel=1e-10)
