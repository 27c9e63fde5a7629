import math
import time

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate as sp_integrate

from kssroots import rice
from kssroots.asymptotics import (
    LimitPoint,
    Sigma2Method,
    coeff_a,
    coeff_b,
    f_q,
    g_limit,
    hermite,
    limit_point,
    mehler_bracket,
    mehler_weight,
    rho_limit,
    sigma2_direct,
    sigma2_mehler,
)
from kssroots.errors import DomainError
from oracle_values import LIMIT, SIGMA2

RHO_GRID = [-0.99, -0.9, -0.8, -0.7, -0.6, -0.5, -0.4, -0.3, -0.2, -0.1, 0.0,
            0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.99]


@pytest.mark.parametrize("t", sorted(LIMIT))
def test_limit_functions_against_oracle(t):
    g, rho = LIMIT[t]
    assert g_limit(t) == pytest.approx(g, rel=1e-12)
    assert rho_limit(t) == pytest.approx(rho, rel=1e-12)


def test_limit_endpoints():
    assert g_limit(0.0) == 0.0
    assert rho_limit(0.0) == -1.0
    assert rho_limit(1e-9) == pytest.approx(-1.0, abs=1e-15)
    assert g_limit(1.0) == pytest.approx(0.5258, abs=1e-4)
    assert rho_limit(1.0) == pytest.approx(-0.8444, abs=1e-4)
    assert abs(g_limit(10.0) - 1) < 1e-15
    # exactly -99 e^{-50}, about 1.9e-20 in magnitude
    assert rho_limit(10.0) == pytest.approx(-99 * math.exp(-50), rel=1e-12)


def test_limit_point():
    p = limit_point(1.0)
    assert isinstance(p, LimitPoint)
    assert (p.g, p.rho) == (g_limit(1.0), rho_limit(1.0))


@given(st.floats(0.0, 50.0))
def test_limit_ranges(t):
    assert 0.0 <= g_limit(t) < 1.0 or (t > 5 and g_limit(t) == 1.0)
    assert abs(rho_limit(t)) <= 1.0


def test_negative_lag_rejected():
    with pytest.raises(DomainError):
        g_limit(-0.1)


def test_finite_degree_converges_to_limit():
    t = np.linspace(0.1, 6.0, 200)
    g_gap, r_gap = [], []
    for d in (100, 1000, 10**4):
        g_gap.append(np.max(np.abs(rice.two_point_factor(d, t) - g_limit(t))))
        r_gap.append(np.max(np.abs(rice.conditional_correlation(d, t) - rho_limit(t))))
    assert g_gap[0] > g_gap[1] > g_gap[2]
    assert r_gap[0] > r_gap[1] > r_gap[2]


def test_sigma2_direct():
    start = time.perf_counter()
    res = sigma2_direct()
    elapsed = time.perf_counter() - start
    assert res.method is Sigma2Method.DIRECT
    assert 0.56 <= res.value <= 0.58
    assert res.value == pytest.approx(SIGMA2, abs=1e-12)
    assert res.quadrature.converged
    assert elapsed < 1.0


def test_sigma2_stable_under_tightening():
    base = sigma2_direct().value
    assert abs(sigma2_direct(tol=1e-10, t_max=16.0).value - base) < 1e-6


def test_integrand_endpoint():
    g, rho = g_limit(1e-8), rho_limit(1e-8)
    value = (2 / math.pi) * (g * rice.rice_bracket(rho) - 1)
    assert value == pytest.approx(-2 / math.pi, abs=1e-6)


def test_hermite_values():
    assert hermite(2, 0.0) == -1.0
    assert hermite(1, 0.0) == 0.0
    assert hermite(4, 0.0) == 3.0


@pytest.mark.parametrize("n", range(0, 21))
def test_hermite_against_numpy(n):
    x = np.linspace(-4, 4, 17)
    coeffs = np.zeros(n + 1)
    coeffs[n] = 1
    np.testing.assert_allclose(hermite(n, x), np.polynomial.hermite_e.hermeval(x, coeffs),
                               rtol=1e-12, atol=1e-9)


def test_coeff_a_values():
    assert coeff_a(0) == pytest.approx(math.sqrt(2 / math.pi), rel=1e-15)
    assert coeff_a(1) == pytest.approx(1 / math.sqrt(2 * math.pi), rel=1e-15)
    assert coeff_a(2) == pytest.approx(-1 / (12 * math.sqrt(2 * math.pi)), rel=1e-14)


@pytest.mark.parametrize("ell", range(0, 6))
def test_coeff_a_is_hermite_projection_of_abs(ell):
    # a_{2l} = E[|X| He_{2l}(X)] / (2l)!
    f = lambda x: 2 * x * hermite(2 * ell, x) * math.exp(-x * x / 2) / math.sqrt(2 * math.pi)
    ref, _ = sp_integrate.quad(f, 0, 40, epsabs=1e-14, limit=200)
    assert coeff_a(ell) == pytest.approx(ref / math.factorial(2 * ell), rel=1e-9, abs=1e-15)


def test_coeff_a_alternates_after_first():
    signs = [math.copysign(1, coeff_a(ell)) for ell in range(1, 12)]
    assert all(a == -b for a, b in zip(signs, signs[1:]))


def test_coeff_b_values():
    assert coeff_b(1) == 0.0
    assert coeff_b(0) == pytest.approx(1 / math.sqrt(2 * math.pi), rel=1e-15)
    assert coeff_b(2) == pytest.approx(-1 / (2 * math.sqrt(2 * math.pi)), rel=1e-15)
    assert all(coeff_b(k) == 0.0 for k in range(1, 40, 2))
    for k in range(0, 20, 2):
        phi0 = 1 / math.sqrt(2 * math.pi)
        assert coeff_b(k) == pytest.approx(phi0 * hermite(k, 0.0) / math.factorial(k), rel=1e-13)


def test_chaos_kernel_values():
    assert f_q(2, 0.0, 0.0) == pytest.approx(0.0, abs=1e-15)
    assert f_q(3, 0.0, 0.0) == 0.0
    assert f_q(2, 1.0, 0.0) == pytest.approx(-1 / (2 * math.pi), rel=1e-14)
    assert f_q(2, 1.0, 0.0) == pytest.approx(-0.159155, abs=1e-6)


def test_mehler_bracket_values():
    assert mehler_bracket(0.0, 10) == pytest.approx(2 / math.pi, rel=1e-15)
    target = (2 / math.pi) * (math.sqrt(1 - 0.81) + 0.9 * math.asin(0.9))
    assert abs(mehler_bracket(0.9, 64) - target) < 1e-10


def test_mehler_bracket_at_unit_correlation():
    # the series sums to 1 at rho = 1 but its tail only decays like L^(-3/2)
    gaps = [1 - mehler_bracket(1.0, L) for L in (200, 1000, 5000)]
    assert all(g > 0 for g in gaps)
    for g, L in zip(gaps, (200, 1000, 5000)):
        assert g * L**1.5 == pytest.approx(0.06, rel=0.05)


@pytest.mark.parametrize("rho", [r for r in RHO_GRID if abs(r) <= 0.9])
def test_mehler_identity_at_64_terms(rho):
    assert abs(mehler_bracket(rho, 64) - (2 / math.pi) * rice.rice_bracket(rho)) < 1e-10


@pytest.mark.xfail(strict=True, reason="tail of the L=64 series exceeds 1e-10 once |rho| > 0.9")
@pytest.mark.parametrize("rho", [-0.99, -0.95, 0.95, 0.99])
def test_mehler_identity_at_64_terms_near_unit_correlation(rho):
    assert abs(mehler_bracket(rho, 64) - (2 / math.pi) * rice.rice_bracket(rho)) < 1e-10


@pytest.mark.parametrize("rho", RHO_GRID)
def test_mehler_identity_with_long_series(rho):
    assert abs(mehler_bracket(rho, 1000) - (2 / math.pi) * rice.rice_bracket(rho)) < 1e-10


def test_mehler_weights():
    assert mehler_weight(1) == pytest.approx(1 / math.pi, rel=1e-14)
    assert mehler_weight(1, printed=True) == pytest.approx(1 / (4 * math.pi), rel=1e-14)


def test_sigma2_mehler_matches_direct():
    direct = sigma2_direct().value
    res = sigma2_mehler(64)
    assert res.method is Sigma2Method.MEHLER and res.series_terms_used == 64
    assert abs(res.value - direct) < 1e-6
    assert 0.55 < res.value < 0.60 and 0.55 < direct < 0.60


def test_sigma2_mehler_truncation_decay():
    direct = sigma2_direct().value
    gaps = [abs(sigma2_mehler(L).value - direct) for L in (4, 8, 16, 32, 64)]
    ratios = [a / b for a, b in zip(gaps, gaps[1:])]
    # algebraic decay, close to L^(-5/2): each doubling divides by about 5.66
    assert all(4.5 < r < 6.0 for r in ratios)


def test_printed_weight_variant_disagrees():
    assert sigma2_mehler(64, printed=True).value < 0


def test_validation():
    with pytest.raises(DomainError):
        sigma2_mehler(3)
    with pytest.raises(DomainError):
        sigma2_direct(tol=-1.0)
    with pytest.raises(DomainError):
        coeff_a(-1)
    with pytest.raises(DomainError):
        f_q(1, 0.0, 0.0)
    with pytest.raises(DomainError):
        mehler_bracket(1.5, 4)


def test_limit_functions_dense_scan():
    import mpmath as mp

    mp.mp.dps = 60
    for t in np.geomspace(1e-5, 8.0, 150):
        tm = mp.mpf(float(t))
        e = mp.exp(-tm**2)
        g = (1 - (1 + tm**2) * e) / (1 - e) ** 1.5
        rho = mp.exp(-tm**2 / 2) * (1 - tm**2 - e) / (1 - e - tm**2 * e)
        assert g_limit(t) == pytest.approx(float(g), rel=1e-12)
        assert rho_limit(t) == pytest.approx(float(rho), rel=1e-11, abs=1e-300)
