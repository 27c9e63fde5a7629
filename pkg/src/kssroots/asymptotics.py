"""Large-degree limits: the asymptotic variance constant and chaos coefficients.

As ``d -> infinity`` the two-point quantities converge to

    g(t)   = (1 - (1 + t^2) e^{-t^2}) / (1 - e^{-t^2})^{3/2}
    rho(t) = e^{-t^2/2} (1 - t^2 - e^{-t^2}) / (1 - e^{-t^2} - t^2 e^{-t^2})

and ``Var(N_d)/sqrt(d)`` tends to

    sigma^2 = (2/pi) * int_0^inf (g(t) * bracket(rho(t)) - 1) dt + 1.

The bracket has the Hermite expansion
``(2/pi) * bracket(rho) = sum_l (2l)! a_{2l}^2 rho^{2l}`` (Mehler), which gives
a second, independent route to sigma^2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

from .errors import ConvergenceError, DomainError, NumericalError
from .kernels import _out
from .quadrature import QuadratureResult, integrate
from .rice import RHO_SLACK, T_CUT, _exp_remainder, _series_quantities, rice_bracket

T_MAX = 12.0
DEFAULT_TOL = 1e-9


def _limit_lags(t):
    arr = np.asarray(t, dtype=float)
    if np.any(~(arr >= 0)):
        raise DomainError("lag must be >= 0")
    return arr


def _limit_quantities(t):
    """(g, rho) of the limit process for an array of lags ``t >= 0``."""
    small = t < T_CUT
    g = np.empty_like(t)
    rho = np.empty_like(t)
    if np.any(small):
        ts = t[small]
        _, _, rho_s, g_s = _series_quantities(0.0, np.where(ts > 0, ts, 1.0))
        g[small] = np.where(ts > 0, g_s, 0.0)
        rho[small] = np.where(ts > 0, rho_s, -1.0)
    big = ~small
    if np.any(big):
        x = t[big] ** 2
        with np.errstate(under="ignore"):
            one_minus = -np.expm1(-x)
            # 1 - e^-x - x and 1 - e^-x - x e^-x are O(x^2); form them from
            # the exponential remainder instead of subtracting O(x) terms
            rem = -_exp_remainder(-x)
            num_g = rem + x * one_minus
            g[big] = num_g / one_minus**1.5
            rho[big] = np.exp(-0.5 * x) * rem / num_g
    if np.any(np.abs(rho) > 1 + RHO_SLACK):
        raise NumericalError("|rho| exceeds 1 in the limit process")
    return g, np.clip(rho, -1.0, 1.0)


def g_limit(t):
    arr = _limit_lags(t)
    return _out(_limit_quantities(np.atleast_1d(arr))[0].reshape(arr.shape), t)


def rho_limit(t):
    arr = _limit_lags(t)
    return _out(_limit_quantities(np.atleast_1d(arr))[1].reshape(arr.shape), t)


@dataclass(frozen=True)
class LimitPoint:
    t: float
    g: float
    rho: float


def limit_point(t) -> LimitPoint:
    return LimitPoint(float(t), g_limit(t), rho_limit(t))


class Sigma2Method(str, Enum):
    DIRECT = "direct"
    MEHLER = "mehler"


@dataclass(frozen=True)
class Sigma2Result:
    value: float
    method: Sigma2Method
    quadrature: QuadratureResult
    series_terms_used: Optional[int] = None


def _check_result(result: Sigma2Result) -> Sigma2Result:
    if not result.quadrature.converged:
        raise ConvergenceError(
            f"sigma^2 ({result.method.value}) quadrature stopped at error "
            f"{result.quadrature.abs_error_estimate:.3g}"
        )
    return result


def sigma2_direct(tol=DEFAULT_TOL, t_max=T_MAX) -> Sigma2Result:
    """sigma^2 by adaptive quadrature of the limit Rice integrand on [0, t_max].

    Beyond ``t_max = 12`` both ``g - 1`` and ``rho^2`` are below e^{-140}, so
    the neglected tail is far under 1e-20.
    """
    if tol <= 0:
        raise DomainError("tol must be positive")

    def integrand(t):
        g, rho = _limit_quantities(t)
        return (2 / math.pi) * (g * rice_bracket(rho) - 1.0)

    quad = integrate(integrand, 0.0, t_max, tol=tol, breakpoints=range(1, int(t_max)))
    return _check_result(Sigma2Result(quad.value + 1.0, Sigma2Method.DIRECT, quad))


def hermite(n, x):
    """Probabilists' Hermite polynomial ``He_n(x)`` by three-term recurrence."""
    if isinstance(n, bool) or int(n) != n or n < 0:
        raise DomainError("order must be a nonnegative integer")
    arr = np.asarray(x, dtype=float)
    prev, cur = np.ones_like(arr), arr.copy()
    if n == 0:
        return _out(prev, x)
    for k in range(1, int(n)):
        prev, cur = cur, arr * cur - k * prev
    return _out(cur, x)


def _log_abs_coeff_a(ell):
    return (math.log(2.0) - 0.5 * math.log(2 * math.pi) - ell * math.log(2.0)
            - math.lgamma(ell + 1) - math.log(abs(2 * ell - 1)))


def coeff_a(ell):
    """Hermite coefficient ``a_{2l}`` of ``|y|``:
    ``2 (-1)^(l+1) / (sqrt(2 pi) 2^l l! (2l - 1))``."""
    if isinstance(ell, bool) or int(ell) != ell or ell < 0:
        raise DomainError("ell must be a nonnegative integer")
    ell = int(ell)
    # (-1)^(l+1) times the sign of (2l - 1): positive at l = 0 and l = 1
    sign = 1.0 if ell == 0 or ell % 2 == 1 else -1.0
    return sign * math.exp(_log_abs_coeff_a(ell))


def coeff_b(k):
    """``b_k = phi(0) He_k(0) / k!``; zero for odd ``k``."""
    if isinstance(k, bool) or int(k) != k or k < 0:
        raise DomainError("k must be a nonnegative integer")
    k = int(k)
    if k % 2:
        return 0.0
    half = k // 2
    # He_k(0) / k! = (-1)^(k/2) (k-1)!! / k! = (-1)^(k/2) / (2^(k/2) (k/2)!)
    log_mag = -half * math.log(2.0) - math.lgamma(half + 1) - 0.5 * math.log(2 * math.pi)
    return (-1.0) ** half * math.exp(log_mag)


def f_q(q, x, y):
    """Chaos kernel ``sum_l b_{q-2l} a_{2l} He_{q-2l}(x) He_{2l}(y)``.

    Diagnostic only; nothing else in the package depends on it.
    """
    if isinstance(q, bool) or int(q) != q or q < 2:
        raise DomainError("q must be an integer >= 2")
    q = int(q)
    total = 0.0
    for ell in range(q // 2 + 1):
        b = coeff_b(q - 2 * ell)
        if b == 0.0:
            continue
        total = total + b * coeff_a(ell) * hermite(q - 2 * ell, x) * hermite(2 * ell, y)
    return total


def mehler_weight(ell, printed=False):
    """Weight of ``rho^{2l}``: ``(2l)! a_{2l}^2``, or ``a_{2l}^2 / (2l)!`` if ``printed``."""
    log_fact = math.lgamma(2 * ell + 1)
    log_a2 = 2 * _log_abs_coeff_a(ell)
    return math.exp(log_a2 - log_fact if printed else log_a2 + log_fact)


def mehler_bracket(rho, L, printed=False):
    """Partial sum ``sum_{l=0}^{L} (2l)! a_{2l}^2 rho^{2l}``.

    Tends to ``(2/pi) * rice_bracket(rho)``.  Near ``|rho| = 1`` the terms
    only decay like ``l^{-5/2}``, so the truncation error at ``|rho| = 1`` is
    of order ``L^{-3/2}``.
    """
    if int(L) != L or L < 0:
        raise DomainError("L must be a nonnegative integer")
    arr = np.asarray(rho, dtype=float)
    if np.any(np.abs(arr) > 1.0):
        raise DomainError("correlation must lie in [-1, 1]")
    r2 = arr * arr
    acc = np.zeros_like(arr)
    for ell in range(int(L), -1, -1):
        acc = acc * r2 + mehler_weight(ell, printed)
    return _out(acc, rho)


def sigma2_mehler(L=64, tol=DEFAULT_TOL, t_max=T_MAX, printed=False) -> Sigma2Result:
    """sigma^2 from the truncated Hermite expansion of the bracket.

    ``printed=True`` switches to the weight ``a_{2l}^2/(2l)!`` with no
    trailing ``+1``; that variant does not reproduce ``sigma2_direct`` and is
    kept for comparison only.
    """
    if int(L) != L or L < 4:
        raise DomainError("need at least L = 4 series terms")
    if tol <= 0:
        raise DomainError("tol must be positive")
    weights = [mehler_weight(ell, printed) for ell in range(int(L) + 1)]

    def integrand(t):
        g, rho = _limit_quantities(t)
        r2 = rho * rho
        acc = np.zeros_like(t)
        for w in reversed(weights[1:]):
            acc = (acc + w) * r2
        return acc * g + weights[0] * (g - 1.0)

    quad = integrate(integrand, 0.0, t_max, tol=tol, breakpoints=range(1, int(t_max)))
    offset = 0.0 if printed else 1.0
    return _check_result(
        Sigma2Result(quad.value + offset, Sigma2Method.MEHLER, quad, int(L))
    )
