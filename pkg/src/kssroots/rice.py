"""Two-point Rice machinery for the number of real roots at finite degree.

For the scaled process ``Z_d`` and a lag ``t`` in ``(0, sqrt(d)*pi/2]``:

* ``v`` -- variance of ``Z_d'(0)`` given ``Z_d(0) = Z_d(t) = 0``,
* ``p`` -- density of ``(Z_d(0), Z_d(t))`` at the origin,
* ``rho`` -- correlation of the two derivatives under the same conditioning,
* ``g = 2*pi*p*v``.

Writing ``c = cos(t/sqrt(d))``, ``q = sin(t/sqrt(d))**2``::

    A = 1 - c**(2d)                     (1 - r^2)
    B = d c**(2d-2) q                   (r'^2)
    v = (A - B) / A
    rho = c**(d-2) (A - d q) / (A - B)

Both ``A - B`` and ``A - d q`` are O(t^4) differences of O(t^2) terms, so
below ``T_CUT`` every quantity comes from its Taylor expansion in ``t``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ConvergenceError, DomainError, NumericalError
from .kernels import _check_degree, _out, cos_power, log_abs_cos
from .quadrature import QuadratureResult, integrate

T_CUT = 1e-3
BRANCH_AGREEMENT = 1e-6
RHO_SLACK = 1e-10
DEFAULT_TOL = 1e-9
MAX_EVALS = 1_000_000


def _series_coefficients(e):
    """Taylor coefficients in ``x = t**2``; ``e = 1/d`` (``e = 0`` is the limit).

    Returns (alpha, beta, gamma, kappa) with
    ``A = x*sum(alpha_k x^k)``, ``A - B = x^2*sum(beta_k x^k)``,
    ``A - d q = x^2*sum(gamma_k x^k)``, ``c**(d-2) = sum(kappa_k x^k)``.
    Derived symbolically from the log-cosine series; truncated at relative
    order x^4 (t^8), far below double precision at ``t <= T_CUT``.
    """
    m = e - 1.0
    alpha = (
        1.0,
        (e - 3.0) / 6.0,
        (4 * e**2 - 15 * e + 15) / 90.0,
        (34 * e**3 - 147 * e**2 + 210 * e - 105) / 2520.0,
        (496 * e**4 - 2370 * e**3 + 4095 * e**2 - 3150 * e + 945) / 113400.0,
    )
    beta = (
        -m / 2.0,
        -(m * m) / 3.0,
        -m * (22 * e**2 - 35 * e + 15) / 120.0,
        -m * (176 * e**3 - 357 * e**2 + 252 * e - 63) / 1890.0,
    )
    gamma = (
        m / 2.0,
        -m / 6.0,
        m * (2 * e**2 - 5 * e + 5) / 120.0,
        m * (32 * e**3 - 126 * e**2 + 147 * e - 63) / 7560.0,
    )
    h = 2 * e - 1.0
    kappa = (
        1.0,
        h / 2.0,
        h * (8 * e - 3) / 24.0,
        h * (136 * e**2 - 90 * e + 15) / 720.0,
        h * (3968 * e**3 - 3528 * e**2 + 1050 * e - 105) / 40320.0,
    )
    return alpha, beta, gamma, kappa


def _poly(coeffs, x):
    acc = np.zeros_like(x)
    for c in reversed(coeffs):
        acc = acc * x + c
    return acc


def _series_quantities(e, t):
    """(v, p, rho, g) from the small-lag expansions."""
    x = t * t
    alpha, beta, gamma, kappa = _series_coefficients(e)
    sa, sb = _poly(alpha, x), _poly(beta, x)
    v = x * sb / sa
    with np.errstate(divide="ignore", over="ignore"):  # p -> inf as t -> 0
        p = 1.0 / (2 * math.pi * t * np.sqrt(sa))
    rho = _poly(kappa, x) * _poly(gamma, x) / sb
    g = t * sb / sa**1.5
    return v, p, rho, g


def _exp_remainder(x):
    """``exp(x) - 1 - x`` without cancellation near zero."""
    small = np.abs(x) < 0.1
    xs = np.where(small, x, 0.0)
    series = np.zeros_like(x)
    for k in range(12, 1, -1):
        series = series * xs + 1.0 / math.factorial(k)
    series = series * xs * xs
    xd = np.where(small, 0.0, x)
    return np.where(small, series, np.expm1(xd) - xd)


def _log_remainder(q):
    """``log(1 - q) + q`` for ``0 <= q <= 1``, accurate for small ``q``."""
    small = q < 0.1
    qs = np.where(small, q, 0.0)
    series = np.zeros_like(q)
    for k in range(18, 1, -1):
        series = series * qs - 1.0 / k
    series = series * qs * qs
    with np.errstate(divide="ignore"):
        direct = np.log1p(-np.where(small, 0.0, q)) + q
    return np.where(small, series, direct)


def _direct_quantities(d, t):
    # With L = d*log(1 - q) and (1 - q)**d = exp(L), in the cancelling
    # regime |L| < 1:
    #   A - d q = -(e^L - 1 - L) - d (log(1 - q) + q)
    #   A - B   = (A - d q) - d q expm1((d - 1) log(1 - q))
    # Every term on the right carries full relative precision and the
    # remaining subtractions lose at most a factor ~2.
    s = t / math.sqrt(d)
    logc = log_abs_cos(s)
    q = np.sin(s) ** 2
    log1mq = 2.0 * logc
    big_l = d * log1mq
    cancel = np.abs(big_l) < 1.0
    with np.errstate(under="ignore", invalid="ignore", divide="ignore"):
        big_a = -np.expm1(big_l)
        lq = np.where(cancel, q, 0.0)
        n_rho_small = -_exp_remainder(np.where(cancel, big_l, 0.0)) - d * _log_remainder(lq)
        amb_small = n_rho_small - d * lq * np.expm1((d - 1) * np.log1p(-lq))
        n_rho = np.where(cancel, n_rho_small, big_a - d * q)
        a_minus_b = np.where(cancel, amb_small, big_a - d * np.exp((d - 1) * log1mq) * q)
        c_dm2 = np.asarray(cos_power(d - 2, s))
    v = a_minus_b / big_a
    p = 1.0 / (2 * math.pi * np.sqrt(big_a))
    rho = c_dm2 * n_rho / a_minus_b
    g = a_minus_b / big_a**1.5
    return v, p, rho, g


def _finite_lags(d, t):
    arr = np.asarray(t, dtype=float)
    upper = math.sqrt(d) * math.pi / 2
    if np.any(~(arr > 0)) or np.any(arr > upper * (1 + 1e-15)):
        raise DomainError(f"lag must lie in (0, {upper:g}] for d={d}")
    return arr


def _quantities(d, t):
    """Vectorised (v, p, rho, g) with branch switching at ``T_CUT``."""
    small = t < T_CUT
    if np.all(small):
        v, p, rho, g = _series_quantities(1.0 / d, t)
    elif not np.any(small):
        v, p, rho, g = _direct_quantities(d, t)
    else:
        parts_s = _series_quantities(1.0 / d, t[small])
        parts_d = _direct_quantities(d, t[~small])
        v, p, rho, g = (np.empty_like(t) for _ in range(4))
        for out, ps, pd in zip((v, p, rho, g), parts_s, parts_d):
            out[small] = ps
            out[~small] = pd
    if np.any(np.abs(rho) > 1 + RHO_SLACK):
        worst = float(np.max(np.abs(rho)))
        raise NumericalError(f"|rho_d| = {worst!r} exceeds 1 at d={d}")
    return np.clip(v, 0.0, 1.0), p, np.clip(rho, -1.0, 1.0), np.maximum(g, 0.0)


@lru_cache(maxsize=None)
def branch_disagreement(d):
    """Largest relative gap between the series and direct branches at ``T_CUT``."""
    t = np.array([T_CUT])
    series = _series_quantities(1.0 / d, t)
    direct = _direct_quantities(d, t)
    return max(abs(float(a[0]) / float(b[0]) - 1.0) for a, b in zip(series, direct))


def _prepare(d, t, minimum=2):
    d = _check_degree(d, minimum)
    arr = _finite_lags(d, t)
    gap = branch_disagreement(d)
    if gap > BRANCH_AGREEMENT:
        raise NumericalError(f"small-lag branches disagree by {gap:.3g} at d={d}")
    return d, arr


def conditional_variance(d, t):
    d, arr = _prepare(d, t)
    return _out(_quantities(d, arr)[0], t)


def joint_density(d, t):
    d = _check_degree(d)
    if d == 1:
        arr = _finite_lags(d, t)
        # Z_1(t) = a_1 cos t + a_0 sin t, so 1 - r^2 = sin^2 t exactly
        return _out(1.0 / (2 * math.pi * np.abs(np.sin(arr))), t)
    d, arr = _prepare(d, t)
    return _out(_quantities(d, arr)[1], t)


def conditional_correlation(d, t):
    d, arr = _prepare(d, t)
    return _out(_quantities(d, arr)[2], t)


def two_point_factor(d, t):
    """``g_d(t) = 2*pi*p_d(t)*v_d(t)``."""
    d, arr = _prepare(d, t)
    return _out(_quantities(d, arr)[3], t)


@dataclass(frozen=True)
class RiceIntegrand:
    d: int
    t: float
    v: float
    p: float
    rho: float
    g: float


def rice_integrand(d, t) -> RiceIntegrand:
    d, arr = _prepare(d, float(t))
    v, p, rho, g = (float(x[0]) for x in _quantities(d, np.atleast_1d(arr)))
    return RiceIntegrand(d, float(t), v, p, rho, g)


def rice_bracket(rho):
    """``sqrt(1 - rho^2) + rho*arcsin(rho)``, equal to pi/2 at ``|rho| = 1``.

    Same function as the arctan form, but finite at the endpoints.
    """
    arr = np.asarray(rho, dtype=float)
    if np.any(np.abs(arr) > 1.0):
        raise DomainError("correlation must lie in [-1, 1]")
    value = np.sqrt(1.0 - arr * arr) + arr * np.arcsin(arr)
    return _out(value, rho)


@lru_cache(maxsize=256)
def _centered_moment(d, tol):
    """``E N(N-1) - d`` as one integral, so large ``d`` loses no digits."""
    root = math.sqrt(d)
    upper = root * math.pi / 2
    scale = 2 * root / math.pi

    def integrand(t):
        _, _, rho, g = _quantities(d, t)
        return scale * (g * rice_bracket(rho) - 1.0)

    return integrate(integrand, 0.0, upper, tol=tol, max_evals=MAX_EVALS,
                     breakpoints=range(1, 17))


def second_factorial_moment(d, tol=DEFAULT_TOL) -> QuadratureResult:
    """``E[N_d (N_d - 1)]`` by adaptive quadrature of the Rice integrand.

    The integral runs over ``(0, sqrt(d)*pi/2]`` only; the second half of the
    circle is folded in through the reflection symmetry.  No additive
    constant is present.
    """
    d = _check_degree(d)
    if tol <= 0:
        raise DomainError("tol must be positive")
    if d == 1:
        return QuadratureResult(0.0, 0.0, 1, True)
    _prepare(d, T_CUT)
    centered = _centered_moment(d, float(tol))
    return QuadratureResult(centered.value + d, centered.abs_error_estimate,
                            centered.n_evals, centered.converged)


def variance_exact(d, tol=DEFAULT_TOL) -> float:
    """``Var N_d = E N(N-1) - d + sqrt(d)``; zero for ``d = 1``."""
    d = _check_degree(d)
    if d == 1:
        return 0.0
    if tol <= 0:
        raise DomainError("tol must be positive")
    _prepare(d, T_CUT)
    centered = _centered_moment(d, float(tol))
    if not centered.converged:
        raise ConvergenceError(
            f"Rice quadrature for d={d} stopped at error {centered.abs_error_estimate:.3g}"
        )
    return centered.value + math.sqrt(d)
