"""Scaled covariance of the KSS circle process and its Gaussian limit.

With ``Z_d(t) = Y_d(t / sqrt(d))`` the covariance is
``r_d(t) = cos(t/sqrt(d))**d`` on ``|t| <= sqrt(d)*pi``.  All functions
accept a scalar or an array of lags and return the same shape.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

# Above this exponent cos**k goes through exp(k*log|cos|).
_DIRECT_POWER_MAX = 64


def _check_degree(d, minimum=1):
    if isinstance(d, bool) or int(d) != d or d < minimum:
        raise DomainError(f"degree must be an integer >= {minimum}, got {d!r}")
    return int(d)


def _lags(d, t, t_max):
    arr = np.asarray(t, dtype=float)
    if np.any(~np.isfinite(arr)) or np.any(np.abs(arr) > t_max * (1 + 1e-15)):
        raise DomainError(f"lag outside [-{t_max:g}, {t_max:g}] for d={d}")
    return arr


def _out(arr, like):
    return float(arr) if np.ndim(like) == 0 else arr


def log_abs_cos(s):
    """``log|cos s|`` without the cancellation of ``log(cos s)`` near s = 0."""
    s = np.asarray(s, dtype=float)
    sin2 = np.sin(s) ** 2
    with np.errstate(divide="ignore"):
        near_one = 0.5 * np.log1p(-np.minimum(sin2, 0.5))
        direct = np.log(np.abs(np.cos(s)))
    return np.where(sin2 < 0.5, near_one, direct)


def cos_power(k, s):
    """``cos(s)**k`` for integer ``k >= 0`` with explicit sign bookkeeping.

    Large exponents are evaluated as ``sign**k * exp(k*log|cos s|)`` so that
    underflow produces a correctly signed zero and the relative error does not
    grow like ``k * eps``.
    """
    s = np.asarray(s, dtype=float)
    if k <= _DIRECT_POWER_MAX:
        return np.cos(s) ** k
    magnitude = np.exp(k * log_abs_cos(s))
    if k % 2 == 0:
        return magnitude
    return np.where(np.cos(s) < 0, -magnitude, magnitude)


def covariance(d, t):
    """``r_d(t) = cos(t/sqrt(d))**d``."""
    d = _check_degree(d)
    root = math.sqrt(d)
    arr = _lags(d, t, root * math.pi)
    return _out(cos_power(d, arr / root), t)


def covariance_d1(d, t):
    """``r_d'(t) = -sqrt(d) cos^(d-1)(t/sqrt(d)) sin(t/sqrt(d))``."""
    d = _check_degree(d)
    root = math.sqrt(d)
    s = _lags(d, t, root * math.pi) / root
    return _out(-root * cos_power(d - 1, s) * np.sin(s), t)


def covariance_d2(d, t):
    """``r_d''(t)``; only defined here for ``d >= 2``.

    At ``d = 1`` the closed form carries a ``cos**-1`` factor; that case is
    rejected rather than patched.
    """
    d = _check_degree(d, minimum=2)
    root = math.sqrt(d)
    s = _lags(d, t, root * math.pi) / root
    value = (d - 1) * cos_power(d - 2, s) * np.sin(s) ** 2 - cos_power(d, s)
    return _out(value, t)


def gaussian_limit(t):
    """Limit kernel ``exp(-t**2/2)``."""
    arr = np.asarray(t, dtype=float)
    return _out(np.exp(-0.5 * arr * arr), t)


@dataclass(frozen=True)
class KernelPoint:
    d: int
    t: float
    r: float
    r1: float
    r2: float


def kernel_point(d, t) -> KernelPoint:
    t = float(t)
    return KernelPoint(d, t, covariance(d, t), covariance_d1(d, t), covariance_d2(d, t))


@dataclass(frozen=True)
class BoundParams:
    """Split point ``a`` of the two-branch upper bound on ``r_d``."""

    a: float = 0.5

    def __post_init__(self):
        if not 0.0 < self.a < 1.0:
            raise DomainError(f"split point must lie in (0, 1), got {self.a}")

    @property
    def alpha(self) -> float:
        return 1.0 - self.a * self.a / 3.0


def covariance_upper_bound(d, t, params: BoundParams = BoundParams()):
    """Upper bound for ``r_d`` on ``[0, sqrt(d)*pi/2]``.

    ``exp(-alpha t^2/2)`` below ``a*sqrt(d)``, ``cos(a)**d`` from there on.
    """
    d = _check_degree(d)
    root = math.sqrt(d)
    arr = np.asarray(t, dtype=float)
    if np.any(arr < 0) or np.any(arr > root * math.pi / 2 * (1 + 1e-15)):
        raise DomainError("bound is stated on [0, sqrt(d)*pi/2]")
    inner = np.exp(-0.5 * params.alpha * arr * arr)
    outer = math.cos(params.a) ** d
    return _out(np.where(arr < params.a * root, inner, outer), t)
