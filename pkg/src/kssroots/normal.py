"""Complementary error function and the standard normal CDF.

Two regimes, switched at ``|x| = 3``:

* ``|x| < 3``: the positive-term series
  ``erf(x) = (2/sqrt(pi)) x exp(-x^2) sum_n (2x^2)^n / (2n+1)!!``
  (80 terms; no cancellation), then ``erfc = 1 - erf``.  Absolute error is
  a few ulps of 1.
* ``x >= 3``: the continued fraction
  ``erfc(x) = exp(-x^2)/sqrt(pi) / (x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))``
  with partial numerators ``k/2``, evaluated bottom-up from depth 60.
  Relative error below 1e-15 on ``[3, inf)``.

For ``x <= -3``, ``erfc(x) = 2 - erfc(-x)``.  Overall absolute error is
well under 1e-12.
"""

from __future__ import annotations

import math

import numpy as np

SWITCH = 3.0
SERIES_TERMS = 80
FRACTION_DEPTH = 60
_TWO_OVER_SQRT_PI = 2.0 / math.sqrt(math.pi)
_INV_SQRT_PI = 1.0 / math.sqrt(math.pi)


def _erf_series(x):
    x2 = x * x
    term = np.ones_like(x)
    total = np.ones_like(x)
    for n in range(1, SERIES_TERMS):
        term = term * (2.0 * x2) / (2 * n + 1)
        total = total + term
    return _TWO_OVER_SQRT_PI * x * np.exp(-x2) * total


def _erfc_fraction(x):
    tail = np.zeros_like(x)
    for k in range(FRACTION_DEPTH, 0, -1):
        tail = (0.5 * k) / (x + tail)
    with np.errstate(under="ignore"):
        return _INV_SQRT_PI * np.exp(-x * x) / (x + tail)


def erfc(x):
    """``erfc`` for scalars or arrays."""
    arr = np.asarray(x, dtype=float)
    a = np.abs(arr)
    small = a < SWITCH
    out = np.empty_like(arr)
    if np.any(small):
        xs = arr[small]
        out[small] = 1.0 - _erf_series(xs)
    big = ~small
    if np.any(big):
        tail = _erfc_fraction(a[big])
        out[big] = np.where(arr[big] > 0, tail, 2.0 - tail)
    return float(out) if np.ndim(x) == 0 else out


def normal_cdf(x):
    """Standard normal CDF ``Phi(x) = erfc(-x/sqrt(2))/2``."""
    arr = np.asarray(x, dtype=float)
    out = 0.5 * erfc(-arr / math.sqrt(2.0))
    return float(out) if np.ndim(x) == 0 else out
