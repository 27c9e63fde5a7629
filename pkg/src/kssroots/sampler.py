"""KSS random polynomials and their circle form.

A sample stores standard normals ``b_n`` and ``log_binomial_half[n] =
0.5*ln C(d, n)``; the polynomial coefficients are ``a_n = b_n *
sqrt(C(d, n))``.  The circle form

    Y_d(u) = sum_n a_n cos(u)^n sin(u)^(d-n),   u in [0, pi]

is evaluated term by term in the log domain, so no binomial coefficient is
ever formed explicitly (C(d, n) overflows a double near d = 1030).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from . import streams
from .errors import DomainError
from .kernels import _check_degree

_HALF_LOG_2PI = 0.5 * math.log(2 * math.pi)
_STIRLING_TABLE = np.array(
    [math.lgamma(k + 1) - (k + 0.5) * math.log(k) + k - _HALF_LOG_2PI if k else 0.0
     for k in range(16)]
)


def _stirling_error(n):
    """``ln n! - [(n + 1/2) ln n - n + ln sqrt(2 pi)]`` for integer ``n >= 1``."""
    n = np.asarray(n, dtype=float)
    out = np.empty_like(n)
    small = n <= 15
    out[small] = _STIRLING_TABLE[n[small].astype(int)]
    m = n[~small]
    m2 = m * m
    out[~small] = (1 / 12 - (1 / 360 - (1 / 1260 - (1 / 1680 - 1 / (1188 * m2)) / m2) / m2) / m2) / m
    return out


def log_binomial(d):
    """``ln C(d, n)`` for ``n = 0..d`` at full relative precision.

    Splits each log-gamma into its Stirling part and remainder; the large
    Stirling parts cancel analytically, which ``gammaln(d+1) - ...`` cannot
    do in floating point once ``d`` is large.
    """
    d = _check_degree(d)
    out = np.zeros(d + 1)
    if d == 1:
        return out
    n = np.arange(1, d, dtype=float)
    k = d - n
    frac = n / d
    out[1:d] = (
        -n * np.log(frac)
        - k * np.log1p(-frac)
        + 0.5 * np.log(d / (2 * math.pi * n * k))
        + _stirling_error(np.array([float(d)]))[0]
        - _stirling_error(n)
        - _stirling_error(k)
    )
    # exact symmetry
    half = (d + 1) // 2
    out[d - half + 1:] = out[half - 1::-1][: len(out[d - half + 1:])]
    return out


def log_binomial_half(d):
    return 0.5 * log_binomial(d)


@dataclass(frozen=True, eq=False)
class KssSample:
    d: int
    normals: np.ndarray
    log_binomial_half: np.ndarray
    seed_tag: int

    @property
    def coefficients(self):
        """``a_n = b_n sqrt(C(d, n))``; overflows for very large ``d``."""
        return self.normals * np.exp(self.log_binomial_half)


def _frozen(arr):
    arr = np.array(arr, dtype=float)
    arr.setflags(write=False)
    return arr


def sample(d, stream_seed) -> KssSample:
    """Draw the sample whose normals come from the stream keyed ``stream_seed``."""
    d = _check_degree(d)
    key = int(stream_seed) & ((1 << 64) - 1)
    b = streams.normals([key], d + 1)[0]
    return KssSample(d, _frozen(b), _frozen(log_binomial_half(d)), key)


def run_sample(d, master_seed, index) -> KssSample:
    """Sample ``index`` of a run seeded with ``master_seed``."""
    return sample(d, streams.stream_key(master_seed, index))


def batch_normals(d, master_seed, start, stop):
    """Normals of samples ``start..stop-1`` of a run, one row per sample."""
    keys = streams.stream_keys(master_seed, np.arange(start, stop))
    return streams.normals(keys, d + 1)


def _cos_sin(u):
    c, s = np.cos(u), np.sin(u)
    c = np.where(u == math.pi / 2, 0.0, c)
    s = np.where((u == 0.0) | (u == math.pi), 0.0, s)
    c = np.where(u == math.pi, -1.0, np.where(u == 0.0, 1.0, c))
    return c, s


def basis(d, u):
    """Matrix ``W[j, n] = sqrt(C(d,n)) cos(u_j)^n sin(u_j)^(d-n)``.

    ``Y_d(u_j) = W[j] @ b``.  Exact endpoints are honoured: at ``u = 0`` and
    ``u = pi`` only ``n = d`` survives, at ``u = pi/2`` only ``n = 0``.
    """
    u = np.atleast_1d(np.asarray(u, dtype=float))
    lbh = log_binomial_half(d)
    n = np.arange(d + 1, dtype=float)
    c, s = _cos_sin(u)
    with np.errstate(divide="ignore", invalid="ignore", under="ignore"):
        logc = np.log(np.abs(c))[:, None]
        logs = np.log(np.abs(s))[:, None]
        pc = np.where(n == 0, 0.0, n * logc)
        ps = np.where(n == d, 0.0, (d - n) * logs)
        w = np.exp(lbh + pc + ps)
    flip = (c < 0)[:, None] & (n % 2 == 1)
    return np.where(flip, -w, w)


def derivative_normals(b):
    """Normals ``b'`` with ``Y_d'(u) = W(u) @ b'`` (same basis, rows allowed).

    ``b'_m = sqrt(m (d - m + 1)) b_{m-1} - sqrt((m + 1)(d - m)) b_{m+1}``.
    """
    b = np.asarray(b, dtype=float)
    d = b.shape[-1] - 1
    m = np.arange(d + 1, dtype=float)
    out = np.zeros_like(b)
    out[..., 1:] += np.sqrt(m[1:] * (d - m[1:] + 1)) * b[..., :-1]
    out[..., :-1] -= np.sqrt((m[:-1] + 1) * (d - m[:-1])) * b[..., 1:]
    return out


def _check_angle(u):
    if not 0.0 <= u <= math.pi:
        raise DomainError(f"angle {u!r} outside [0, pi]")


def eval_y(smp: KssSample, u):
    """``Y_d(u)``; scalar ``u`` is summed with ``math.fsum``."""
    if np.ndim(u) == 0:
        u = float(u)
        _check_angle(u)
        terms = basis(smp.d, u)[0] * smp.normals
        return math.fsum(terms.tolist())
    arr = np.asarray(u, dtype=float)
    if np.any(arr < 0) or np.any(arr > math.pi):
        raise DomainError("angle outside [0, pi]")
    return basis(smp.d, arr) @ smp.normals


def _angle_of(d, t):
    root = math.sqrt(d)
    arr = np.asarray(t, dtype=float)
    upper = root * math.pi
    if np.any(arr < 0) or np.any(arr > upper * (1 + 1e-15)):
        raise DomainError(f"scaled time outside [0, {upper:g}]")
    return np.minimum(arr / root, math.pi)


def eval_z(smp: KssSample, t):
    """``Z_d(t) = Y_d(t / sqrt(d))``."""
    u = _angle_of(smp.d, t)
    return eval_y(smp, float(u) if np.ndim(t) == 0 else u)


def dump_csv(smp: KssSample, handle):
    """Write ``n, b_n, log_binomial_half`` rows for debugging."""
    writer = csv.writer(handle, lineterminator="\n")
    writer.writerow(["n", "b_n", "log_binomial_half"])
    for n, (b, lbh) in enumerate(zip(smp.normals, smp.log_binomial_half)):
        writer.writerow([n, f"{b:.17g}", f"{lbh:.17g}"])
