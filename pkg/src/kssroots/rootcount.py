"""Counting the real roots of one KSS polynomial.

Two counters:

``count_roots_grid``
    Sign changes of the circle form on a grid over ``[0, pi]`` (scaled
    step ``h``), refined by halving ``h`` until two consecutive rounds agree.
    ``u = 0`` and ``u = pi`` both correspond to the point at infinity, which
    is not a root almost surely, so every root lies in the open interval.
    Cells with no sign change but a local extremum heading towards zero (or
    a near-zero grid value) are re-examined: the cell is subdivided tenfold
    and the extremum is located by bisection on ``Y'``; a sign flip there
    adds two roots.  Every counted sign change is bisected down to a bracket
    of width ``1e-12`` in ``u`` as a consistency check.

``count_roots_sturm``
    Exact Sturm-chain count on ``X_d`` with integer (scaled dyadic)
    arithmetic; the oracle for small degrees.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .errors import DomainError, NumericalError
from .output import csv_text
from .kernels import _check_degree
from .sampler import KssSample, basis, derivative_normals

DEFAULT_STEP = 0.05
DEFAULT_ROUNDS = 5
STURM_MAX_DEGREE = 30
CONFIRM_WIDTH = 1e-12          # bracket width in u, i.e. 1e-12*sqrt(d) in scaled time
TANGENCY_RTOL = 1e-8
EXTREMUM_MARGIN = 1e-2         # Hermite-estimated |extremum| below which a cell is re-examined
SUBDIVISION = 10


class RootCountError(NumericalError):
    """The grid count did not stabilise, or a bracket failed to confirm."""


@dataclass(frozen=True)
class RootCount:
    d: int
    count: int
    grid_step_used: float
    refinement_rounds: int
    flagged_tangencies: int


@lru_cache(maxsize=8)
def _grid(d, cells):
    u = np.arange(cells + 1) * (math.pi / cells)
    u[-1] = math.pi
    w = basis(d, u)
    w.setflags(write=False)
    return u, w


def _eval_rows(d, b, u):
    """``Y`` for row ``k`` of ``b`` at angle ``u[k]``."""
    return np.einsum("kn,kn->k", basis(d, u), b)


def _bisect_sign_change(d, b, lo, hi, f_lo, width):
    """Shrink brackets ``[lo, hi]`` (one per row of ``b``) to ``width``."""
    lo, hi = lo.copy(), hi.copy()
    neg_lo = np.signbit(f_lo)
    while np.any(hi - lo > width):
        mid = 0.5 * (lo + hi)
        f_mid = _eval_rows(d, b, mid)
        same = np.signbit(f_mid) == neg_lo
        lo = np.where(same, mid, lo)
        hi = np.where(same, hi, mid)
    return lo, hi


def _examine_cells(d, b, bp, lo, hi, flip_sign):
    """Roots hidden in cells whose end values share a sign.

    ``flip_sign`` is +1 where the end values are positive.  Returns the
    number of roots found per cell (0 or an even number).
    """
    k = len(lo)
    steps = np.linspace(0.0, 1.0, SUBDIVISION + 1)
    sub_u = lo[:, None] + (hi - lo)[:, None] * steps[None, :]
    rows = np.repeat(np.arange(k), SUBDIVISION + 1)
    flat = sub_u.ravel()
    vals = _eval_rows(d, b[rows], flat).reshape(k, -1)
    dvals = _eval_rows(d, bp[rows], flat).reshape(k, -1)
    neg = np.signbit(vals)
    found = (neg[:, 1:] != neg[:, :-1]).sum(axis=1)

    # extremum search on every sub-cell where the signed slope turns around
    sv = flip_sign[:, None] * dvals
    turn = (sv[:, :-1] < 0) & (sv[:, 1:] > 0) & (neg[:, 1:] == neg[:, :-1])
    cell_idx, sub_idx = np.nonzero(turn)
    if len(cell_idx):
        a = sub_u[cell_idx, sub_idx]
        c = sub_u[cell_idx, sub_idx + 1]
        bp_rows = bp[cell_idx]
        slope_neg = np.signbit(dvals[cell_idx, sub_idx])
        while np.any(c - a > CONFIRM_WIDTH):
            mid = 0.5 * (a + c)
            same = np.signbit(_eval_rows(d, bp_rows, mid)) == slope_neg
            a = np.where(same, mid, a)
            c = np.where(same, c, mid)
        extreme = _eval_rows(d, b[cell_idx], 0.5 * (a + c))
        crossed = flip_sign[cell_idx] * extreme < 0
        extra = np.zeros(k, dtype=int)
        np.add.at(extra, cell_idx[crossed], 2)
        found = found + extra
    return found


def _hermite_extremum(v0, v1, s0, s1, width):
    """Smallest value of ``sign*p`` for the cubic Hermite interpolant on a cell,
    where ``sign`` is the sign of ``v0``.  Sampled at 33 interior points."""
    sign = np.where(np.signbit(v0), -1.0, 1.0)
    x = np.linspace(0.0, 1.0, 33)[None, :]
    h00 = 2 * x**3 - 3 * x**2 + 1
    h10 = x**3 - 2 * x**2 + x
    h01 = -2 * x**3 + 3 * x**2
    h11 = x**3 - x**2
    p = (h00 * v0[:, None] + h10 * (width * s0)[:, None]
         + h01 * v1[:, None] + h11 * (width * s1)[:, None])
    return (sign[:, None] * p).min(axis=1)


def _grid_round(d, b, bp, cells):
    """One grid pass; returns (counts, flagged_cells, sign-change data)."""
    u, w = _grid(d, cells)
    vals = b @ w.T
    dvals = bp @ w.T
    neg = np.signbit(vals)
    change = neg[:, 1:] != neg[:, :-1]
    counts = change.sum(axis=1)

    v0, v1 = vals[:, :-1], vals[:, 1:]
    s0, s1 = dvals[:, :-1], dvals[:, 1:]
    sign = np.where(neg[:, :-1], -1.0, 1.0)
    turning = ~change & (sign * s0 < 0) & (sign * s1 > 0)
    scale = np.abs(vals).max(axis=1, keepdims=True)
    tiny = ~change & (np.minimum(np.abs(v0), np.abs(v1))
                      < TANGENCY_RTOL * np.maximum(scale, np.finfo(float).tiny))
    width = math.pi / cells
    cand = tiny.copy()
    ri, ci = np.nonzero(turning)
    if len(ri):
        low = _hermite_extremum(v0[ri, ci], v1[ri, ci], s0[ri, ci], s1[ri, ci],
                                np.full(len(ri), width))
        close = low < EXTREMUM_MARGIN * np.maximum(scale[ri, 0], 1.0)
        cand[ri[close], ci[close]] = True

    flagged = cand.sum(axis=1)
    ri, ci = np.nonzero(cand)
    if len(ri):
        extra = _examine_cells(d, b[ri], bp[ri], u[ci], u[ci + 1],
                               np.where(neg[ri, ci], -1.0, 1.0))
        np.add.at(counts, ri, extra)
    return counts, flagged, (u, vals, change)


def _confirm(d, b, u, vals, change):
    """Bisect every sign-change bracket; False for rows with a bad bracket."""
    ri, ci = np.nonzero(change)
    ok = np.ones(b.shape[0], dtype=bool)
    if not len(ri):
        return ok
    lo, hi = _bisect_sign_change(d, b[ri], u[ci], u[ci + 1], vals[ri, ci], CONFIRM_WIDTH)
    f_lo = _eval_rows(d, b[ri], lo)
    f_hi = _eval_rows(d, b[ri], hi)
    scale = np.abs(vals).max(axis=1)[ri]
    good = (np.signbit(f_lo) != np.signbit(f_hi)) & (
        np.minimum(np.abs(f_lo), np.abs(f_hi)) <= 1e-6 * np.maximum(scale, 1.0)
    )
    ok[ri[~good]] = False
    return ok


def count_roots_batch(d, normals, h=DEFAULT_STEP, max_rounds=DEFAULT_ROUNDS, confirm=True):
    """Grid counts for many samples of the same degree.

    ``normals`` has one row of ``d + 1`` standard normals per sample.
    Returns ``(results, failed)`` where ``results`` is a list of
    :class:`RootCount` and ``failed`` a boolean mask of samples whose count
    did not stabilise within ``max_rounds`` or did not confirm.
    """
    d = _check_degree(d)
    b = np.atleast_2d(np.asarray(normals, dtype=float))
    if b.shape[1] != d + 1:
        raise DomainError(f"expected {d + 1} normals per sample, got {b.shape[1]}")
    if not 0 < h <= 0.2:
        raise DomainError("grid step must lie in (0, 0.2]")
    if max_rounds < 2:
        raise DomainError("need at least two rounds to test stability")
    bp = derivative_normals(b)
    n = b.shape[0]
    total = math.sqrt(d) * math.pi
    base_cells = max(2, math.ceil(total / h))

    counts = np.zeros(n, dtype=int)
    flags = np.zeros(n, dtype=int)
    rounds = np.zeros(n, dtype=int)
    cells_used = np.zeros(n, dtype=int)
    failed = np.zeros(n, dtype=bool)
    confirm_ok = np.ones(n, dtype=bool)

    active = np.arange(n)
    previous = None
    for r in range(max_rounds):
        cells = base_cells << r
        cur, flagged, (u, vals, change) = _grid_round(d, b[active], bp[active], cells)
        flags[active] += flagged
        rounds[active] = r + 1
        cells_used[active] = cells
        counts[active] = cur
        if previous is None:
            previous = cur
            continue
        settled = cur == previous
        if confirm and np.any(settled):
            confirm_ok[active[settled]] = _confirm(
                d, b[active[settled]], u, vals[settled], change[settled]
            )
        active = active[~settled]
        previous = cur[~settled]
        if not len(active):
            break
    failed[active] = True
    failed |= ~confirm_ok

    bad_parity = ~failed & ((counts - d) % 2 != 0)
    if np.any(bad_parity):
        raise NumericalError(f"root count parity violated for d={d}")
    results = [
        RootCount(d, int(c), total / int(m), int(rr), int(f))
        for c, m, rr, f in zip(counts, cells_used, rounds, flags)
    ]
    return results, failed


def count_roots_grid(smp: KssSample, h=DEFAULT_STEP, max_rounds=DEFAULT_ROUNDS) -> RootCount:
    """Grid-and-bisection root count of one sample.

    Raises :class:`RootCountError` rather than returning an unstable count.
    """
    results, failed = count_roots_batch(smp.d, smp.normals[None, :], h, max_rounds)
    if failed[0]:
        raise RootCountError(
            f"root count for d={smp.d} did not stabilise in {max_rounds} rounds"
        )
    return results[0]


COUNT_COLUMNS = ("seed_index", "count", "grid_step_used", "flagged_tangencies")


def count_rows_csv(indices, counts, grid_steps, flagged) -> str:
    """Per-sample CSV: one row per sample in the order given."""
    rows = zip((int(i) for i in indices), (int(c) for c in counts),
               (float(h) for h in grid_steps), (int(f) for f in flagged))
    return csv_text(COUNT_COLUMNS, rows)


# ---------------------------------------------------------------- Sturm oracle

def _exact_integer_coefficients(coeffs):
    """Scale exact dyadic rationals to integers (positive common factor)."""
    fracs = [Fraction(float(c)) for c in coeffs]
    denom = 1
    for f in fracs:
        denom = denom * f.denominator // math.gcd(denom, f.denominator)
    return [int(f * denom) for f in fracs]


def _trim(p):
    while p and p[-1] == 0:
        p.pop()
    return p


def _primitive(p):
    g = 0
    for c in p:
        g = math.gcd(g, c)
    return [c // g for c in p] if g > 1 else p


def _pseudo_remainder(a, b):
    """``prem(a, b) = lc(b)^(deg a - deg b + 1) * a mod b`` (low-to-high lists)."""
    r = list(a)
    db, lc = len(b) - 1, b[-1]
    delta = len(a) - len(b) + 1
    for _ in range(delta):
        if len(r) - 1 < db:
            r = [c * lc for c in r]
            continue
        lead = r[-1]
        shift = len(r) - 1 - db
        r = [c * lc for c in r]
        for i, bc in enumerate(b):
            r[i + shift] -= lead * bc
        r.pop()
        _trim(r)
    return r, delta


def sturm_chain(coeffs):
    """Sturm sequence of the polynomial ``sum coeffs[n] x^n`` (integer rows).

    Each element equals the classical remainder sequence term up to a
    positive factor, so sign patterns are exact.
    """
    p0 = _trim(_exact_integer_coefficients(coeffs))
    if len(p0) < 2:
        raise DomainError("polynomial must have degree >= 1")
    p1 = _trim([k * c for k, c in enumerate(p0)][1:])
    chain = [_primitive(p0), _primitive(p1)]
    while len(chain[-1]) > 1:
        a, b = chain[-2], chain[-1]
        rem, delta = _pseudo_remainder(a, b)
        if not rem:
            raise NumericalError("zero Sturm remainder: polynomial is not squarefree")
        sign = 1 if b[-1] > 0 or delta % 2 == 0 else -1
        chain.append(_primitive([-sign * c for c in rem]))
    return chain


def _variations(signs):
    signs = [s for s in signs if s != 0]
    return sum(1 for x, y in zip(signs, signs[1:]) if x != y)


def count_real_roots_exact(coeffs):
    """Number of distinct real roots of ``sum coeffs[n] x^n``."""
    chain = sturm_chain(coeffs)
    at_plus = [1 if p[-1] > 0 else -1 for p in chain]
    at_minus = [s * (-1) ** (len(p) - 1) for s, p in zip(at_plus, chain)]
    return _variations(at_minus) - _variations(at_plus)


def count_roots_sturm(smp: KssSample) -> int:
    """Exact real-root count of ``X_d`` from the sample's float coefficients."""
    if smp.d > STURM_MAX_DEGREE:
        raise DomainError(f"Sturm oracle is limited to d <= {STURM_MAX_DEGREE}")
    return count_real_roots_exact(smp.coefficients)
