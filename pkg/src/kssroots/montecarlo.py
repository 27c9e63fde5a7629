"""Monte Carlo estimates of the root-count moments and the CLT diagnostics.

Samples are processed in fixed blocks of ``BLOCK`` consecutive indices.
Sample ``i`` always draws from stream ``i`` of the master seed, so the
counts do not depend on how blocks are spread over workers; moment
accumulators are merged in block order, which makes every summary
bit-identical for any worker count.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from . import streams
from .asymptotics import sigma2_direct
from .errors import DomainError, NumericalError
from .kernels import _check_degree
from .normal import normal_cdf
from .rootcount import DEFAULT_ROUNDS, DEFAULT_STEP, count_roots_batch
from .sampler import batch_normals

BLOCK = 1000
BOOTSTRAP_RESAMPLES = 1000
BOOTSTRAP_TAG = 0xB007_5742_D15C_0DE5  # xor-ed into the master seed
MAX_EXCLUDED_FRACTION = 1e-3
MIN_SAMPLES = 100


class MonteCarloError(NumericalError):
    """Too many samples had to be excluded from a run."""


@dataclass(frozen=True)
class CountRun:
    """Raw per-sample output of a run, in sample-index order."""

    d: int
    master_seed: int
    counts: np.ndarray
    failed: np.ndarray
    grid_step_used: np.ndarray
    flagged_tangencies: np.ndarray

    @property
    def n_excluded(self):
        return int(self.failed.sum())

    def kept(self):
        return self.counts[~self.failed]


@dataclass(frozen=True)
class MonteCarloSummary:
    d: int
    n_samples: int
    master_seed: int
    mean: float
    variance: float
    se_mean: float
    se_variance: float
    skewness: float
    excess_kurtosis: float
    ks_distance: float
    sigma2_ref: float
    n_excluded: int = 0

    def to_record(self):
        return asdict(self)


def _count_block(d, master_seed, start, stop, h, max_rounds):
    b = batch_normals(d, master_seed, start, stop)
    results, failed = count_roots_batch(d, b, h, max_rounds)
    counts = np.array([r.count for r in results], dtype=np.int64)
    steps = np.array([r.grid_step_used for r in results])
    flags = np.array([r.flagged_tangencies for r in results], dtype=np.int64)
    return counts, failed, steps, flags


def count_samples(d, n_samples, master_seed, workers=1, h=DEFAULT_STEP,
                  max_rounds=DEFAULT_ROUNDS) -> CountRun:
    """Count roots of samples ``0..n_samples-1`` of the run ``master_seed``."""
    d = _check_degree(d)
    if int(n_samples) != n_samples or n_samples < MIN_SAMPLES:
        raise DomainError(f"need at least {MIN_SAMPLES} samples")
    if int(workers) != workers or workers < 1:
        raise DomainError("workers must be a positive integer")
    n_samples, workers = int(n_samples), int(workers)
    seed = int(master_seed) & ((1 << 64) - 1)
    bounds = [(s, min(s + BLOCK, n_samples)) for s in range(0, n_samples, BLOCK)]
    args = [(d, seed, s, e, h, max_rounds) for s, e in bounds]
    if workers == 1 or len(bounds) == 1:
        parts = [_count_block(*a) for a in args]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_count_block, *zip(*args)))
    counts, failed, steps, flags = (np.concatenate(p) for p in zip(*parts))
    return CountRun(d, seed, counts, failed, steps, flags)


def _check_excluded(run: CountRun):
    n = len(run.counts)
    if run.n_excluded > MAX_EXCLUDED_FRACTION * n:
        raise MonteCarloError(
            f"{run.n_excluded} of {n} samples excluded at d={run.d} "
            f"(indices {np.flatnonzero(run.failed)[:10].tolist()}...)"
        )


# ------------------------------------------------------------ moment merging

def _block_moments(x):
    """(n, mean, M2, M3, M4) with ``Mk`` the k-th central sum."""
    x = np.asarray(x, dtype=float)
    n = len(x)
    mean = x.mean()
    dev = x - mean
    return n, mean, float(np.sum(dev**2)), float(np.sum(dev**3)), float(np.sum(dev**4))


def _merge(a, b):
    """Pairwise combination of central-moment accumulators (Chan/Pebay)."""
    na, ma, m2a, m3a, m4a = a
    nb, mb, m2b, m3b, m4b = b
    if na == 0:
        return b
    if nb == 0:
        return a
    n = na + nb
    delta = mb - ma
    mean = ma + delta * nb / n
    m2 = m2a + m2b + delta**2 * na * nb / n
    m3 = (m3a + m3b + delta**3 * na * nb * (na - nb) / n**2
          + 3 * delta * (na * m2b - nb * m2a) / n)
    m4 = (m4a + m4b + delta**4 * na * nb * (na * na - na * nb + nb * nb) / n**3
          + 6 * delta**2 * (na * na * m2b + nb * nb * m2a) / n**2
          + 4 * delta * (na * m3b - nb * m3a) / n)
    return n, mean, m2, m3, m4


def merged_moments(x, block=BLOCK):
    acc = (0, 0.0, 0.0, 0.0, 0.0)
    for start in range(0, len(x), block):
        acc = _merge(acc, _block_moments(x[start:start + block]))
    return acc


def bootstrap_variance_se(x, master_seed, resamples=BOOTSTRAP_RESAMPLES):
    """Bootstrap standard error of the sample variance (ddof=1).

    Resample ``k`` draws its indices from stream ``k`` of the seed
    ``master_seed ^ BOOTSTRAP_TAG``: index ``floor(u * n)`` for uniform
    ``u`` in ``(0, 1]``, clipped to ``n - 1``.
    """
    x = np.asarray(x, dtype=float)
    n = len(x)
    if n < 2:
        return 0.0
    seed = (int(master_seed) ^ BOOTSTRAP_TAG) & ((1 << 64) - 1)
    stats = np.empty(resamples)
    chunk = max(1, 2_000_000 // n)
    for start in range(0, resamples, chunk):
        stop = min(start + chunk, resamples)
        keys = streams.stream_keys(seed, np.arange(start, stop))
        idx = np.minimum((streams.uniforms(keys, n) * n).astype(np.int64), n - 1)
        stats[start:stop] = x[idx].var(axis=1, ddof=1)
    return float(stats.std(ddof=1))


def ks_distance(samples, sigma2) -> float:
    """``sup |F_n(x) - Phi(x / sigma)|`` over the sample, ties handled exactly."""
    if not sigma2 > 0:
        raise DomainError("sigma2 must be positive")
    x = np.sort(np.asarray(samples, dtype=float).ravel())
    n = len(x)
    if n == 0:
        raise DomainError("need at least one sample")
    values, first = np.unique(x, return_index=True)
    below = first / n
    upto = np.append(first[1:], n) / n
    cdf = normal_cdf(values / math.sqrt(sigma2))
    return float(max(np.max(np.abs(upto - cdf)), np.max(np.abs(cdf - below))))


def standardize(counts, d):
    return (np.asarray(counts, dtype=float) - math.sqrt(d)) / d**0.25


def summarize(run: CountRun, sigma2_ref=None, resamples=BOOTSTRAP_RESAMPLES) -> MonteCarloSummary:
    _check_excluded(run)
    x = run.kept().astype(float)
    n, mean, m2, m3, m4 = merged_moments(x)
    variance = m2 / (n - 1) if n > 1 else 0.0
    if m2 > 0:
        skew = (m3 / n) / (m2 / n) ** 1.5
        kurt = (m4 / n) / (m2 / n) ** 2 - 3.0
    else:
        # degenerate sample (d = 1): report zeros rather than NaN
        skew = kurt = 0.0
    if sigma2_ref is None:
        sigma2_ref = sigma2_direct().value
    return MonteCarloSummary(
        d=run.d,
        n_samples=len(run.counts),
        master_seed=run.master_seed,
        mean=float(mean),
        variance=float(variance),
        se_mean=math.sqrt(variance / n),
        se_variance=bootstrap_variance_se(x, run.master_seed, resamples),
        skewness=float(skew),
        excess_kurtosis=float(kurt),
        ks_distance=ks_distance(standardize(x, run.d), sigma2_ref),
        sigma2_ref=float(sigma2_ref),
        n_excluded=run.n_excluded,
    )


def run(d, n_samples, master_seed, workers=1, h=DEFAULT_STEP, max_rounds=DEFAULT_ROUNDS,
        sigma2_ref=None) -> MonteCarloSummary:
    """Count, aggregate and diagnose ``n_samples`` KSS samples of degree ``d``."""
    counted = count_samples(d, n_samples, master_seed, workers, h, max_rounds)
    return summarize(counted, sigma2_ref)


def standardized_sample(d, n_samples, master_seed, workers=1, h=DEFAULT_STEP,
                        max_rounds=DEFAULT_ROUNDS):
    """``(N_i - sqrt(d)) / d^(1/4)`` for every non-excluded sample."""
    counted = count_samples(d, n_samples, master_seed, workers, h, max_rounds)
    _check_excluded(counted)
    return standardize(counted.kept(), counted.d)
