"""Counter-based random streams.

Every random quantity in the package is a pure function of a 64-bit key
and a counter, so a Monte Carlo run gives the same numbers however its
samples are split across workers.

Constants (SplitMix64, Steele/Lea/Flood 2014):

* ``GAMMA = 0x9E3779B97F4A7C15`` -- counter increment,
* ``mix64(z)``: ``z ^= z >> 30; z *= 0xBF58476D1CE4E5B9;
  z ^= z >> 27; z *= 0x94D049BB133111EB; z ^= z >> 31`` (mod 2^64).

Derived quantities:

* stream key of task ``i`` under ``master_seed``:
  ``mix64(mix64(master_seed) + (i + 1) * GAMMA)``;
* raw word ``k`` of a stream with key ``K``: ``mix64(K + (k + 1) * GAMMA)``;
* uniform in ``(0, 1]``: ``((word >> 11) + 1) * 2**-53``;
* normals by Box-Muller on consecutive uniform pairs ``(u1, u2)``:
  ``sqrt(-2 ln u1) * cos(2 pi u2)`` and ``sqrt(-2 ln u1) * sin(2 pi u2)``.
"""

from __future__ import annotations

import numpy as np

GAMMA = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_MASK = (1 << 64) - 1
_TWO_PI = 2.0 * np.pi


def mix64(z):
    """SplitMix64 finaliser on an array (or scalar) of uint64."""
    z = np.array(z, dtype=np.uint64, copy=True)
    z ^= z >> np.uint64(30)
    z *= _M1
    z ^= z >> np.uint64(27)
    z *= _M2
    z ^= z >> np.uint64(31)
    return z


def _u64(value):
    return np.uint64(int(value) & _MASK)


def stream_keys(master_seed, indices):
    """Keys of the task streams ``indices`` under ``master_seed``."""
    idx = np.asarray(indices, dtype=np.uint64)
    base = mix64(_u64(master_seed))
    return mix64(base + (idx + np.uint64(1)) * GAMMA)


def stream_key(master_seed, index):
    return int(stream_keys(master_seed, [index])[0])


def raw_words(keys, count):
    """``len(keys) x count`` matrix of raw 64-bit words."""
    keys = np.atleast_1d(np.asarray(keys, dtype=np.uint64))
    counter = np.arange(1, count + 1, dtype=np.uint64) * GAMMA
    return mix64(keys[:, None] + counter[None, :])


def uniforms(keys, count):
    """Uniform doubles in ``(0, 1]``, one row per key."""
    words = raw_words(keys, count)
    return ((words >> np.uint64(11)).astype(np.float64) + 1.0) * 2.0**-53


def normals(keys, count):
    """Standard normals, one row of ``count`` per key (Box-Muller)."""
    pairs = (count + 1) // 2
    u = uniforms(keys, 2 * pairs)
    radius = np.sqrt(-2.0 * np.log(u[:, 0::2]))
    angle = _TWO_PI * u[:, 1::2]
    out = np.empty((u.shape[0], 2 * pairs))
    out[:, 0::2] = radius * np.cos(angle)
    out[:, 1::2] = radius * np.sin(angle)
    return out[:, :count]
