"""Deterministic random-number streams for parallel replicates.

Every replicate of every experiment draws from its own counter-based
Philox stream, keyed by (master_seed, replicate, lane).  Streams never
depend on scheduling, so results are identical for any thread count.

Bulk numba kernels seed their internal generator from ``kernel_seed``,
which mixes the same (master_seed, replicate, lane) triple through
splitmix64.  One logical consumer, one lane.
"""

from __future__ import annotations

import numpy as np

# Lane ids. Walk directions, charge values, embedded durations and
# auxiliary draws (mixture Z's, Brownian increments) must never share
# a stream.
LANE_WALK = 0
LANE_CHARGE = 1
LANE_DURATION = 2
LANE_BROWNIAN = 3
LANE_AUX = 4

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def mix64(x: int) -> int:
    """splitmix64 finalizer; full-period bijection on 64-bit words."""
    x &= _MASK64
    x = (x + _GOLDEN) & _MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


def stream(master_seed: int, replicate: int = 0, lane: int = 0) -> np.random.Generator:
    """Philox stream for one (replicate, lane) pair under a master seed."""
    if replicate < 0:
        raise ValueError("replicate index must be nonnegative")
    key = np.array(
        [np.uint64(master_seed & _MASK64),
         np.uint64(((lane & 0xFFFF) << 48) ^ (replicate & _MASK64 >> 16))],
        dtype=np.uint64,
    )
    return np.random.Generator(np.random.Philox(key=key))


def kernel_seed(master_seed: int, replicate: int = 0, lane: int = 0) -> int:
    """32-bit seed for numba-internal generators, one per (replicate, lane)."""
    return mix64(mix64(master_seed ^ (replicate * _GOLDEN)) ^ lane) & 0xFFFFFFFF


def spawn_raw(master_seed: int, replicate: int, lane: int, n_words: int) -> np.ndarray:
    """n_words raw uint64 Philox draws from the given stream."""
    gen = stream(master_seed, replicate, lane)
    return gen.bit_generator.random_raw(n_words).astype(np.uint64)
