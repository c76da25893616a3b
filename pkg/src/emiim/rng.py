"""Deterministic seeding helpers.

Every stochastic component draws from a numpy PCG64 generator seeded through
``mix64``, a splitmix64 finalizer over ``(master_seed, index)``.  Because each
unit of work (tree, fold) owns the stream derived from its own index, results
are independent of scheduling order.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def mix64(master_seed: int, index: int) -> int:
    """Mix a 64-bit master seed with a sub-stream index (splitmix64 step)."""
    z = (master_seed + _GOLDEN * (index + 1)) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed & _MASK64))


def sample_without_replacement(rng: np.random.Generator, n: int, k: int) -> list[int]:
    """Draw k of range(n) without replacement via partial Fisher-Yates."""
    if not 0 <= k <= n:
        raise ValueError(f"cannot draw {k} from {n}")
    pool = list(range(n))
    for i in range(k):
        j = i + int(rng.integers(n - i))
        pool[i], pool[j] = pool[j], pool[i]
    return pool[:k]
