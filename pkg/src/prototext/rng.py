"""Portable deterministic primitives: FNV-1a hashing and a splitmix64 stream.

Everything here is specified bit-exactly so that identical seeds reproduce
identical results across platforms and processes.
"""

from __future__ import annotations

import numpy as np

_MASK64 = 0xFFFFFFFFFFFFFFFF
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3


def fnv1a64(data: bytes) -> int:
    """64-bit FNV-1a hash of a byte string."""
    h = _FNV_OFFSET
    for b in data:
        h ^= b
        h = (h * _FNV_PRIME) & _MASK64
    return h


def _mix(z: int) -> int:
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
    return z ^ (z >> 31)


class SplitMix64:
    """Sequential splitmix64 generator."""

    def __init__(self, seed: int):
        self._state = seed & _MASK64

    def next_u64(self) -> int:
        self._state = (self._state + _GAMMA) & _MASK64
        return _mix(self._state)

    def uniform(self) -> float:
        """Uniform float in [0, 1) with 53 bits of precision."""
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def randint(self, bound: int) -> int:
        """Integer in [0, bound). Modulo bias is negligible for small bounds."""
        return self.next_u64() % bound

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates shuffle."""
        for i in range(len(items) - 1, 0, -1):
            j = self.randint(i + 1)
            items[i], items[j] = items[j], items[i]

    def sample_distinct(self, population: int, count: int) -> list[int]:
        """Draw `count` indices from range(population) without replacement.

        Falls back to drawing with replacement once the population is
        exhausted, so `count > population` is allowed.
        """
        pool = list(range(population))
        self.shuffle(pool)
        out = []
        while len(out) < count:
            take = min(count - len(out), population)
            out.extend(pool[:take])
        return out


def uniforms(seed: int, count: int) -> np.ndarray:
    """The first `count` uniform draws of SplitMix64(seed), vectorized.

    splitmix64's k-th state is seed + k*gamma, so the whole stream can be
    produced without sequential dependency. Bit-identical to calling
    SplitMix64(seed).uniform() `count` times.
    """
    k = np.arange(1, count + 1, dtype=np.uint64)
    z = (np.uint64(seed & _MASK64) + k * np.uint64(_GAMMA)).astype(np.uint64)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
    z = z ^ (z >> np.uint64(31))
    return (z >> np.uint64(11)).astype(np.float64) * (1.0 / (1 << 53))
