"""Seeded counter-based generator (SplitMix64) used for all randomness."""

from __future__ import annotations

import numpy as np

MASK = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15


def mix(z: int) -> int:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9 & MASK
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB & MASK
    return z ^ (z >> 31)


class SplitMix64:
    def __init__(self, seed: int = 0):
        self.state = seed & MASK

    def next_u64(self) -> int:
        self.state = (self.state + GOLDEN) & MASK
        return mix(self.state)

    def uniform(self) -> float:
        """Uniform in [0, 1) with 53 random bits."""
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def integer(self, lo: int, hi: int) -> int:
        """Uniform integer in [lo, hi]."""
        span = hi - lo + 1
        return lo + self.next_u64() % span

    def uniform_array(self, n: int) -> np.ndarray:
        """n uniforms; vectorised counter evaluation of the same stream."""
        start = self.state
        counters = (np.arange(1, n + 1, dtype=np.uint64) * np.uint64(GOLDEN) + np.uint64(start))
        self.state = (start + n * GOLDEN) & MASK
        z = counters
        with np.errstate(over="ignore"):
            z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
            z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
            z = z ^ (z >> np.uint64(31))
        return (z >> np.uint64(11)).astype(np.float64) * (1.0 / (1 << 53))


def derive(seed: int, *keys: int) -> int:
    """Independent child seed for a job or stream index."""
    z = seed & MASK
    for k in keys:
        z = mix((z + GOLDEN * (k + 1)) & MASK)
    return z
