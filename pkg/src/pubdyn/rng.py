"""Deterministic counter-based random streams.

The generator is SplitMix64 (the mixing constants published by Steele, Lea
and Vigna), driven by a 64-bit counter instead of a mutated state word:
output ``k`` of a stream is a pure function of ``(seed, k)``.  That makes
whole spans of the stream computable as numpy vectors, and guarantees that
the same seed yields the same bytes regardless of chunk sizes, platform or
thread count.  The algorithm is small enough to re-implement in any
language from this file alone.
"""

from __future__ import annotations

import math

import numpy as np

_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_MASK = (1 << 64) - 1

# 53-bit mantissa step; uniforms live on the open-closed interval (0, 1].
_U53 = 1.0 / (1 << 53)


def mix64(value: int) -> int:
    """SplitMix64 finalizer for a single 64-bit value."""
    z = (value + _GOLDEN) & _MASK
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK
    return z ^ (z >> 31)


def _mix_block(states: np.ndarray) -> np.ndarray:
    z = (states + np.uint64(_GOLDEN))
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
    return z ^ (z >> np.uint64(31))


def scramble(values) -> np.ndarray:
    """Vectorized mix64 over an integer array.

    The finalizer is a bijection on 64-bit words, so distinct inputs give
    distinct outputs; used to turn dense counters into realistic-looking
    but collision-free identifiers.
    """
    return _mix_block(np.asarray(values).astype(np.uint64))


class Stream:
    """One seeded SplitMix64 stream with vectorized draw methods.

    Draw methods consume a documented number of raw 64-bit words, so two
    streams with the same seed that perform the same sequence of calls
    produce identical output.  ``spawn`` derives statistically independent
    child streams; generation code gives each sampling phase its own child
    so the phases can be reordered or parallelized without changing output.
    """

    def __init__(self, seed: int, salt: int = 0):
        self._seed = mix64((seed & _MASK) ^ mix64(salt & _MASK))
        self._counter = 0

    def spawn(self, salt: int) -> "Stream":
        return Stream(self._seed, salt + 1)

    def raw(self, n: int) -> np.ndarray:
        """Next ``n`` raw 64-bit words as a uint64 array."""
        if n < 0:
            raise ValueError("n must be non-negative")
        start = (self._seed + (self._counter + 1) * _GOLDEN) & _MASK
        self._counter += n
        states = (np.uint64(start)
                  + np.arange(n, dtype=np.uint64) * np.uint64(_GOLDEN))
        return _mix_block(states)

    def uniform(self, n: int) -> np.ndarray:
        """Uniform doubles on (0, 1]; strictly positive so log() is safe."""
        return ((self.raw(n) >> np.uint64(11)).astype(np.float64) + 1.0) * _U53

    def integers(self, n: int, lo: int, hi: int) -> np.ndarray:
        """Uniform integers on [lo, hi] inclusive, as int64.

        Uses modular reduction of the raw word; the bias is < span/2**64
        and irrelevant next to reproducibility.
        """
        if hi < lo:
            raise ValueError("hi must be >= lo")
        span = np.uint64(hi - lo + 1)
        return (self.raw(n) % span).astype(np.int64) + lo

    def normal(self, n: int) -> np.ndarray:
        """Standard normals via Box-Muller; consumes 2*ceil(n/2) words."""
        m = (n + 1) // 2
        u1 = self.uniform(m)
        u2 = self.uniform(m)
        radius = np.sqrt(-2.0 * np.log(u1))
        angle = (2.0 * math.pi) * u2
        out = np.empty(2 * m, dtype=np.float64)
        out[0::2] = radius * np.cos(angle)
        out[1::2] = radius * np.sin(angle)
        return out[:n]

    def chance(self, n: int, probability: float) -> np.ndarray:
        """Boolean array, True with the given probability."""
        return self.uniform(n) <= probability
