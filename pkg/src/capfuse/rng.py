"""Seed-reproducible PRNG used for splits and ballot shuffles.

SplitMix64 is implemented by hand so that shuffles are byte-for-byte
reproducible from a seed across languages and Python versions (the stdlib
Mersenne Twister makes no such promise and is awkward to port). All
arithmetic is modulo 2**64.
"""

from __future__ import annotations

import secrets
from typing import MutableSequence, Sequence, TypeVar

_MASK = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB

T = TypeVar("T")


class SplitMix64:
    """SplitMix64 generator (Steele, Lea and Flood's mixing constants)."""

    def __init__(self, seed: int | None = None):
        if seed is None:
            seed = secrets.randbits(64)
        self._state = seed & _MASK

    def next(self) -> int:
        """Return the next 64-bit output."""
        self._state = (self._state + _GAMMA) & _MASK
        z = self._state
        z = ((z ^ (z >> 30)) * _MIX1) & _MASK
        z = ((z ^ (z >> 27)) * _MIX2) & _MASK
        return z ^ (z >> 31)

    def next_below(self, n: int) -> int:
        """Return an unbiased integer in [0, n) by rejection sampling."""
        if n <= 0:
            raise ValueError("n must be positive")
        # Reject draws above the largest multiple of n to avoid modulo bias.
        limit = (1 << 64) - ((1 << 64) % n)
        while True:
            v = self.next()
            if v < limit:
                return v % n

    def shuffle(self, items: MutableSequence[T]) -> None:
        """Fisher-Yates shuffle in place."""
        for i in range(len(items) - 1, 0, -1):
            j = self.next_below(i + 1)
            items[i], items[j] = items[j], items[i]

    def shuffled(self, items: Sequence[T]) -> list[T]:
        out = list(items)
        self.shuffle(out)
        return out
