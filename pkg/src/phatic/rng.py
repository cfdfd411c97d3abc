"""SplitMix64, the generator behind every random choice in the package.

Constants are the published SplitMix64 ones (Steele, Lea & Flood 2014), so a
seed pins a trace no matter which implementation replays it:

    state += 0x9E3779B97F4A7C15
    z = (state ^ (state >> 30)) * 0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB
    out = z ^ (z >> 31)

All arithmetic is modulo 2**64.  ``below(n)`` rejects the biased tail so the
draw is exactly uniform.
"""

from __future__ import annotations

from fractions import Fraction
from math import lcm
from typing import Sequence

MASK = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15
MIX1 = 0xBF58476D1CE4E5B9
MIX2 = 0x94D049BB133111EB


class SplitMix64:
    __slots__ = ("state",)

    def __init__(self, seed: int):
        self.state = seed & MASK

    def next_u64(self) -> int:
        self.state = (self.state + GOLDEN_GAMMA) & MASK
        z = self.state
        z = ((z ^ (z >> 30)) * MIX1) & MASK
        z = ((z ^ (z >> 27)) * MIX2) & MASK
        return z ^ (z >> 31)

    def below(self, n: int) -> int:
        if n <= 0:
            raise ValueError("n must be positive")
        limit = (1 << 64) - ((1 << 64) % n)
        while True:
            x = self.next_u64()
            if x < limit:
                return x % n

    def choose_index(self, weights: Sequence[Fraction | int]) -> int:
        """Index drawn with probability proportional to its (rational) weight."""
        return self.pick(integer_weights(weights))

    def pick(self, ints: Sequence[int]) -> int:
        """Like choose_index, for weights already scaled by integer_weights."""
        r = self.below(sum(ints))
        for i, w in enumerate(ints):
            if r < w:
                return i
            r -= w
        raise AssertionError("unreachable")


def integer_weights(weights: Sequence[Fraction | int]) -> tuple[int, ...]:
    """Scale rational weights by the lcm of their denominators."""
    if not weights:
        raise ValueError("empty choice")
    fr = [Fraction(w) for w in weights]
    den = lcm(*(w.denominator for w in fr))
    ints = tuple(int(w * den) for w in fr)
    if any(w <= 0 for w in ints):
        raise ValueError("weights must be positive")
    return ints


def derive_seed(seed: int, stream: int) -> int:
    """Seed for an independent stream (e.g. surface realization) of a run."""
    return SplitMix64(seed ^ ((stream * GOLDEN_GAMMA) & MASK)).next_u64()
