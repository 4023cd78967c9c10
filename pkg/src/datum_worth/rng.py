"""Deterministic random number generation.

Everything random in this package flows through SplitMix64, a tiny 64-bit
generator with a closed-form definition, so that seeded results reproduce
bit-for-bit on any platform or implementation of the same recipe:

    state    <- (state + 0x9E3779B97F4A7C15) mod 2^64
    output   <- mix(state)

    mix(z): z ^= z >> 30; z *= 0xBF58476D1CE4E5B9  (mod 2^64)
            z ^= z >> 27; z *= 0x94D049BB133111EB  (mod 2^64)
            z ^= z >> 31

Independent streams are derived from a root seed plus a label (an integer
index or a short string hashed with 64-bit FNV-1a):

    stream_seed(seed, label) = mix(seed XOR mix(label))

Integers below a bound come from rejection sampling on raw 64-bit draws
(no modulo bias); shuffles are standard Fisher-Yates driven by those
bounded draws.
"""

from __future__ import annotations

from typing import Sequence, TypeVar

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15

T = TypeVar("T")


def _mix(z: int) -> int:
    z &= _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def _fnv1a64(text: str) -> int:
    h = 0xCBF29CE484222325
    for byte in text.encode("utf-8"):
        h = ((h ^ byte) * 0x100000001B3) & _MASK64
    return h


def stream_seed(seed: int, label: int | str) -> int:
    """Derive the seed of an independent stream from a root seed and a label."""
    if isinstance(label, str):
        label = _fnv1a64(label)
    return _mix((seed & _MASK64) ^ _mix(label))


class SplitMix64:
    """Sequential SplitMix64 generator over a 64-bit state."""

    def __init__(self, seed: int):
        self._state = seed & _MASK64

    def next_u64(self) -> int:
        self._state = (self._state + _GAMMA) & _MASK64
        return _mix(self._state)

    def randbelow(self, n: int) -> int:
        """Uniform integer in [0, n) via rejection sampling."""
        if n <= 0:
            raise ValueError("randbelow requires n >= 1")
        limit = _MASK64 + 1 - ((_MASK64 + 1) % n)
        while True:
            u = self.next_u64()
            if u < limit:
                return u % n

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates shuffle."""
        for i in range(len(items) - 1, 0, -1):
            j = self.randbelow(i + 1)
            items[i], items[j] = items[j], items[i]

    def permutation(self, n: int) -> list[int]:
        order = list(range(n))
        self.shuffle(order)
        return order

    def sample(self, items: Sequence[T], k: int) -> list[T]:
        """k draws without replacement, by partial Fisher-Yates."""
        if k > len(items):
            raise ValueError(f"cannot sample {k} from {len(items)} items")
        pool = list(items)
        for i in range(k):
            j = i + self.randbelow(len(pool) - i)
            pool[i], pool[j] = pool[j], pool[i]
        return pool[:k]


def stream(seed: int, label: int | str) -> SplitMix64:
    """Generator for the independent stream named ``label`` under ``seed``."""
    return SplitMix64(stream_seed(seed, label))
