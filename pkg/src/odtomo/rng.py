"""Deterministic random number generation.

All randomness in this package flows through SplitMix64, a tiny
counter-style 64-bit generator (Steele, Lea & Flood 2014). It was chosen
over ``numpy.random`` because the byte-for-byte output of a seeded run is
part of the package contract: the same seed must produce the same draws on
every platform and under both the native and pure-Python kernels, and
SplitMix64 is small enough to implement identically in both.

Streams are split by hashing ``(seed, key...)`` through the output mix, so
independent trials can draw concurrently without sharing state.
"""

from __future__ import annotations

MASK64 = 0xFFFFFFFFFFFFFFFF
GOLDEN = 0x9E3779B97F4A7C15

# 1/2**53, scales a 53-bit integer into [0, 1)
_INV53 = 1.0 / (1 << 53)


def mix64(x: int) -> int:
    """SplitMix64 output mixing function (finalizer of the sequence)."""
    x &= MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


def derive_stream(seed: int, *keys: int) -> int:
    """Derive an independent stream seed from a master seed and integer keys.

    Used to fan trials, instances and measurement sets out of one master
    seed: ``derive_stream(seed, trial)``, ``derive_stream(seed, trial, n)``
    and so on. The derivation is pure arithmetic, stable across releases.
    """
    state = mix64((seed & MASK64) ^ GOLDEN)
    for k in keys:
        state = mix64(state ^ mix64((k & MASK64) + GOLDEN))
    return state


class SplitMix64:
    """Sequential SplitMix64 generator.

    The full generator state is the single ``state`` integer, which makes
    checkpointing trivial: kernels take a state in and hand the advanced
    state back.
    """

    __slots__ = ("state",)

    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next_uint64(self) -> int:
        self.state = (self.state + GOLDEN) & MASK64
        return mix64(self.state)

    def uniform(self) -> float:
        """Uniform draw in [0, 1) with 53 random bits."""
        return (self.next_uint64() >> 11) * _INV53

    def uniform_range(self, lo: float, hi: float) -> float:
        return lo + (hi - lo) * self.uniform()

    def randint_below(self, n: int) -> int:
        """Uniform integer in [0, n) by rejection (no modulo bias)."""
        if n <= 0:
            raise ValueError("n must be positive")
        limit = (MASK64 + 1) - (MASK64 + 1) % n
        while True:
            x = self.next_uint64()
            if x < limit:
                return x % n

    def sample_indices(self, n: int, k: int) -> list[int]:
        """k distinct indices drawn uniformly from range(n), in draw order.

        Partial Fisher-Yates over an index table; O(n) memory, O(k) draws.
        """
        if not 0 <= k <= n:
            raise ValueError(f"cannot sample {k} from {n}")
        table = list(range(n))
        out = []
        for i in range(k):
            j = i + self.randint_below(n - i)
            table[i], table[j] = table[j], table[i]
            out.append(table[i])
        return out

    def spawn(self, *keys: int) -> "SplitMix64":
        """Child generator on an independent stream keyed by ``keys``."""
        return SplitMix64(derive_stream(self.state, *keys))
