"""Deterministic, platform-independent random number generation.

All randomized operations in the toolkit (corpus sampling, top-k sampling
decoding) draw from SplitMix64 (Steele, Lea & Vigna), a 64-bit
counter-based generator. The full definition is below, so any
implementation in any language can reproduce the streams bit for bit:

    state   <- (state + 0x9E3779B97F4A7C15) mod 2^64
    z       <- state
    z       <- ((z XOR (z >> 30)) * 0xBF58476D1CE4E5B9) mod 2^64
    z       <- ((z XOR (z >> 27)) * 0x94D049BB133111EB) mod 2^64
    output  <- z XOR (z >> 31)

Floats in [0, 1) take the top 53 bits of an output: (x >> 11) * 2^-53.

Per-item streams (one per sentence, so results do not depend on batching
or parallel split) are seeded with:

    stream_seed(seed, index) = mix64((seed + (index + 1) * 0x9E3779B97F4A7C15) mod 2^64)

where mix64 is the finalizer (the three lines after the increment above).
This equals the (index+1)-th raw output of SplitMix64 seeded with `seed`.
"""

from __future__ import annotations

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15


def mix64(x: int) -> int:
    """SplitMix64 finalizer: a 64-bit bijective mixing function."""
    x &= MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


def stream_seed(seed: int, index: int) -> int:
    """Derive the per-item seed for item `index` under global `seed`."""
    if index < 0:
        raise ValueError("stream index must be >= 0")
    return mix64((seed + (index + 1) * GOLDEN) & MASK64)


class SplitMix64:
    """SplitMix64 generator over a 64-bit counter state."""

    __slots__ = ("state",)

    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + GOLDEN) & MASK64
        return mix64(self.state)

    def next_float(self) -> float:
        """Uniform float in [0, 1) with 53-bit resolution."""
        return (self.next_u64() >> 11) * (2.0 ** -53)

    def randbelow(self, n: int) -> int:
        """Uniform integer in [0, n). Rejection sampling keeps draws unbiased."""
        if n <= 0:
            raise ValueError("randbelow requires n >= 1")
        limit = (1 << 64) - ((1 << 64) % n)
        while True:
            x = self.next_u64()
            if x < limit:
                return x % n

    def sample_indices(self, n_total: int, k: int) -> list[int]:
        """Choose k distinct indices from range(n_total), uniformly, sorted ascending.

        Floyd's algorithm: one randbelow call per selected element, so the
        cost is O(k) draws regardless of n_total.
        """
        if k < 0 or k > n_total:
            raise ValueError(f"cannot sample {k} of {n_total} items")
        chosen: set[int] = set()
        for j in range(n_total - k, n_total):
            t = self.randbelow(j + 1)
            if t in chosen:
                chosen.add(j)
            else:
                chosen.add(t)
        return sorted(chosen)
