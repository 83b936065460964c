"""Self-contained deterministic PRNG for shuffles that must reproduce forever.

Corpus splits and SVM coordinate orders are part of the reproducibility
contract (identical seed => identical artifacts, across interpreter and
library versions), so they use this fixed xorshift64* generator instead of
``random`` or numpy. Neural initialisation and dropout, which only need
within-environment determinism, use ``numpy.random.Generator``.
"""

from __future__ import annotations

_MASK64 = (1 << 64) - 1


def mix_seed(seed: int, salt: int) -> int:
    """Derive an independent child seed (splitmix64 finalizer)."""
    z = (seed + 0x9E3779B97F4A7C15 * (salt + 1)) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


class XorShift64Star:
    """xorshift64* stream; state seeded through splitmix64 so that nearby
    seeds (0, 1, 2, ...) produce unrelated sequences."""

    def __init__(self, seed: int):
        state = mix_seed(seed & _MASK64, 0)
        self._state = state if state != 0 else 0x9E3779B97F4A7C15

    def next_u64(self) -> int:
        x = self._state
        x ^= x >> 12
        x = (x ^ (x << 25)) & _MASK64
        x ^= x >> 27
        self._state = x
        return (x * 0x2545F4914F6CDD1D) & _MASK64

    def randbelow(self, n: int) -> int:
        """Uniform integer in [0, n) via rejection sampling (no modulo bias)."""
        if n <= 0:
            raise ValueError("n must be positive")
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
