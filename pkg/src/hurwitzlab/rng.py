"""Counter-based deterministic randomness.

Streams are derived from (seed, stream index) by hashing; draws are
platform-independent and independent of scheduling, so parallel trial
loops reproduce exactly for any worker count.
"""

from __future__ import annotations

import hashlib
import struct


class CounterRng:
    """SHA-256 counter stream; uniform integers via rejection sampling."""

    __slots__ = ("_key", "_counter", "_buf", "_pos")

    def __init__(self, seed: int, stream: int = 0):
        self._key = struct.pack(">qq", seed & 0x7FFFFFFFFFFFFFFF, stream)
        self._counter = 0
        self._buf = b""
        self._pos = 0

    def _refill(self):
        self._buf = hashlib.sha256(
            self._key + struct.pack(">q", self._counter)).digest()
        self._counter += 1
        self._pos = 0

    def bits64(self) -> int:
        if self._pos + 8 > len(self._buf):
            self._refill()
        out = int.from_bytes(self._buf[self._pos:self._pos + 8], "big")
        self._pos += 8
        return out

    def randint(self, n: int) -> int:
        """Uniform integer in [0, n)."""
        if n <= 0:
            raise ValueError("n must be positive")
        if n == 1:
            return 0
        # rejection sampling on 64-bit words
        limit = (1 << 64) - ((1 << 64) % n)
        while True:
            x = self.bits64()
            if x < limit:
                return x % n

    def randvec(self, n: int, length: int) -> list:
        return [self.randint(n) for _ in range(length)]


def substream(seed: int, index: int) -> CounterRng:
    return CounterRng(seed, index)
