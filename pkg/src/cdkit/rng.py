"""Portable pseudo-random streams.

Every random quantity in cdkit (synthetic matrices, coordinate draws) comes
from this generator so that a seed pins down an experiment independently of
numpy's bit generators. The stream is fully specified here:

* seeding: the 64-bit seed is passed once through SplitMix64 to give the
  initial state (a zero state is replaced by the SplitMix64 constant);
* state update (xorshift64*)::

      s ^= s >> 12;  s ^= s << 25;  s ^= s >> 27      (mod 2**64)
      out = s * 0x2545F4914F6CDD1D                    (mod 2**64)

* uniform double in [0, 1): ``(out >> 11) * 2**-53``;
* uniform integer in ``[0, n)``: rejection sampling, redraw while
  ``out >= 2**64 - (2**64 mod n)``, then ``out mod n``;
* normals: Box-Muller on two consecutive uniforms ``u1, u2`` with
  ``r = sqrt(-2 log(1 - u1))``; the cosine branch is returned first and the
  sine branch is cached for the next call.
"""

from __future__ import annotations

import math

import numpy as np

_MASK = (1 << 64) - 1
_MULT = 0x2545F4914F6CDD1D
_GOLDEN = 0x9E3779B97F4A7C15


def splitmix64(seed: int) -> int:
    z = (seed + _GOLDEN) & _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


class XorShift64Star:
    """xorshift64* generator with uniform, integer and normal draws."""

    def __init__(self, seed: int = 0):
        state = splitmix64(int(seed) & _MASK)
        self._state = state or _GOLDEN
        self._spare: float | None = None

    def next_u64(self) -> int:
        s = self._state
        s ^= s >> 12
        s ^= (s << 25) & _MASK
        s ^= s >> 27
        self._state = s
        return (s * _MULT) & _MASK

    def uniform(self) -> float:
        return (self.next_u64() >> 11) * (1.0 / 9007199254740992.0)

    def randbelow(self, n: int) -> int:
        """Uniform integer in ``[0, n)`` without modulo bias."""
        if n <= 0:
            raise ValueError("n must be positive")
        if n == 1:
            self.next_u64()
            return 0
        limit = (1 << 64) - ((1 << 64) % n)
        while True:
            r = self.next_u64()
            if r < limit:
                return r % n

    def normal(self) -> float:
        if self._spare is not None:
            v, self._spare = self._spare, None
            return v
        u1 = self.uniform()
        u2 = self.uniform()
        r = math.sqrt(-2.0 * math.log(1.0 - u1))
        t = 2.0 * math.pi * u2
        self._spare = r * math.sin(t)
        return r * math.cos(t)

    def normals(self, size: int) -> np.ndarray:
        return np.array([self.normal() for _ in range(size)], dtype=float)
