"""Portable seeded Gaussian matrices.

The generator is fully specified so other implementations can reproduce
benchmark inputs bit for bit:

* state: four 64-bit words filled by successive splitmix64 outputs of the seed;
* step: xoshiro256** (result = rotl(s1 * 5, 7) * 9, then the usual xor/shift
  update with rotation 45);
* uniform: (next >> 11) * 2^-53, in [0, 1);
* normals: Box-Muller on pairs (u1, u2) as r = sqrt(-2 ln(1 - u1)),
  z0 = r cos(2 pi u2), z1 = r sin(2 pi u2), consumed in that order;
* matrices are filled row-major.
"""

from __future__ import annotations

import math

import numpy as np

MASK = (1 << 64) - 1


def splitmix64(state: int) -> tuple[int, int]:
    """One splitmix64 step; returns (new_state, output)."""
    state = (state + 0x9E3779B97F4A7C15) & MASK
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK
    return state, z ^ (z >> 31)


def _rotl(x: int, k: int) -> int:
    return ((x << k) | (x >> (64 - k))) & MASK


class Xoshiro256:
    def __init__(self, seed: int):
        st = seed & MASK
        s = []
        for _ in range(4):
            st, out = splitmix64(st)
            s.append(out)
        self.s = s

    def next_u64(self) -> int:
        s0, s1, s2, s3 = self.s
        result = (_rotl((s1 * 5) & MASK, 7) * 9) & MASK
        t = (s1 << 17) & MASK
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = _rotl(s3, 45)
        self.s = [s0, s1, s2, s3]
        return result

    def uniform(self) -> float:
        return (self.next_u64() >> 11) * 2.0**-53

    def normals(self, count: int) -> list[float]:
        out: list[float] = []
        while len(out) < count:
            u1, u2 = self.uniform(), self.uniform()
            r = math.sqrt(-2.0 * math.log(1.0 - u1))
            out.append(r * math.cos(2.0 * math.pi * u2))
            out.append(r * math.sin(2.0 * math.pi * u2))
        return out[:count]


def gaussian_matrix(m: int, n: int, seed: int) -> np.ndarray:
    """m x n matrix of standard normals from the documented generator."""
    if m < 1 or n < 1:
        raise ValueError("matrix dimensions must be positive")
    gen = Xoshiro256(seed)
    return np.array(gen.normals(m * n), dtype=float).reshape(m, n)
