"""Seed derivation and random streams.

Every stochastic run owns one Philox-4x64 counter-based stream keyed by a
64-bit seed.  Replicate and grid-point seeds are derived with the SplitMix64
finaliser::

    mix(base, index) = splitmix64((base XOR index) mod 2**64)

    splitmix64(x):
        z = x + 0x9E3779B97F4A7C15
        z = (z XOR (z >> 30)) * 0xBF58476D1CE4E5B9
        z = (z XOR (z >> 27)) * 0x94D049BB133111EB
        return z XOR (z >> 31)          (all arithmetic mod 2**64)

Grid sweeps use ``mix(base, point_index * 10**6 + replicate)`` so that adding
grid points never changes results at existing points.  Gaussian variates come
from the Box-Muller transform applied to consecutive pairs of unit-interval
draws, ``(u1, u2) -> sqrt(-2 ln(1 - u1)) * (cos 2 pi u2, sin 2 pi u2)``.
"""
from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
POINT_STRIDE = 10**6


def splitmix64(x: int) -> int:
    z = (x + GOLDEN) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def mix(base: int, index: int) -> int:
    return splitmix64((int(base) ^ int(index)) & MASK64)


def grid_seed(base: int, point_index: int, replicate: int) -> int:
    if not 0 <= replicate < POINT_STRIDE:
        raise ValueError(f"replicate index must lie in [0, {POINT_STRIDE}), got {replicate}")
    return mix(base, point_index * POINT_STRIDE + replicate)


def stream(seed: int) -> np.random.Generator:
    """Philox-4x64 generator keyed by a 64-bit seed."""
    return np.random.Generator(np.random.Philox(key=int(seed) & MASK64))


def box_muller(u: np.ndarray) -> np.ndarray:
    """Standard normals from uniforms; the last axis must have even length.

    Pairs ``(u[..., 2i], u[..., 2i+1])`` produce normals ``2i`` (cosine branch)
    and ``2i+1`` (sine branch).
    """
    u1 = u[..., 0::2]
    u2 = u[..., 1::2]
    radius = np.sqrt(-2.0 * np.log1p(-u1))
    angle = 2.0 * np.pi * u2
    z = np.empty_like(u)
    z[..., 0::2] = radius * np.cos(angle)
    z[..., 1::2] = radius * np.sin(angle)
    return z
