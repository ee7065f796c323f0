"""Counter-based, draw-indexed noise streams.

Every Monte-Carlo draw has a global index, and the noise for draw i is a
pure function of (seed, i).  Uniform variates come from numpy's Philox
generator keyed by the seed with the block number in the counter, in
fixed-size blocks of draws; distribution sampling is built explicitly on
those uniforms (inverse CDF for exponential / laplace / uniform, a
cosine-sine pair transform for gaussians, absolute value for the folded
gaussian) so each draw consumes a fixed uniform budget.  Parallel
workers can therefore take disjoint block ranges and reproduce exactly
the sequential results.
"""

from __future__ import annotations

import numpy as np

from .radii import DistributionSpec

__all__ = ["DRAWS_PER_BLOCK", "uniforms_per_draw", "draw_params"]

DRAWS_PER_BLOCK = 1024

_TINY = 1e-300


def uniforms_per_draw(noise: DistributionSpec) -> int:
    """Fixed number of uniform variates one parameter draw consumes."""
    if noise.family in ("gaussian", "folded_gaussian"):
        return 2 * ((noise.dim + 1) // 2)
    return noise.dim


def _block_uniforms(seed: int, block: int, count: int) -> np.ndarray:
    bitgen = np.random.Philox(key=np.uint64(seed) & np.uint64(2**64 - 1),
                              counter=[0, 0, block, 0])
    return np.random.Generator(bitgen).random(count)


def _uniform_matrix(seed: int, start: int, count: int, per_draw: int) -> np.ndarray:
    """Uniforms for draws [start, start+count), shaped (count, per_draw)."""
    out = np.empty((count, per_draw))
    i = start
    while i < start + count:
        block = i // DRAWS_PER_BLOCK
        block_lo = block * DRAWS_PER_BLOCK
        take_hi = min(start + count, block_lo + DRAWS_PER_BLOCK)
        u = _block_uniforms(seed, block, (take_hi - block_lo) * per_draw)
        u = u.reshape(take_hi - block_lo, per_draw)
        out[i - start:take_hi - start] = u[i - block_lo:]
        i = take_hi
    return out


def _standard_normals(u: np.ndarray, dim: int) -> np.ndarray:
    """Pair transform of uniforms to standard normals, column pairs."""
    n = u.shape[0]
    pairs = u.shape[1] // 2
    r = np.sqrt(-2.0 * np.log1p(-u[:, :pairs] * (1.0 - 1e-16)))
    theta = 2.0 * np.pi * u[:, pairs:]
    z = np.empty((n, 2 * pairs))
    z[:, 0::2] = r * np.cos(theta)
    z[:, 1::2] = r * np.sin(theta)
    return z[:, :dim]


def draw_params(noise: DistributionSpec, seed: int, start: int, count: int) -> np.ndarray:
    """Parameters for draws [start, start+count) as a (count, dim) array."""
    per_draw = uniforms_per_draw(noise)
    u = _uniform_matrix(seed, start, count, per_draw)
    if noise.family == "gaussian":
        return _standard_normals(u, noise.dim) * noise.sigmas()[None, :]
    if noise.family == "folded_gaussian":
        return np.abs(_standard_normals(u, noise.dim)) * noise.params[0]
    if noise.family == "exponential":
        rate = noise.params[0]
        return -np.log1p(-np.clip(u, 0.0, 1.0 - 1e-16)) / rate
    if noise.family == "uniform":
        a, b = noise.params
        return a + (b - a) * u
    if noise.family == "laplace":
        scale = noise.params[0]
        uc = np.clip(u, _TINY, 1.0 - 1e-16)
        return np.where(uc < 0.5,
                        scale * np.log(2.0 * uc),
                        -scale * np.log(2.0 * (1.0 - uc)))
    raise ValueError(f"unknown noise family {noise.family!r}")
