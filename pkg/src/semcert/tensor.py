"""Image tensors, coordinate geometry and bilinear interpolation.

Coordinate convention, used everywhere in this package: an image is a
K x W x H tensor indexed ``data[k, i, j]`` where ``i`` runs along the
width (0 .. W-1) and ``j`` along the height (0 .. H-1).  The continuous
coordinate domain is ``Omega = [0, W-1] x [0, H-1]``; interpolation
queries outside Omega evaluate to 0.  Rotation and scaling geometry
depend on this convention, so it is fixed here once.

All pixel data is stored as 64-bit floats: the aliasing bounds sum over
every pixel and would accumulate rounding error in lower precision.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = ["ImageTensor", "PixelCoord", "bilinear", "bilinear_many", "l1_distance", "l2_distance"]


@dataclass(frozen=True)
class ImageTensor:
    """Immutable K x W x H real-valued image.

    Values are expected in [0, 1] unless ``normalized`` is False (e.g.
    after an unclamped brightness/contrast change).  The backing array
    is made read-only so tensors can be shared across workers.
    """

    data: np.ndarray
    normalized: bool = True

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=np.float64)
        if arr.ndim != 3:
            raise ValueError(f"image data must be K x W x H, got shape {arr.shape}")
        if arr.size == 0:
            raise ValueError("image must have at least one pixel")
        if not np.all(np.isfinite(arr)):
            raise ValueError("image data contains non-finite values")
        arr = np.ascontiguousarray(arr)
        arr.flags.writeable = False
        object.__setattr__(self, "data", arr)

    @property
    def channels(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[2]

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.data.shape

    def flat(self) -> np.ndarray:
        """Row-major view of the pixel data as a length K*W*H vector."""
        return self.data.reshape(-1)

    @classmethod
    def from_flat(cls, values, channels: int, width: int, height: int,
                  normalized: bool = True) -> "ImageTensor":
        arr = np.asarray(values, dtype=np.float64)
        if arr.size != channels * width * height:
            raise ValueError(
                f"expected {channels * width * height} values, got {arr.size}")
        return cls(arr.reshape(channels, width, height), normalized=normalized)


@dataclass(frozen=True)
class PixelCoord:
    """A (channel, continuous-x, continuous-y) query point."""

    k: int
    i: float
    j: float


def _check_channel(x: ImageTensor, k: int) -> None:
    if not 0 <= k < x.channels:
        raise ValueError(f"channel index {k} out of range for {x.channels} channels")


def bilinear(x: ImageTensor, k: int, i: float, j: float) -> float:
    """Bilinearly interpolated value of channel ``k`` at continuous (i, j).

    Returns 0 outside Omega, the exact pixel value on integer grid
    points, and the four-corner weighted average elsewhere.
    """
    _check_channel(x, k)
    out = bilinear_many(x, k, np.asarray([i], dtype=np.float64),
                        np.asarray([j], dtype=np.float64))
    return float(out[0])


def bilinear_many(x: ImageTensor, k: int, ii: np.ndarray, jj: np.ndarray) -> np.ndarray:
    """Vectorized bilinear interpolation over arrays of coordinates.

    ``ii`` and ``jj`` must have the same shape; the result has that
    shape.  Points on the far edge (i == W-1 or j == H-1) are folded to
    the last interior cell with fractional part 1 so no out-of-range
    neighbour is read.
    """
    _check_channel(x, k)
    ii = np.asarray(ii, dtype=np.float64)
    jj = np.asarray(jj, dtype=np.float64)
    if ii.shape != jj.shape:
        raise ValueError("coordinate arrays must have matching shapes")
    W, H = x.width, x.height

    inside = (ii >= 0.0) & (ii <= W - 1) & (jj >= 0.0) & (jj <= H - 1)
    ic = np.where(inside, ii, 0.0)
    jc = np.where(inside, jj, 0.0)

    i0 = np.floor(ic).astype(np.int64)
    j0 = np.floor(jc).astype(np.int64)
    # fold the far edge into the previous cell so i0+1 stays in range
    if W > 1:
        edge = i0 >= W - 1
        i0 = np.where(edge, W - 2, i0)
    else:
        i0 = np.zeros_like(i0)
    if H > 1:
        edge = j0 >= H - 1
        j0 = np.where(edge, H - 2, j0)
    else:
        j0 = np.zeros_like(j0)
    fi = ic - i0
    fj = jc - j0

    plane = x.data[k]
    i1 = np.minimum(i0 + 1, W - 1)
    j1 = np.minimum(j0 + 1, H - 1)
    v00 = plane[i0, j0]
    v01 = plane[i0, j1]
    v10 = plane[i1, j0]
    v11 = plane[i1, j1]
    out = ((1.0 - fi) * ((1.0 - fj) * v00 + fj * v01)
           + fi * ((1.0 - fj) * v10 + fj * v11))
    return np.where(inside, out, 0.0)


def _check_same_shape(a: ImageTensor, b: ImageTensor) -> None:
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")


def l2_distance(a: ImageTensor, b: ImageTensor) -> float:
    """Euclidean distance over all K*W*H entries."""
    _check_same_shape(a, b)
    return float(np.linalg.norm(a.data - b.data))


def l1_distance(a: ImageTensor, b: ImageTensor) -> float:
    """Sum of absolute differences over all K*W*H entries."""
    _check_same_shape(a, b)
    return float(np.sum(np.abs(a.data - b.data)))
