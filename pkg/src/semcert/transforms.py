"""Semantic image transforms as pure functions of (image, parameter).

Five user-facing transform families (Gaussian blur, brightness/contrast,
translation with two padding modes, rotation, scaling) plus the additive
pixel perturbation used to smooth rotation and scaling in image space.

Conventions fixed here:

* Blur convolves each channel with a separable Gaussian kernel of
  squared radius ``alpha``, truncated at ``ceil(4*sqrt(alpha))`` taps
  per side and renormalized to sum 1.  The convolution is circular
  (periodic boundary): a unit-sum kernel then maps constant images to
  themselves exactly, and sequential blurs compose associatively on the
  fixed canvas, so blur additivity holds up to kernel truncation alone.
* Translation rounds its continuous displacement to the nearest integer
  (half away from zero upward: floor(v + 0.5)) once per evaluation.
  In 'reflect' mode pixels shifted past one edge re-enter at the
  opposite edge, so integer shifts compose additively and preserve the
  multiset of pixel values; 'black' mode fills vacated pixels with 0.
* Rotation is counter-clockwise about the image center, bilinearly
  interpolated, with everything outside the centered disk of radius
  min(c_W, c_H) set to 0.
* Scaling stretches about the center by factor s > 0; shrinking
  naturally black-pads through the interpolation's zero extension.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .tensor import ImageTensor, bilinear_many

__all__ = [
    "Transform",
    "TransformParams",
    "transform_spec",
    "additive_pixel_transform",
    "gaussian_blur",
    "blur_many",
    "brightness_contrast",
    "translate",
    "rotate",
    "rotate_many",
    "scale",
    "scale_many",
    "center_coords",
    "TRANSFORM_KINDS",
]

TRANSFORM_KINDS = (
    "gaussian_blur",
    "brightness_contrast",
    "translation_reflect",
    "translation_black",
    "rotation",
    "scaling",
    "additive_pixel",
)


@dataclass(frozen=True)
class Transform:
    """A transform family: its parameter dimension and reversibility flag.

    ``reversible`` marks whether for every parameter there is another
    parameter undoing it exactly; certificates on non-reversible
    transforms only speak about transformed copies of the input, not
    about recovering predictions on pre-images.
    """

    kind: str
    param_dim: int
    reversible: bool

    def apply(self, x: ImageTensor, params) -> ImageTensor:
        return apply_transform(self.kind, x, params)


@dataclass(frozen=True)
class TransformParams:
    """Parameter vector for one transform application."""

    values: tuple

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))


_SPECS = {
    "gaussian_blur": Transform("gaussian_blur", 1, reversible=False),
    "brightness_contrast": Transform("brightness_contrast", 2, reversible=True),
    "translation_reflect": Transform("translation_reflect", 2, reversible=True),
    "translation_black": Transform("translation_black", 2, reversible=True),
    "rotation": Transform("rotation", 1, reversible=False),
    "scaling": Transform("scaling", 1, reversible=False),
}


def transform_spec(kind: str) -> Transform:
    """Look up the registered transform family for ``kind``."""
    try:
        return _SPECS[kind]
    except KeyError:
        raise ValueError(f"unknown transform kind {kind!r}") from None


def additive_pixel_transform(shape: tuple[int, int, int]) -> Transform:
    """Additive pixel perturbation x + delta for images of ``shape``."""
    k, w, h = shape
    return Transform("additive_pixel", k * w * h, reversible=True)


def apply_transform(kind: str, x: ImageTensor, params) -> ImageTensor:
    params = np.atleast_1d(np.asarray(params, dtype=np.float64))
    if kind == "gaussian_blur":
        return gaussian_blur(x, float(params[0]))
    if kind == "brightness_contrast":
        return brightness_contrast(x, float(params[0]), float(params[1]))
    if kind == "translation_reflect":
        return translate(x, float(params[0]), float(params[1]), "reflect")
    if kind == "translation_black":
        return translate(x, float(params[0]), float(params[1]), "black")
    if kind == "rotation":
        return rotate(x, float(params[0]))
    if kind == "scaling":
        return scale(x, float(params[0]))
    if kind == "additive_pixel":
        if params.size != x.data.size:
            raise ValueError("additive perturbation length must equal pixel count")
        return ImageTensor(x.data + params.reshape(x.shape), normalized=False)
    raise ValueError(f"unknown transform kind {kind!r}")


# ---------------------------------------------------------------------------
# Gaussian blur

def _wrapped_kernels(alphas: np.ndarray, length: int) -> np.ndarray:
    """Truncated, renormalized Gaussian taps folded onto a periodic axis.

    Returns a (len(alphas), length) matrix whose row b is the kernel for
    squared radius alphas[b], taps at integer offsets within
    ceil(4*sqrt(alpha)) of zero, wrapped modulo ``length``.  Folding
    before convolving is exactly circular convolution with the full
    truncated kernel.
    """
    alphas = np.asarray(alphas, dtype=np.float64)
    radii = np.where(alphas > 0.0, np.ceil(4.0 * np.sqrt(alphas)), 0.0).astype(np.int64)
    rmax = int(radii.max(initial=0))
    offsets = np.arange(-rmax, rmax + 1)
    with np.errstate(divide="ignore", invalid="ignore"):
        taps = np.exp(-(offsets[None, :] ** 2) / (2.0 * alphas[:, None]))
    taps = np.where(np.abs(offsets[None, :]) <= radii[:, None], taps, 0.0)
    taps[alphas == 0.0] = 0.0
    taps[alphas == 0.0, rmax] = 1.0
    taps /= taps.sum(axis=1, keepdims=True)
    wrapped = np.zeros((len(alphas), length))
    cols = np.mod(offsets, length)
    for t, col in enumerate(cols):
        wrapped[:, col] += taps[:, t]
    return wrapped


def blur_many(x: ImageTensor, alphas, chunk: int = 8192) -> np.ndarray:
    """Blur one image at many squared kernel radii; returns (B, K, W, H).

    Separable circular convolution evaluated in the Fourier domain
    (exactly the periodic convolution with the wrapped truncated
    kernel, up to float rounding).
    """
    alphas = np.asarray(alphas, dtype=np.float64)
    if np.any(alphas < 0.0):
        raise ValueError("blur parameter must be >= 0")
    kw_hat = np.fft.rfft(_wrapped_kernels(alphas, x.width), axis=1)
    kh_hat = np.fft.rfft(_wrapped_kernels(alphas, x.height), axis=1)
    x_hat_w = np.fft.rfft(x.data, axis=1)  # (K, Wf, H)
    out = np.empty((len(alphas),) + x.shape)
    for lo in range(0, len(alphas), chunk):
        hi = min(lo + chunk, len(alphas))
        stage = np.fft.irfft(x_hat_w[None, ...] * kw_hat[lo:hi, None, :, None],
                             n=x.width, axis=2)
        stage_hat = np.fft.rfft(stage, axis=3)
        stage_hat *= kh_hat[lo:hi, None, None, :]
        out[lo:hi] = np.fft.irfft(stage_hat, n=x.height, axis=3)
    return out


def gaussian_blur(x: ImageTensor, alpha: float) -> ImageTensor:
    """Convolve each channel with the Gaussian of squared radius ``alpha``."""
    if alpha < 0.0:
        raise ValueError(f"blur parameter must be >= 0, got {alpha}")
    if alpha == 0.0:
        return x
    return ImageTensor(blur_many(x, [alpha])[0], normalized=x.normalized)


# ---------------------------------------------------------------------------
# Brightness / contrast

def brightness_contrast(x: ImageTensor, k: float, b: float) -> ImageTensor:
    """Pixelwise v -> e^k (v + b), unclamped.

    The result is flagged unnormalized whenever (k, b) != (0, 0): the
    smoothed classifier must see exactly e^k(x + b), so no clamping back
    into [0, 1] is applied.
    """
    if k == 0.0 and b == 0.0:
        return x
    return ImageTensor(math.exp(k) * (x.data + b), normalized=False)


# ---------------------------------------------------------------------------
# Translation

def _round_nearest(v: float) -> int:
    """Nearest integer, ties toward +inf (floor(v + 0.5))."""
    return int(math.floor(v + 0.5))


def translate(x: ImageTensor, dx: float, dy: float, padding: str = "reflect") -> ImageTensor:
    """Shift right by round(dx) pixels and down by round(dy) pixels.

    'reflect' wraps exiting content back in on the opposite side (the
    unique fill rule under which integer shifts are additive and
    value-preserving); 'black' zero-fills vacated pixels.
    """
    m1 = _round_nearest(dx)
    m2 = _round_nearest(dy)
    if m1 == 0 and m2 == 0:
        return x
    if padding == "reflect":
        return ImageTensor(np.roll(x.data, (m1, m2), axis=(1, 2)),
                           normalized=x.normalized)
    if padding == "black":
        out = np.zeros_like(x.data)
        W, H = x.width, x.height
        if abs(m1) < W and abs(m2) < H:
            dst_i = slice(max(m1, 0), W + min(m1, 0))
            src_i = slice(max(-m1, 0), W + min(-m1, 0))
            dst_j = slice(max(m2, 0), H + min(m2, 0))
            src_j = slice(max(-m2, 0), H + min(-m2, 0))
            out[:, dst_i, dst_j] = x.data[:, src_i, src_j]
        return ImageTensor(out, normalized=x.normalized)
    raise ValueError(f"unknown padding mode {padding!r}")


# ---------------------------------------------------------------------------
# Rotation and scaling

def center_coords(width: int, height: int) -> tuple[float, float]:
    """Continuous center (c_W, c_H) of a W x H pixel grid."""
    return (width - 1) / 2.0, (height - 1) / 2.0


def _pixel_geometry(width: int, height: int):
    """Radius and angle of every pixel relative to the image center."""
    c_w, c_h = center_coords(width, height)
    ii, jj = np.meshgrid(np.arange(width, dtype=np.float64),
                         np.arange(height, dtype=np.float64), indexing="ij")
    d = np.sqrt((ii - c_w) ** 2 + (jj - c_h) ** 2)
    g = np.arctan2(jj - c_h, ii - c_w)
    return c_w, c_h, d, g


def rotate_many(x: ImageTensor, angles) -> np.ndarray:
    """Rotate one image by many angles (radians, CCW); returns (B, K, W, H).

    Output pixels outside the centered disk of radius min(c_W, c_H) are 0.
    """
    angles = np.atleast_1d(np.asarray(angles, dtype=np.float64))
    c_w, c_h, d, g = _pixel_geometry(x.width, x.height)
    mask = d < min(c_w, c_h)
    src_i = c_w + d[None, :, :] * np.cos(g[None, :, :] - angles[:, None, None])
    src_j = c_h + d[None, :, :] * np.sin(g[None, :, :] - angles[:, None, None])
    out = np.empty((len(angles), x.channels, x.width, x.height))
    for k in range(x.channels):
        out[:, k] = bilinear_many(x, k, src_i, src_j)
    out *= mask[None, None, :, :]
    return out


def rotate(x: ImageTensor, angle: float) -> ImageTensor:
    """Rotate counter-clockwise by ``angle`` radians with disk black-padding."""
    return ImageTensor(rotate_many(x, [angle])[0], normalized=x.normalized)


def scale_many(x: ImageTensor, factors) -> np.ndarray:
    """Scale one image by many factors; returns (B, K, W, H)."""
    factors = np.atleast_1d(np.asarray(factors, dtype=np.float64))
    if np.any(factors <= 0.0):
        raise ValueError("scaling factor must be > 0")
    c_w, c_h = center_coords(x.width, x.height)
    ii, jj = np.meshgrid(np.arange(x.width, dtype=np.float64),
                         np.arange(x.height, dtype=np.float64), indexing="ij")
    src_i = c_w + (ii[None, :, :] - c_w) / factors[:, None, None]
    src_j = c_h + (jj[None, :, :] - c_h) / factors[:, None, None]
    out = np.empty((len(factors), x.channels, x.width, x.height))
    for k in range(x.channels):
        out[:, k] = bilinear_many(x, k, src_i, src_j)
    return out


def scale(x: ImageTensor, s: float) -> ImageTensor:
    """Stretch width and height about the center by factor ``s`` > 0."""
    if s <= 0.0:
        raise ValueError(f"scaling factor must be > 0, got {s}")
    return ImageTensor(scale_many(x, [s])[0], normalized=x.normalized)
