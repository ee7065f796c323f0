"""Closed-form robust radii per smoothing noise family.

Given a (p_A, p_B)-confident smoothed classifier, each supported noise
family yields an explicit bound on how far the transform parameter may
be shifted before the argmax can change:

* gaussian (per-dimension scales sigma_i): the certified set is the
  ellipsoid sqrt(sum_i (alpha_i / sigma_i)^2) < (Phi_inv(p_A) -
  Phi_inv(p_B)) / 2; the returned value is that weighted-norm bound.
* exponential (iid per dimension, rate lambda): ||alpha||_1 <
  -log(1 - p_A + p_B) / lambda, nonnegative shifts only.
* uniform on [a, b]^m: the exact condition is the product inequality
  prod_i (1 - |alpha_i| / (b - a))_+ > 1 - (p_A - p_B)/2, exposed via
  ``uniform_product_margin``; for m = 1 this collapses to the scalar
  radius (b - a)(p_A - p_B)/2.
* laplace (scale b): -b log(1 - p_A + p_B) in the interior case
  p_A > 1/2 > p_B, and -b log(4 p_B (1 - p_A)) on the p = 1/2
  boundaries; no radius when p_A < 1/2 or p_B > 1/2.
* folded gaussian (|N(0, sigma^2)|, nonnegative shifts):
  sigma (Phi_inv((1 + min(p_A, 1 - p_B))/2) - Phi_inv(3/4)).

p_A = 1 produces an infinite radius, which propagates; certification
pipelines clamp to the declared parameter region.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .statfn import std_normal_cdf, std_normal_quantile

__all__ = [
    "DistributionSpec",
    "ConfidencePair",
    "RadiusResult",
    "closed_form_radius",
    "uniform_product_margin",
    "bc_confidence_shift",
    "bc_condition",
    "NOISE_FAMILIES",
]

NOISE_FAMILIES = ("gaussian", "exponential", "uniform", "laplace", "folded_gaussian")


@dataclass(frozen=True)
class DistributionSpec:
    """A smoothing noise distribution: family, scale parameters, dimension.

    ``params`` by family: gaussian -> per-dimension sigmas (zeros allowed,
    a zero-variance dimension is deterministically 0); exponential ->
    (rate,); uniform -> (a, b); laplace -> (scale,); folded_gaussian ->
    (sigma,).
    """

    family: str
    params: tuple
    dim: int = 1

    def __post_init__(self):
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))
        if self.family not in NOISE_FAMILIES:
            raise ValueError(f"unknown noise family {self.family!r}")
        if self.dim < 1:
            raise ValueError("noise dimension must be >= 1")
        p = self.params
        if self.family == "gaussian":
            sig = self.sigmas()
            if np.any(sig < 0.0) or not np.all(np.isfinite(sig)):
                raise ValueError("gaussian sigmas must be finite and >= 0")
        elif self.family == "uniform":
            if len(p) != 2 or not p[0] < p[1]:
                raise ValueError("uniform noise needs an interval (a, b) with a < b")
        else:
            if len(p) != 1 or p[0] <= 0.0:
                raise ValueError(f"{self.family} noise needs one positive scale")

    def sigmas(self) -> np.ndarray:
        """Per-dimension gaussian scales, broadcast to ``dim``."""
        if self.family != "gaussian":
            raise ValueError("sigmas() only applies to the gaussian family")
        p = np.asarray(self.params, dtype=np.float64)
        if p.size == 1:
            return np.full(self.dim, p[0])
        if p.size != self.dim:
            raise ValueError("gaussian scale vector length must be 1 or dim")
        return p


@dataclass(frozen=True)
class ConfidencePair:
    """Statistically valid (p_A, p_B) bounds at a point: p_B <= p_A."""

    p_a: float
    p_b: float = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        if self.p_b is None:
            # two-class reduction: only p_A estimated
            object.__setattr__(self, "p_b", 1.0 - self.p_a)
        if not 0.0 <= self.p_a <= 1.0 or not 0.0 <= self.p_b <= 1.0:
            raise ValueError(f"probabilities out of range: ({self.p_a}, {self.p_b})")
        if self.p_b > self.p_a:
            raise ValueError(f"need p_b <= p_a, got ({self.p_a}, {self.p_b})")


@dataclass(frozen=True)
class RadiusResult:
    """A certified perturbation bound and the inequality it encodes.

    ``kind`` states which norm the value bounds: 'l2_weighted' bounds
    sqrt(sum (alpha_i/sigma_i)^2), 'l1' bounds ||alpha||_1, 'scalar'
    bounds |alpha| for one-dimensional families, and 'per_dim_product'
    carries the scalar box radius for the uniform product condition
    (exact for m = 1; for m > 1 evaluate the product condition itself).
    """

    kind: str
    value: float
    condition_descriptor: str
    product_margin: float | None = None

    def __post_init__(self):
        if math.isnan(self.value) or self.value < 0.0:
            raise ValueError(f"radius must be >= 0, got {self.value}")


def _quantile_gap(conf: ConfidencePair) -> float:
    """(Phi_inv(p_A) - Phi_inv(p_B)) / 2, with infinities propagating."""
    qa = std_normal_quantile(conf.p_a)
    qb = std_normal_quantile(conf.p_b)
    if math.isinf(qa) and math.isinf(qb) and qa == qb:
        return 0.0
    return 0.5 * (qa - qb)


def uniform_product_margin(conf: ConfidencePair) -> float:
    """Threshold of the uniform-noise product condition.

    A shift alpha is certified iff
    prod_i (1 - |alpha_i|/(b-a))_+ > 1 - (p_A - p_B)/2, i.e. exceeds the
    returned margin.
    """
    return 1.0 - (conf.p_a - conf.p_b) / 2.0


def closed_form_radius(dist: DistributionSpec, conf: ConfidencePair) -> RadiusResult:
    """Largest certified perturbation bound for ``dist`` at confidence ``conf``.

    Returns value 0 whenever the family's condition cannot hold for any
    nonzero perturbation (e.g. laplace with p_A < 1/2).
    """
    pa, pb = conf.p_a, conf.p_b
    if dist.family == "gaussian":
        value = max(0.0, _quantile_gap(conf))
        return RadiusResult("l2_weighted", value,
                            "sqrt(sum (alpha_i/sigma_i)^2) < value")
    if dist.family == "exponential":
        rate = dist.params[0]
        diff = 1.0 - pa + pb
        value = math.inf if diff <= 0.0 else max(0.0, -math.log(diff) / rate)
        return RadiusResult("l1", value, "||alpha||_1 < value, alpha >= 0")
    if dist.family == "uniform":
        a, b = dist.params
        margin = uniform_product_margin(conf)
        # largest per-dimension box |alpha_i| <= c satisfying the product
        # condition; for dim == 1 this is the exact scalar radius
        if margin >= 1.0:
            box = 0.0
        else:
            box = (b - a) * (1.0 - margin ** (1.0 / dist.dim))
        return RadiusResult("per_dim_product", box,
                            "prod_i (1 - |alpha_i|/(b-a))_+ > product_margin",
                            product_margin=margin)
    if dist.family == "laplace":
        scale = dist.params[0]
        if pa < 0.5 or pb > 0.5 or (pa == 0.5 and pb == 0.5):
            value = 0.0
        elif pb == 0.5 or pa == 0.5:
            inner = 4.0 * pb * (1.0 - pa)
            value = math.inf if inner <= 0.0 else max(0.0, -scale * math.log(inner))
        else:
            diff = 1.0 - pa + pb
            value = math.inf if diff <= 0.0 else max(0.0, -scale * math.log(diff))
        return RadiusResult("scalar", value, "|alpha| < value")
    if dist.family == "folded_gaussian":
        sigma = dist.params[0]
        top = std_normal_quantile((1.0 + min(pa, 1.0 - pb)) / 2.0)
        value = max(0.0, sigma * (top - std_normal_quantile(0.75)))
        return RadiusResult("scalar", value, "alpha < value, alpha >= 0")
    raise ValueError(f"unknown noise family {dist.family!r}")


def bc_confidence_shift(p: float, k: float) -> float:
    """Confidence carried from contrast-noise scale tau to e^{-k} tau.

    Given a class probability >= p under brightness/contrast smoothing
    noise N(0, diag(sigma^2, tau^2)), returns a valid lower bound on the
    same class probability when the second dimension's scale becomes
    e^{-k} tau.  Equals p at k = 0 and degrades monotonically in |k|.
    """
    if math.isnan(p) or p < 0.0 or p > 1.0:
        raise ValueError(f"p must be in [0, 1], got {p}")
    if k <= 0.0:
        q = std_normal_quantile((1.0 + p) / 2.0)
        if math.isinf(q):
            return 1.0
        return min(1.0, max(0.0, 2.0 * std_normal_cdf(math.exp(k) * q) - 1.0))
    q = std_normal_quantile(1.0 - p / 2.0)
    if math.isinf(q):
        return 1.0 if q < 0 else 0.0
    return min(1.0, max(0.0, 2.0 * (1.0 - std_normal_cdf(math.exp(k) * q))))


def bc_condition(k: float, b: float, sigma: float, tau: float,
                 conf_shifted: ConfidencePair) -> bool:
    """Weighted-ellipse certification test for a brightness/contrast shift.

    True iff sqrt((k/sigma)^2 + (b/(e^{-k} tau))^2) is strictly below
    the half quantile gap of the (already shift-adjusted) confidences.
    """
    if sigma <= 0.0 or tau <= 0.0:
        raise ValueError("noise scales must be positive")
    lhs = math.hypot(k / sigma, b * math.exp(k) / tau)
    return lhs < _quantile_gap(conf_shifted)
