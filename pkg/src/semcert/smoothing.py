"""Monte-Carlo smoothed-classifier protocol: sample, predict, certify.

A smoothed classifier predicts the class the base classifier most often
returns when the input is perturbed by a random transform parameter.
``predict`` backs the prediction with an exact two-sided binomial test
and abstains when the top two counts are statistically too close;
``certify`` lower-bounds the top-class probability with a one-sided
Clopper-Pearson bound (abstaining at p_a <= 1/2), from which the radius
modules derive certified parameter sets; ``progressive_certify`` grows
the sample in batches and stops as soon as the running radius clears a
target, splitting the error rate across the maximum number of checks
(union bound) so the overall guarantee stays 1 - alpha.

All sampling is draw-indexed through :mod:`semcert.streams`: identical
(seed, query, input) produce bitwise-identical counts, and fanning draws
out across workers cannot change the result.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .radii import ConfidencePair, DistributionSpec
from .statfn import (ConfidenceParams, binom_two_sided_p, clopper_pearson_lower,
                     std_normal_quantile)
from .streams import draw_params
from .tensor import ImageTensor
from .transforms import Transform, blur_many, rotate_many, scale_many, translate

__all__ = [
    "ABSTAIN",
    "BaseClassifier",
    "SmoothedQuery",
    "CountVector",
    "sample_counts",
    "predict",
    "certify",
    "progressive_certify",
    "CertifyOutcome",
    "ProgressiveOutcome",
]

# returned instead of a class label when the statistical test is inconclusive
ABSTAIN = -1

_CLASSIFY_CHUNK = 20_000


class BaseClassifier:
    """Deterministic classifier interface: same input, same label."""

    num_classes: int = 2

    def classify(self, x: ImageTensor) -> int:
        raise NotImplementedError

    def classify_flat_batch(self, flats: np.ndarray, shape: tuple[int, int, int]) -> np.ndarray:
        """Labels for a (n, K*W*H) batch of flattened images.

        Subclasses with vectorizable decision rules override this; the
        default falls back to per-image classification.
        """
        return np.asarray([self.classify(ImageTensor(row.reshape(shape), normalized=False))
                           for row in flats], dtype=np.int64)


@dataclass(frozen=True)
class SmoothedQuery:
    """Everything needed to evaluate one smoothed classifier."""

    classifier: BaseClassifier
    transform: Transform
    noise: DistributionSpec
    conf: ConfidenceParams
    seed: int = 0

    def __post_init__(self):
        if self.noise.dim != self.transform.param_dim:
            raise ValueError(
                f"noise dimension {self.noise.dim} != transform parameter "
                f"dimension {self.transform.param_dim}")


@dataclass(frozen=True)
class CountVector:
    """Per-class hit counts from n noisy evaluations."""

    counts: np.ndarray

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=np.int64)
        counts.flags.writeable = False
        object.__setattr__(self, "counts", counts)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def top_two(self) -> tuple[int, int]:
        """Indices of the largest and second-largest counts (ties to the
        smaller label)."""
        order = np.argsort(-self.counts, kind="stable")
        return int(order[0]), int(order[1])


def _labels_for_flats(classifier: BaseClassifier, flats: np.ndarray,
                      shape: tuple[int, int, int]) -> np.ndarray:
    labels = np.empty(len(flats), dtype=np.int64)
    for lo in range(0, len(flats), _CLASSIFY_CHUNK):
        hi = min(lo + _CLASSIFY_CHUNK, len(flats))
        labels[lo:hi] = classifier.classify_flat_batch(flats[lo:hi], shape)
    return labels


def _sample_labels(q: SmoothedQuery, x: ImageTensor, params: np.ndarray) -> np.ndarray:
    """Label of the base classifier on each transformed draw."""
    kind = q.transform.kind
    n = len(params)
    if kind == "additive_pixel":
        flats = x.flat()[None, :] + params
        return _labels_for_flats(q.classifier, flats, x.shape)
    if kind == "brightness_contrast":
        flats = np.exp(params[:, 0])[:, None] * (x.flat()[None, :] + params[:, 1][:, None])
        return _labels_for_flats(q.classifier, flats, x.shape)
    if kind in ("translation_reflect", "translation_black"):
        # integer shifts repeat heavily: classify each distinct shift once
        shifts = np.floor(params + 0.5).astype(np.int64)
        mode = "reflect" if kind == "translation_reflect" else "black"
        uniq, inverse = np.unique(shifts, axis=0, return_inverse=True)
        uniq_labels = np.asarray(
            [q.classifier.classify(translate(x, int(m1), int(m2), mode))
             for m1, m2 in uniq], dtype=np.int64)
        return uniq_labels[inverse]
    if kind == "gaussian_blur":
        if np.any(params[:, 0] < 0.0):
            raise ValueError("blur parameter must be >= 0; drew a negative "
                             "value from a two-sided noise family")
        labels = np.empty(n, dtype=np.int64)
        for lo in range(0, n, 4096):
            hi = min(lo + 4096, n)
            imgs = blur_many(x, params[lo:hi, 0])
            labels[lo:hi] = _labels_for_flats(
                q.classifier, imgs.reshape(hi - lo, -1), x.shape)
        return labels
    if kind in ("rotation", "scaling"):
        many = rotate_many if kind == "rotation" else scale_many
        labels = np.empty(n, dtype=np.int64)
        for lo in range(0, n, 4096):
            hi = min(lo + 4096, n)
            imgs = many(x, params[lo:hi, 0])
            labels[lo:hi] = _labels_for_flats(
                q.classifier, imgs.reshape(hi - lo, -1), x.shape)
        return labels
    return np.asarray([q.classifier.classify(q.transform.apply(x, p)) for p in params],
                      dtype=np.int64)


def sample_counts(q: SmoothedQuery, x: ImageTensor, n: int, draw_offset: int = 0) -> CountVector:
    """Tally base-classifier labels over n noisy transform draws.

    ``draw_offset`` positions the draws in the query's global stream, so
    selection and estimation samples never overlap.
    """
    if n < 1:
        raise ValueError("need at least one sample")
    params = draw_params(q.noise, q.seed, draw_offset, n)
    labels = _sample_labels(q, x, params)
    counts = np.bincount(labels, minlength=q.classifier.num_classes)
    return CountVector(counts)


def predict(q: SmoothedQuery, x: ImageTensor) -> int:
    """Smoothed prediction, or ABSTAIN when the top two classes are too close.

    Uses n0 samples and the exact two-sided binomial test at the
    fair-coin null on the top-versus-runner-up counts.
    """
    counts = sample_counts(q, x, q.conf.n0_samples)
    top, runner = counts.top_two()
    n_top = int(counts.counts[top])
    n_runner = int(counts.counts[runner])
    if binom_two_sided_p(n_top, n_top + n_runner) <= q.conf.alpha:
        return top
    return ABSTAIN


@dataclass(frozen=True)
class CertifyOutcome:
    """Result of a single-shot certification query."""

    label: int
    p_a_lower: float
    samples_used: int

    @property
    def abstained(self) -> bool:
        return self.label == ABSTAIN

    def confidence(self) -> ConfidencePair:
        """Two-class (p_A, 1 - p_A) pair from the estimated lower bound."""
        return ConfidencePair(self.p_a_lower)


def certify(q: SmoothedQuery, x: ImageTensor) -> CertifyOutcome:
    """Guess the top class with n0 samples, then lower-bound its probability.

    Returns the guessed label with a one-sided Clopper-Pearson lower
    bound from n fresh samples, or abstains when the bound is <= 1/2.
    """
    n0, n = q.conf.n0_samples, q.conf.n_samples
    guess, _ = sample_counts(q, x, n0).top_two()
    counts = sample_counts(q, x, n, draw_offset=n0)
    p_lower = clopper_pearson_lower(int(counts.counts[guess]), n, q.conf.alpha)
    if p_lower <= 0.5:
        return CertifyOutcome(ABSTAIN, p_lower, n0 + n)
    return CertifyOutcome(guess, p_lower, n0 + n)


@dataclass(frozen=True)
class ProgressiveOutcome:
    """Result of batched certification against a target radius."""

    certified: bool
    label: int
    p_a_lower: float
    radius: float
    samples_used: int
    checks_used: int
    per_check_alpha: float


def _isotropic_sigma(noise: DistributionSpec) -> float:
    if noise.family != "gaussian":
        raise ValueError("progressive certification requires gaussian noise")
    sig = noise.sigmas()
    if not np.all(sig == sig[0]) or sig[0] <= 0.0:
        raise ValueError("progressive certification requires isotropic gaussian noise")
    return float(sig[0])


def progressive_certify(q: SmoothedQuery, x: ImageTensor, target_radius: float,
                        batch: int = 400) -> ProgressiveOutcome:
    """Accumulate samples in batches until the certified radius beats a target.

    After each batch the radius is recomputed from the cumulative counts
    at per-check error rate alpha / ceil(n_samples / batch); splitting
    alpha across the maximum number of checks keeps the overall
    guarantee at 1 - alpha by the union bound.  Gives up after the
    query's full sample budget.
    """
    if target_radius < 0.0:
        raise ValueError("target radius must be >= 0")
    if batch < 1:
        raise ValueError("batch size must be >= 1")
    sigma = _isotropic_sigma(q.noise)
    max_checks = math.ceil(q.conf.n_samples / batch)
    alpha_check = q.conf.alpha / max_checks

    n0 = q.conf.n0_samples
    guess, _ = sample_counts(q, x, n0).top_two()

    hits = 0
    used = 0
    checks = 0
    p_lower = 0.0
    radius = 0.0
    while used < q.conf.n_samples:
        m = min(batch, q.conf.n_samples - used)
        counts = sample_counts(q, x, m, draw_offset=n0 + used)
        hits += int(counts.counts[guess])
        used += m
        checks += 1
        p_lower = clopper_pearson_lower(hits, used, alpha_check)
        if p_lower > 0.5:
            radius = sigma * std_normal_quantile(p_lower)
            if radius > target_radius:
                return ProgressiveOutcome(True, guess, p_lower, radius,
                                          n0 + used, checks, alpha_check)
    return ProgressiveOutcome(False, guess, p_lower, max(radius, 0.0),
                              n0 + used, checks, alpha_check)
