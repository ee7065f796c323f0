"""Special functions and exact-confidence statistics.

Everything downstream funnels through these four functions: the normal
CDF and quantile parameterize every closed-form robust radius, and the
Clopper-Pearson bound / exact binomial test drive the Monte-Carlo
certification protocol.  They are implemented here rather than pulled
from scipy so their accuracy is pinned by this package's own oracle
tests:

* ``std_normal_cdf`` goes through the complementary error function
  (series / continued-fraction split in libm), accurate to ~1e-16.
* ``std_normal_quantile`` uses a rational approximation polished by a
  single Newton step against the erfc-based CDF.
* ``clopper_pearson_lower`` bisects the exact binomial survival
  function, accumulated in log space; no incomplete-beta dependency.
  Sample counts in this artifact stay <= 1e5, so the direct tail sum is
  cheap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "ConfidenceParams",
    "std_normal_cdf",
    "std_normal_quantile",
    "std_normal_pdf",
    "clopper_pearson_lower",
    "binom_two_sided_p",
]

_SQRT2 = math.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class ConfidenceParams:
    """Error rate and sample budgets for the certification protocol."""

    alpha: float = 0.001
    n_samples: int = 100_000
    n0_samples: int = 100

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must be in (0, 1), got {self.alpha}")
        if self.n_samples < 1 or self.n0_samples < 1:
            raise ValueError("sample counts must be positive")
        if self.n0_samples > self.n_samples:
            raise ValueError("n0_samples must not exceed n_samples")


def std_normal_cdf(z: float) -> float:
    """Standard normal CDF Phi(z); accepts +-inf, rejects NaN."""
    if math.isnan(z):
        raise ValueError("std_normal_cdf: NaN input")
    return 0.5 * math.erfc(-z / _SQRT2)


def std_normal_pdf(z: float) -> float:
    """Standard normal density."""
    return _INV_SQRT_2PI * math.exp(-0.5 * z * z)


# Rational approximation coefficients (Acklam); |relative error| < 1.2e-9
# before the Newton polish below.
_A = (-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
      1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00)
_B = (-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
      6.680131188771972e+01, -1.328068155288572e+01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
      -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
      3.754408661907416e+00)
_P_LOW = 0.02425


def _quantile_raw(p: float) -> float:
    if p < _P_LOW:
        q = math.sqrt(-2.0 * math.log(p))
        return ((((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5])
                / ((((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0))
    q = p - 0.5
    r = q * q
    return ((((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * q
            / (((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0))


def std_normal_quantile(p: float) -> float:
    """Inverse standard normal CDF; Phi_inv(0) = -inf, Phi_inv(1) = +inf."""
    if math.isnan(p) or p < 0.0 or p > 1.0:
        raise ValueError(f"std_normal_quantile: p must be in [0, 1], got {p}")
    if p == 0.0:
        return -math.inf
    if p == 1.0:
        return math.inf
    if p == 0.5:
        return 0.0
    # work in the lower half for a stable Newton correction near p ~ 1
    if p > 0.5:
        return -std_normal_quantile(1.0 - p)
    x = _quantile_raw(p)
    # one Newton step against the erfc-based CDF
    err = std_normal_cdf(x) - p
    x -= err / std_normal_pdf(x)
    return x


def _log_binom_tail_terms(successes: int, trials: int) -> np.ndarray:
    """log C(trials, k) for k = successes .. trials, via a stable recurrence."""
    k = np.arange(successes, trials + 1, dtype=np.float64)
    first = (math.lgamma(trials + 1) - math.lgamma(successes + 1)
             - math.lgamma(trials - successes + 1))
    if len(k) == 1:
        return np.asarray([first])
    # logC(n, k+1) = logC(n, k) + log(n-k) - log(k+1)
    steps = np.log(trials - k[:-1]) - np.log(k[:-1] + 1.0)
    return first + np.concatenate(([0.0], np.cumsum(steps)))


def _log_survival(log_comb: np.ndarray, successes: int, trials: int, p: float) -> float:
    """log P[X >= successes] for X ~ Binomial(trials, p)."""
    if p <= 0.0:
        return -math.inf
    if p >= 1.0:
        return 0.0
    k = np.arange(successes, trials + 1, dtype=np.float64)
    logs = log_comb + k * math.log(p) + (trials - k) * math.log1p(-p)
    m = np.max(logs)
    return float(m + math.log(np.sum(np.exp(logs - m))))


def _check_counts(successes: int, trials: int) -> None:
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if not 0 <= successes <= trials:
        raise ValueError(f"successes must be in [0, {trials}], got {successes}")


def clopper_pearson_lower(successes: int, trials: int, alpha: float) -> float:
    """One-sided exact lower confidence bound on a binomial proportion.

    Returns the p such that P[Binomial(trials, p) >= successes] = alpha,
    i.e. the largest success probability that would still produce a
    count this extreme with probability only alpha.  Returns 0 when
    there are no successes.
    """
    _check_counts(successes, trials)
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must be in (0, 1), got {alpha}")
    if successes == 0:
        return 0.0
    log_alpha = math.log(alpha)
    log_comb = _log_binom_tail_terms(successes, trials)
    # survival is strictly increasing in p on (0, 1): bisect to the
    # machine-adjacent pair of doubles
    lo, hi = 0.0, 1.0
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if _log_survival(log_comb, successes, trials, mid) < log_alpha:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def binom_two_sided_p(successes: int, trials: int) -> float:
    """Exact two-sided binomial test p-value at success probability 1/2.

    The null is symmetric, so the two-sided p-value is twice the smaller
    tail, clamped to 1.
    """
    _check_counts(successes, trials)
    upper_comb = _log_binom_tail_terms(successes, trials)
    upper = math.exp(_log_survival(upper_comb, successes, trials, 0.5))
    # P[X <= s] = P[X >= n - s] by symmetry of Binomial(n, 1/2)
    lower_comb = _log_binom_tail_terms(trials - successes, trials)
    lower = math.exp(_log_survival(lower_comb, trials - successes, trials, 0.5))
    return min(1.0, 2.0 * min(lower, upper))
