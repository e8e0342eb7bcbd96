"""Multivariate Gaussian beliefs over arm means.

Storage, seeded sampling, the closed-form Gaussian KL

    KL(N(mu1, S1), N(mu2, S2))
        = (trace(S2^-1 S1) - k + (mu2-mu1)' S2^-1 (mu2-mu1) + ln det S2/det S1) / 2

and best-arm probabilities (the discrete distribution over "which arm has
the largest mean"). For two arms the best-arm probability is analytic,
Phi((mu1-mu2)/sd(m1-m2)); for more arms it is a seeded Monte Carlo estimate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.linalg import solve_triangular

from .errors import NumericError

# Relative symmetry tolerance for covariance matrices.
SYMMETRY_RTOL = 1e-12

# Jitter added once on Cholesky failure: JITTER_REL * trace/k on the diagonal.
# Exactly-zero covariances have zero trace, so a tiny absolute floor keeps the
# degenerate point-mass belief sampleable (it then returns the mean up to
# ~1e-6 noise).
JITTER_REL = 1e-10
JITTER_FLOOR = 1e-12


def normal_cdf(x: float) -> float:
    """Standard normal CDF via the complementary error function."""
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


@dataclass(frozen=True)
class GaussianBelief:
    """Multivariate normal belief N(mean, cov) over the k arm means.

    Immutable; the Cholesky factor and the precision matrix are computed
    lazily and cached, so beliefs are cheap to share across policies.
    """

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self) -> None:
        mean = np.asarray(self.mean, dtype=float)
        cov = np.asarray(self.cov, dtype=float)
        if mean.ndim != 1:
            raise ValueError(f"mean must be a vector, got shape {mean.shape}")
        if cov.shape != (mean.size, mean.size):
            raise ValueError(
                f"cov shape {cov.shape} does not match mean length {mean.size}"
            )
        asym = np.abs(cov - cov.T).max() if cov.size else 0.0
        scale = np.abs(cov).max() if cov.size else 0.0
        if asym > 0 and asym > SYMMETRY_RTOL * scale:
            raise ValueError(f"cov is not symmetric (max asymmetry {asym:.3e})")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @property
    def n_arms(self) -> int:
        return self.mean.size

    @cached_property
    def chol(self) -> np.ndarray:
        """Lower Cholesky factor, with the one-shot jitter retry."""
        try:
            return np.linalg.cholesky(self.cov)
        except np.linalg.LinAlgError:
            pass
        k = self.n_arms
        jitter = JITTER_REL * float(np.trace(self.cov)) / k
        if jitter <= 0.0:
            jitter = JITTER_FLOOR
        try:
            return np.linalg.cholesky(self.cov + jitter * np.eye(k))
        except np.linalg.LinAlgError as exc:
            raise NumericError(
                f"covariance is not positive definite after jitter {jitter:.3e}"
            ) from exc

    @cached_property
    def precision(self) -> np.ndarray:
        """Inverse covariance, symmetrized."""
        try:
            prec = np.linalg.inv(self.cov)
        except np.linalg.LinAlgError as exc:
            raise NumericError("covariance is singular; no precision") from exc
        return (prec + prec.T) / 2.0

    @cached_property
    def log_det_cov(self) -> float:
        return 2.0 * float(np.sum(np.log(np.diag(self.chol))))


def _with_cached_precision(
    mean: np.ndarray, cov: np.ndarray, precision: np.ndarray
) -> GaussianBelief:
    """Build a belief whose precision is already known (skips one inversion)."""
    belief = GaussianBelief(mean, cov)
    belief.__dict__["precision"] = precision
    return belief


@dataclass(frozen=True)
class ArmMarginal:
    """Discrete distribution over which arm is best (or gets chosen)."""

    probs: np.ndarray

    def __post_init__(self) -> None:
        probs = np.asarray(self.probs, dtype=float)
        if probs.ndim != 1:
            raise ValueError("probs must be a vector")
        if probs.min() < -1e-12:
            raise ValueError(f"negative arm probability {probs.min():.3e}")
        total = probs.sum()
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"arm probabilities sum to {total!r}, not 1")
        object.__setattr__(self, "probs", np.clip(probs, 0.0, None))

    def __len__(self) -> int:
        return self.probs.size


def sample(belief: GaussianBelief, rng: np.random.Generator) -> np.ndarray:
    """One draw mean + L z with z standard normal; deterministic given rng state."""
    z = rng.standard_normal(belief.n_arms)
    return belief.mean + belief.chol @ z


def sample_many(belief: GaussianBelief, n: int, rng: np.random.Generator) -> np.ndarray:
    """n draws as an (n, k) array, same construction as :func:`sample`."""
    z = rng.standard_normal((n, belief.n_arms))
    return belief.mean + z @ belief.chol.T


def kl_gaussian(p: GaussianBelief, q: GaussianBelief) -> float:
    """Forward KL divergence KL(p, q) between two Gaussian beliefs."""
    k = p.n_arms
    if q.n_arms != k:
        raise ValueError(f"dimension mismatch: {k} vs {q.n_arms}")
    lq = q.chol
    # trace(S2^-1 S1) via triangular solves against q's factor.
    half = solve_triangular(lq, p.cov, lower=True)
    half = solve_triangular(lq, half.T, lower=True)
    trace_term = float(np.trace(half))
    diff = q.mean - p.mean
    w = solve_triangular(lq, diff, lower=True)
    quad = float(w @ w)
    return 0.5 * (trace_term - k + quad + q.log_det_cov - p.log_det_cov)


def best_arm_marginal(
    belief: GaussianBelief,
    mc_samples: int = 100_000,
    rng: np.random.Generator | None = None,
    method: str = "auto",
) -> ArmMarginal:
    """Probability of each arm having the largest mean under the belief.

    Two arms are handled analytically unless ``method="mc"`` forces the Monte
    Carlo estimate; three or more arms always use Monte Carlo (the orthant
    probability has no closed form). Exact ties in sampled means go to the
    lowest arm index, as does the degenerate zero-variance-equal-means case.
    """
    k = belief.n_arms
    if k < 2:
        raise ValueError("need at least two arms")
    if method not in ("auto", "analytic", "mc"):
        raise ValueError(f"unknown method {method!r}")
    if method == "analytic" and k != 2:
        raise ValueError("analytic best-arm probabilities require k = 2")
    if k == 2 and method != "mc":
        d = float(belief.mean[0] - belief.mean[1])
        var = float(belief.cov[0, 0] + belief.cov[1, 1] - 2.0 * belief.cov[0, 1])
        if var <= 0.0:
            p1 = 1.0 if d >= 0.0 else 0.0
        else:
            p1 = normal_cdf(d / math.sqrt(var))
        return ArmMarginal(np.array([p1, 1.0 - p1]))
    if rng is None:
        raise ValueError("Monte Carlo best-arm estimate needs an rng")
    if mc_samples < 1:
        raise ValueError("mc_samples must be positive")
    draws = sample_many(belief, mc_samples, rng)
    winners = np.argmax(draws, axis=1)  # argmax ties break to the lowest index
    counts = np.bincount(winners, minlength=k).astype(float)
    return ArmMarginal(counts / mc_samples)
