"""Approximate-inference families used in place of the exact posterior.

Four honest families and two adversarial constructions:

* covariance scaling: N(mu, c^2 S) — over-dispersed for c > 1, under- for c < 1;
* mean-field: same mean, diagonal covariance Diag(S^-1)^-1 (the closed-form
  reverse-KL projection onto uncorrelated Gaussians);
* ensemble: M parameter vectors, each conjugately updated with independently
  perturbed rewards, acting greedily under a uniformly chosen model;
* mass shift (over-exploration adversary): scales the best-region posterior
  mass down by r, so the best arm is chosen with probability at most 1/r
  while the divergence from the posterior stays below the chosen budget;
* restriction (under-exploration adversary): all mass on the wrong-arm
  region, i.e. the suboptimal arm is chosen surely. Optionally the
  restriction can be capped by a divergence budget, in which case it places
  as much mass on the wrong arm as the budget allows.

Adversaries are realized at the arm-choice level: regret depends only on the
chosen arms, and the region masses of the densities above are exactly the
arm-choice probabilities. The density-level constructions are also provided
(``over_density_pair`` / ``under_density_pair``) so the implied divergences
can be validated against the grid integrator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import ConfigError, NumericError
from .gaussian import ArmMarginal, GaussianBelief, best_arm_marginal, sample_many
from .divergence import Grid, gaussian_density
from .theory import KL_WINDOW, epsilon_from_z, r_from_epsilon


@dataclass(frozen=True)
class ExactSpec:
    """The identity approximation: sample the posterior itself."""


@dataclass(frozen=True)
class ScaledCovSpec:
    c: float

    def __post_init__(self) -> None:
        if not self.c > 0.0:
            raise ConfigError("covariance scale c must be positive")


@dataclass(frozen=True)
class MeanFieldSpec:
    """Closed-form mean-field projection, no parameters."""


@dataclass(frozen=True)
class EnsembleSpec:
    n_models: int
    perturb_sd: float | None = None  # None: use the reward noise sd

    def __post_init__(self) -> None:
        if self.n_models < 1:
            raise ConfigError("ensemble needs at least one model")
        if self.perturb_sd is not None and self.perturb_sd < 0.0:
            raise ConfigError("perturb_sd must be non-negative")


@dataclass(frozen=True)
class AdversarialOverSpec:
    alpha: float
    epsilon: float

    def __post_init__(self) -> None:
        if not self.alpha > 0.0:
            raise ConfigError("over-exploration adversary requires alpha > 0")
        if not self.epsilon > 0.0:
            raise ConfigError("epsilon must be positive")
        if 0.0 < self.alpha < 1.0:
            cap = 1.0 / (self.alpha * (1.0 - self.alpha))
            if not self.epsilon < cap:
                raise ConfigError(
                    f"epsilon must be below {cap!r} for alpha {self.alpha!r}"
                )


@dataclass(frozen=True)
class AdversarialUnderSpec:
    alpha: float = 0.0
    epsilon: float | None = None  # None: unconstrained restriction (always arm 2)

    def __post_init__(self) -> None:
        if not self.alpha < 1.0:
            raise ConfigError("under-exploration adversary requires alpha < 1")
        if self.epsilon is not None and not self.epsilon > 0.0:
            raise ConfigError("epsilon budget must be positive when given")


ApproximatorSpec = Union[
    ExactSpec,
    ScaledCovSpec,
    MeanFieldSpec,
    EnsembleSpec,
    AdversarialOverSpec,
    AdversarialUnderSpec,
]


def scaled_cov_approx(belief: GaussianBelief, c: float) -> GaussianBelief:
    """Same mean, covariance multiplied by c^2."""
    if not c > 0.0:
        raise ConfigError("covariance scale c must be positive")
    return GaussianBelief(belief.mean, c**2 * belief.cov)


def mean_field_approx(belief: GaussianBelief) -> GaussianBelief:
    """Same mean, diagonal covariance with entries 1/(S^-1)_ii."""
    variances = 1.0 / np.diag(belief.precision)
    return GaussianBelief(belief.mean, np.diag(variances))


def scaled_cov_kl_constants(c: float, k: int) -> dict:
    """Exact divergences of the covariance-scaling family (dimension k).

    Forward: KL(posterior, scaled); reverse: KL(scaled, posterior). Both
    depend only on c and k, not on the belief.
    """
    forward = 0.5 * (k / c**2 - k + 2.0 * k * math.log(c))
    reverse = 0.5 * (k * c**2 - k - 2.0 * k * math.log(c))
    return {"kl_posterior_to_approx": forward, "kl_approx_to_posterior": reverse}


# --------------------------------------------------------------------------
# Ensemble sampling


@dataclass(frozen=True)
class EnsembleState:
    """M models sharing one conjugate covariance.

    All models see the same arm sequence, so their covariances coincide; the
    independently perturbed rewards only move the per-model means.
    """

    cov: np.ndarray  # (k, k)
    means: np.ndarray  # (k, M)
    n_obs: int

    def __post_init__(self) -> None:
        if self.means.ndim != 2 or self.means.shape[0] != self.cov.shape[0]:
            raise ValueError("model means must be a (k, M) array matching cov")

    @property
    def n_models(self) -> int:
        return self.means.shape[1]


def ensemble_init(
    prior: GaussianBelief, n_models: int, rng: np.random.Generator
) -> EnsembleState:
    """Draw M parameter vectors from the prior."""
    if n_models < 1:
        raise ConfigError("ensemble needs at least one model")
    theta0 = sample_many(prior, n_models, rng).T  # (k, M)
    return EnsembleState(cov=prior.cov, means=theta0, n_obs=0)


def ensemble_update(
    state: EnsembleState,
    arm: int,
    reward: float,
    noise_sd: float,
    rng: np.random.Generator,
    perturb_sd: float | None = None,
) -> EnsembleState:
    """Conjugate update of every model with an independently perturbed reward.

    Same Sherman-Morrison form as the exact posterior update, vectorized over
    the model means.
    """
    if not noise_sd > 0.0:
        raise ValueError("noise_sd must be positive")
    sd_w = noise_sd if perturb_sd is None else perturb_sd
    perturbed = reward + rng.normal(0.0, sd_w, size=state.n_models)
    u = state.cov[:, arm]
    gain = float(state.cov[arm, arm]) + noise_sd**2
    if not gain > 0.0:
        raise NumericError("ensemble innovation variance is not positive")
    cov = state.cov - np.outer(u, u / gain)
    cov = (cov + cov.T) / 2.0
    means = state.means + np.outer(u, (perturbed - state.means[arm, :]) / gain)
    return EnsembleState(cov=cov, means=means, n_obs=state.n_obs + 1)


def ensemble_act(state: EnsembleState, rng: np.random.Generator) -> int:
    """Pick a model uniformly at random and play the argmax of its mean."""
    model = int(rng.integers(state.n_models))
    return int(np.argmax(state.means[:, model]))


# --------------------------------------------------------------------------
# Adversarial constructions (two arms)


def _require_two_arms(belief: GaussianBelief) -> None:
    if belief.n_arms != 2:
        raise ConfigError("adversarial constructions are defined for two arms")


def adversarial_over_choose(
    belief: GaussianBelief, alpha: float, epsilon: float, rng: np.random.Generator
) -> int:
    """Arm choice of the mass-shift construction: best arm w.p. P(best)/r."""
    _require_two_arms(belief)
    r = r_from_epsilon(alpha, epsilon)
    p1 = float(best_arm_marginal(belief).probs[0])
    q1 = 0.0 if math.isinf(r) else p1 / r
    return 0 if rng.random() < q1 else 1


def pair_divergence(p1: float, p2: float, w: float, alpha: float) -> float:
    """D_alpha of (p1, p2) against (1-w, w) for scalar two-cell distributions."""
    if abs(alpha) <= KL_WINDOW:
        total = 0.0
        if 1.0 - w > 0.0:
            if p1 <= 0.0:
                return math.inf
            total += (1.0 - w) * math.log((1.0 - w) / p1)
        if w > 0.0:
            if p2 <= 0.0:
                return math.inf
            total += w * math.log(w / p2)
        return total
    if abs(alpha - 1.0) <= KL_WINDOW:
        total = 0.0
        if p1 > 0.0:
            if 1.0 - w <= 0.0:
                return math.inf
            total += p1 * math.log(p1 / (1.0 - w))
        if p2 > 0.0:
            if w <= 0.0:
                return math.inf
            total += p2 * math.log(p2 / w)
        return total
    s = 0.0
    for mass, approx in ((p1, 1.0 - w), (p2, w)):
        if mass > 0.0 and approx > 0.0:
            s += math.exp(alpha * math.log(mass) + (1.0 - alpha) * math.log(approx))
        elif mass == 0.0 and approx > 0.0 and alpha < 0.0:
            return math.inf
        elif approx == 0.0 and mass > 0.0 and alpha > 1.0:
            return math.inf
    return (1.0 - s) / (alpha * (1.0 - alpha))


def under_mass_within_budget(
    p1: float, p2: float, alpha: float, epsilon: float
) -> float:
    """Largest wrong-arm mass w with D_alpha((p1,p2), (1-w,w)) <= epsilon.

    The divergence is zero at w = p2 and increases monotonically toward the
    full restriction at w = 1, so a bisection on [p2, 1] suffices.
    """
    if p2 <= 0.0:
        return 0.0
    if pair_divergence(p1, p2, 1.0, alpha) <= epsilon:
        return 1.0
    lo, hi = p2, 1.0
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if pair_divergence(p1, p2, mid, alpha) <= epsilon:
            lo = mid
        else:
            hi = mid
    return lo


def adversarial_under_choose(
    belief: GaussianBelief,
    alpha: float = 0.0,
    epsilon: float | None = None,
    rng: np.random.Generator | None = None,
) -> int:
    """Arm choice of the restriction construction.

    Unconstrained (``epsilon is None``): all mass on the wrong-arm region, so
    the suboptimal arm is returned surely; an exactly-zero wrong-region mass
    makes the restriction undefined. With a budget, the wrong arm is chosen
    with the largest probability the divergence budget allows (needs an rng).
    """
    _require_two_arms(belief)
    probs = best_arm_marginal(belief).probs
    p2 = float(probs[1])
    if epsilon is None:
        if p2 <= 0.0:
            raise NumericError(
                "restriction construction undefined: wrong-region mass is zero"
            )
        return 1
    if rng is None:
        raise ValueError("budgeted restriction needs an rng")
    w = under_mass_within_budget(float(probs[0]), p2, alpha, epsilon)
    return 1 if rng.random() < w else 0


def divergence_of_under_construction(z: float, alpha: float) -> float:
    """Divergence of the full restriction when the wrong region has mass z."""
    return epsilon_from_z(alpha, z)


# --------------------------------------------------------------------------
# Density-level realizations for grid validation


def over_density_pair(
    belief: GaussianBelief, r: float, grid: Grid
) -> tuple[np.ndarray, np.ndarray]:
    """Posterior density and its mass-shift construction on a 2-D grid."""
    _require_two_arms(belief)
    if not r > 1.0:
        raise ConfigError("mass-shift ratio r must exceed 1")
    p = gaussian_density(grid, belief)
    p1 = float(best_arm_marginal(belief).probs[0])
    m1, m2 = grid.mesh
    top = m1 > m2
    wrong_scale = (1.0 - p1 / r) / (1.0 - p1)
    q = np.where(top, p / r, p * wrong_scale)
    return p, q


def under_density_pair(
    belief: GaussianBelief, grid: Grid
) -> tuple[np.ndarray, np.ndarray]:
    """Posterior density and its restriction to the wrong-arm region."""
    _require_two_arms(belief)
    p = gaussian_density(grid, belief)
    z = float(best_arm_marginal(belief).probs[1])
    if z <= 0.0:
        raise NumericError("restriction undefined: wrong-region mass is zero")
    m1, m2 = grid.mesh
    q = np.where(m2 > m1, p / z, 0.0)
    return p, q
