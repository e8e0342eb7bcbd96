"""Decision policies built on the approximation families.

Five policy kinds:

* exact Thompson sampling: sample the posterior, play the argmax, update;
* naive approximation: the approximator chooses the action, the exact belief
  (or the ensemble, which keeps no exact belief) is updated as usual;
* forced exploration: with probability p_t = min(1, c/t) play a uniformly
  random arm, otherwise act as the naive approximation; updates unchanged.
  The exploration indicator comes from its own RNG substream, drawn before
  the approximator is consulted, so forced pulls are identifiable;
* approximate sample: approximator actions, exact belief evolution. Same
  belief trajectory as the naive policy for non-ensemble approximators; for
  the ensemble, an exact belief is kept and the models are re-drawn from it
  every step;
* approximate update: exact sampling from the stored belief, which after
  each conjugate update is pushed through the approximator's projection
  (covariance re-scaled by c^2, or re-diagonalized). Only approximators with
  a Gaussian projection support this policy.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import NamedTuple, Union

import numpy as np

from .approximators import (
    AdversarialOverSpec,
    AdversarialUnderSpec,
    ApproximatorSpec,
    EnsembleSpec,
    EnsembleState,
    ExactSpec,
    MeanFieldSpec,
    ScaledCovSpec,
    adversarial_over_choose,
    adversarial_under_choose,
    ensemble_act,
    ensemble_init,
    ensemble_update,
    mean_field_approx,
    scaled_cov_approx,
)
from .bandit import BanditInstance, pull
from .errors import ConfigError
from .gaussian import GaussianBelief, sample
from .posterior import update


@dataclass(frozen=True)
class ExplorationSchedule:
    """p_t = min(1, c/t): vanishing but non-summable, as concentration needs."""

    rate_constant: float

    def __post_init__(self) -> None:
        if not self.rate_constant > 0.0:
            raise ConfigError("exploration rate constant must be positive")

    def prob(self, t: int) -> float:
        if t < 1:
            raise ValueError("time steps start at 1")
        return min(1.0, self.rate_constant / t)

    def expected_forced(self, horizon: int) -> float:
        return float(sum(self.prob(t) for t in range(1, horizon + 1)))


@dataclass(frozen=True)
class ExactTS:
    pass


@dataclass(frozen=True)
class ApproxTS:
    approximator: ApproximatorSpec


@dataclass(frozen=True)
class ForcedExploration:
    approximator: ApproximatorSpec
    schedule: ExplorationSchedule


@dataclass(frozen=True)
class ApproxSample:
    approximator: ApproximatorSpec


@dataclass(frozen=True)
class ApproxUpdate:
    approximator: ApproximatorSpec

    def __post_init__(self) -> None:
        if not isinstance(
            self.approximator, (ExactSpec, ScaledCovSpec, MeanFieldSpec)
        ):
            raise ConfigError(
                "approximate-update needs an approximator with a Gaussian "
                "projection (exact, scaled-cov or mean-field)"
            )


PolicySpec = Union[ExactTS, ApproxTS, ForcedExploration, ApproxSample, ApproxUpdate]


class TrajectoryRngs(NamedTuple):
    """Independent substreams for one trajectory."""

    explore: np.random.Generator
    action: np.random.Generator
    reward: np.random.Generator


def make_trajectory_rngs(seed_seq: np.random.SeedSequence) -> TrajectoryRngs:
    children = seed_seq.spawn(3)
    return TrajectoryRngs(*(np.random.default_rng(c) for c in children))


@dataclass(frozen=True)
class PolicyState:
    """Belief and/or ensemble carried by a policy between steps."""

    belief: GaussianBelief | None = None
    ensemble: EnsembleState | None = None


def _approximator_of(policy: PolicySpec) -> ApproximatorSpec:
    return getattr(policy, "approximator", ExactSpec())


def init_policy_state(
    policy: PolicySpec, prior: GaussianBelief, rngs: TrajectoryRngs
) -> PolicyState:
    approx = _approximator_of(policy)
    if isinstance(approx, EnsembleSpec):
        ensemble = ensemble_init(prior, approx.n_models, rngs.action)
        if isinstance(policy, ApproxSample):
            return PolicyState(belief=prior, ensemble=ensemble)
        return PolicyState(ensemble=ensemble)
    return PolicyState(belief=prior)


def _approx_action(
    approx: ApproximatorSpec, state: PolicyState, rng: np.random.Generator
) -> int:
    if isinstance(approx, EnsembleSpec):
        return ensemble_act(state.ensemble, rng)
    belief = state.belief
    if isinstance(approx, ExactSpec):
        return int(np.argmax(sample(belief, rng)))
    if isinstance(approx, ScaledCovSpec):
        return int(np.argmax(sample(scaled_cov_approx(belief, approx.c), rng)))
    if isinstance(approx, MeanFieldSpec):
        # diagonal covariance: mu + sqrt(var) * z is the Cholesky path, bit
        # for bit, without building the intermediate belief
        z = rng.standard_normal(belief.n_arms)
        scale = np.sqrt(1.0 / np.diag(belief.precision))
        return int(np.argmax(belief.mean + scale * z))
    if isinstance(approx, AdversarialOverSpec):
        return adversarial_over_choose(belief, approx.alpha, approx.epsilon, rng)
    if isinstance(approx, AdversarialUnderSpec):
        return adversarial_under_choose(belief, approx.alpha, approx.epsilon, rng)
    raise ConfigError(f"unknown approximator {approx!r}")


def _project(approx: ApproximatorSpec, belief: GaussianBelief) -> GaussianBelief:
    if isinstance(approx, ExactSpec):
        return belief
    if isinstance(approx, ScaledCovSpec):
        return scaled_cov_approx(belief, approx.c)
    if isinstance(approx, MeanFieldSpec):
        return mean_field_approx(belief)
    raise ConfigError(f"approximator {approx!r} has no Gaussian projection")


def _choose(
    policy: PolicySpec, state: PolicyState, t: int, rngs: TrajectoryRngs, n_arms: int
) -> int:
    if isinstance(policy, ExactTS):
        return int(np.argmax(sample(state.belief, rngs.action)))
    if isinstance(policy, ForcedExploration):
        # indicator first, on its own stream, before any approximator work
        if rngs.explore.random() < policy.schedule.prob(t):
            return int(rngs.explore.integers(n_arms))
        return _approx_action(policy.approximator, state, rngs.action)
    if isinstance(policy, ApproxUpdate):
        return int(np.argmax(sample(state.belief, rngs.action)))
    if isinstance(policy, (ApproxTS, ApproxSample)):
        return _approx_action(policy.approximator, state, rngs.action)
    raise ConfigError(f"unknown policy {policy!r}")


def _observe(
    policy: PolicySpec,
    state: PolicyState,
    arm: int,
    reward: float,
    noise_sd: float,
    rngs: TrajectoryRngs,
) -> PolicyState:
    approx = _approximator_of(policy)
    if isinstance(approx, EnsembleSpec):
        if isinstance(policy, ApproxSample):
            belief = update(state.belief, arm, reward, noise_sd)
            ensemble = ensemble_init(belief, approx.n_models, rngs.action)
            return PolicyState(belief=belief, ensemble=ensemble)
        ensemble = ensemble_update(
            state.ensemble, arm, reward, noise_sd, rngs.action, approx.perturb_sd
        )
        return replace(state, ensemble=ensemble)
    belief = update(state.belief, arm, reward, noise_sd)
    if isinstance(policy, ApproxUpdate):
        belief = _project(policy.approximator, belief)
    return replace(state, belief=belief)


def step(
    policy: PolicySpec,
    state: PolicyState,
    instance: BanditInstance,
    t: int,
    rngs: TrajectoryRngs,
) -> tuple[int, float, PolicyState]:
    """One decision round: choose an arm, observe a reward, absorb it."""
    if t < 1:
        raise ValueError("time steps start at 1")
    arm = _choose(policy, state, t, rngs, instance.n_arms)
    reward = pull(instance, arm, rngs.reward)
    return arm, reward, _observe(policy, state, arm, reward, instance.reward_sd, rngs)


@dataclass(frozen=True)
class Trajectory:
    arms: np.ndarray
    rewards: np.ndarray
    final_state: PolicyState


def simulate(
    policy: PolicySpec,
    prior: GaussianBelief,
    instance: BanditInstance,
    horizon: int,
    rngs: TrajectoryRngs,
) -> Trajectory:
    """Run one full trajectory of a policy."""
    if horizon < 1:
        raise ConfigError("horizon must be at least 1")
    state = init_policy_state(policy, prior, rngs)
    arms = np.empty(horizon, dtype=int)
    rewards = np.empty(horizon, dtype=float)
    for t in range(1, horizon + 1):
        arm, reward, state = step(policy, state, instance, t, rngs)
        arms[t - 1] = arm
        rewards[t - 1] = reward
    return Trajectory(arms=arms, rewards=rewards, final_state=state)
