"""k-armed Gaussian bandit environment and pseudo-regret accounting.

Regret is computed on the true means (pseudo-regret): T * max_i m_i minus the
sum of the means of the arms actually pulled. Realized reward noise never
enters the regret, which keeps replication variance down.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, NamedTuple

import numpy as np


@dataclass(frozen=True)
class BanditInstance:
    """Fixed true arm means and a common reward noise level."""

    true_means: np.ndarray
    reward_sd: float

    def __post_init__(self) -> None:
        means = np.asarray(self.true_means, dtype=float)
        if means.ndim != 1 or means.size < 2:
            raise ValueError("need a vector of at least two arm means")
        if not self.reward_sd > 0.0:
            raise ValueError("reward_sd must be positive")
        object.__setattr__(self, "true_means", means)
        object.__setattr__(self, "reward_sd", float(self.reward_sd))

    @property
    def n_arms(self) -> int:
        return self.true_means.size

    @property
    def best_arm(self) -> int:
        # ties break to the lowest index, same as argmax
        return int(np.argmax(self.true_means))

    @property
    def best_mean(self) -> float:
        return float(self.true_means[self.best_arm])


class HistoryRecord(NamedTuple):
    step: int
    arm: int
    reward: float


def pull(instance: BanditInstance, arm: int, rng: np.random.Generator) -> float:
    """Draw one reward from Norm(m_arm, sd^2)."""
    if not 0 <= arm < instance.n_arms:
        raise ValueError(f"arm {arm} out of range for {instance.n_arms} arms")
    return float(rng.normal(instance.true_means[arm], instance.reward_sd))


def cumulative_regret(
    instance: BanditInstance, trajectory: Iterable[HistoryRecord]
) -> float:
    """Total pseudo-regret of a trajectory against always playing the best arm."""
    arms = np.array([rec.arm for rec in trajectory], dtype=int)
    if arms.size == 0:
        return 0.0
    if arms.min() < 0 or arms.max() >= instance.n_arms:
        raise ValueError("trajectory contains out-of-range arms")
    # sum of per-step gaps == T * best_mean - sum of pulled means, but exact
    # when the best arm is the only one pulled
    return float((instance.best_mean - instance.true_means[arms]).sum())


def regret_curve(instance: BanditInstance, arms: np.ndarray) -> np.ndarray:
    """Cumulative pseudo-regret after each step, given the pulled-arm sequence."""
    gaps = instance.best_mean - instance.true_means[arms]
    return np.cumsum(gaps)
