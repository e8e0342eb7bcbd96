"""Simulation lab for Thompson sampling with approximate posterior inference."""

__version__ = "0.1.0"

from .bandit import BanditInstance, HistoryRecord, cumulative_regret, pull
from .errors import BanditLabError, ConfigError, NumericError
from .gaussian import ArmMarginal, GaussianBelief, best_arm_marginal, kl_gaussian, sample
from .posterior import update

__all__ = [
    "ArmMarginal",
    "BanditInstance",
    "BanditLabError",
    "ConfigError",
    "GaussianBelief",
    "HistoryRecord",
    "NumericError",
    "best_arm_marginal",
    "cumulative_regret",
    "kl_gaussian",
    "pull",
    "sample",
    "update",
]
