"""Declarative experiment configuration.

One TOML file per experiment:

    title = "motivating example"

    [instance]
    kind = "fixed"            # fixed | prior-draw
    means = [0.6, 0.5]        # fixed only
    reward_sd = 0.2

    [prior]
    kind = "scaled-identity"  # explicit | scaled-identity | random-gram
    mean = [0.1, 0.9]         # optional, default zeros
    variance = 0.25           # scaled-identity
    # cov = [[...], ...]      # explicit
    # arms = 50               # random-gram (entries of A ~ U[0,1), cov = A'A/k)

    [run]
    horizon = 100
    replications = 1000
    base_seed = 20240809
    output = "out/motivating.csv"
    dump_trajectories = false  # optional

    [[policies]]
    id = "exact"
    kind = "exact-ts"          # exact-ts | approx-ts | forced-exploration
                               # | approx-sample | approx-update
    # exploration_rate = 1.0   # forced-exploration: p_t = min(1, rate/t)
    # [policies.approximator]
    # kind = "scaled-cov"      # exact | scaled-cov | mean-field | ensemble
    #                          # | adversarial-over | adversarial-under
    # c = 4.5

All numerics are config-driven; nothing reads the environment.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field

import numpy as np

from .approximators import (
    AdversarialOverSpec,
    AdversarialUnderSpec,
    ApproximatorSpec,
    EnsembleSpec,
    ExactSpec,
    MeanFieldSpec,
    ScaledCovSpec,
)
from .errors import ConfigError, NumericError
from .gaussian import GaussianBelief
from .policies import (
    ApproxSample,
    ApproxTS,
    ApproxUpdate,
    ExactTS,
    ExplorationSchedule,
    ForcedExploration,
    PolicySpec,
)

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

# Tolerance on Cov(M2, M1 - M2) = 0 required by the under-exploration adversary.
INDEPENDENCE_TOL = 1e-9

# SeedSequence namespaces keeping prior, instance and policy streams apart.
PRIOR_NS = 11
INSTANCE_NS = 22
POLICY_NS = 33


@dataclass(frozen=True)
class PriorConfig:
    kind: str
    mean: tuple | None = None
    cov: tuple | None = None
    variance: float | None = None
    arms: int | None = None

    def n_arms(self) -> int | None:
        if self.mean is not None:
            return len(self.mean)
        if self.cov is not None:
            return len(self.cov)
        return self.arms


@dataclass(frozen=True)
class InstanceConfig:
    kind: str
    reward_sd: float
    means: tuple | None = None


@dataclass(frozen=True)
class PolicyConfig:
    policy_id: str
    spec: PolicySpec


@dataclass(frozen=True)
class ExperimentConfig:
    instance: InstanceConfig
    prior: PriorConfig
    policies: tuple[PolicyConfig, ...]
    horizon: int
    replications: int
    base_seed: int
    output: str = "curves.csv"
    dump_trajectories: bool = False
    title: str = ""

    @property
    def n_arms(self) -> int:
        if self.instance.means is not None:
            return len(self.instance.means)
        k = self.prior.n_arms()
        assert k is not None  # guaranteed by validation
        return k


def _fail(path: str, message: str):
    raise ConfigError(f"{path}: {message}")


def _get(table: dict, key: str, path: str, required: bool = True, default=None):
    if key not in table:
        if required:
            _fail(f"{path}.{key}", "missing required field")
        return default
    return table[key]


def _vector(value, path: str) -> tuple:
    try:
        arr = np.asarray(value, dtype=float)
    except (TypeError, ValueError):
        _fail(path, "expected a numeric vector")
    if arr.ndim != 1 or arr.size == 0:
        _fail(path, "expected a non-empty numeric vector")
    return tuple(float(x) for x in arr)


def _matrix(value, path: str) -> tuple:
    try:
        arr = np.asarray(value, dtype=float)
    except (TypeError, ValueError):
        _fail(path, "expected a numeric matrix")
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        _fail(path, "expected a square numeric matrix")
    return tuple(tuple(float(x) for x in row) for row in arr)


def _parse_approximator(table, path: str) -> ApproximatorSpec:
    if not isinstance(table, dict):
        _fail(path, "expected an approximator table")
    kind = _get(table, "kind", path)
    try:
        if kind == "exact":
            return ExactSpec()
        if kind == "scaled-cov":
            return ScaledCovSpec(c=float(_get(table, "c", path)))
        if kind == "mean-field":
            return MeanFieldSpec()
        if kind == "ensemble":
            perturb = table.get("perturb_sd")
            return EnsembleSpec(
                n_models=int(_get(table, "models", path)),
                perturb_sd=None if perturb is None else float(perturb),
            )
        if kind == "adversarial-over":
            return AdversarialOverSpec(
                alpha=float(_get(table, "alpha", path)),
                epsilon=float(_get(table, "epsilon", path)),
            )
        if kind == "adversarial-under":
            eps = table.get("epsilon")
            return AdversarialUnderSpec(
                alpha=float(table.get("alpha", 0.0)),
                epsilon=None if eps is None else float(eps),
            )
    except ConfigError as exc:
        _fail(path, str(exc))
    _fail(f"{path}.kind", f"unknown approximator kind {kind!r}")


def _parse_policy(table, index: int) -> PolicyConfig:
    path = f"policies[{index}]"
    if not isinstance(table, dict):
        _fail(path, "expected a policy table")
    policy_id = str(_get(table, "id", path))
    kind = _get(table, "kind", path)
    try:
        if kind == "exact-ts":
            spec: PolicySpec = ExactTS()
        elif kind == "approx-ts":
            spec = ApproxTS(
                _parse_approximator(
                    _get(table, "approximator", path), f"{path}.approximator"
                )
            )
        elif kind == "forced-exploration":
            spec = ForcedExploration(
                _parse_approximator(
                    _get(table, "approximator", path), f"{path}.approximator"
                ),
                ExplorationSchedule(float(_get(table, "exploration_rate", path))),
            )
        elif kind == "approx-sample":
            spec = ApproxSample(
                _parse_approximator(
                    _get(table, "approximator", path), f"{path}.approximator"
                )
            )
        elif kind == "approx-update":
            spec = ApproxUpdate(
                _parse_approximator(
                    _get(table, "approximator", path), f"{path}.approximator"
                )
            )
        else:
            _fail(f"{path}.kind", f"unknown policy kind {kind!r}")
    except ConfigError as exc:
        if str(exc).startswith(path):
            raise
        _fail(path, str(exc))
    return PolicyConfig(policy_id=policy_id, spec=spec)


def parse_config(data: dict) -> ExperimentConfig:
    """Build and validate an ExperimentConfig from a parsed TOML table."""
    if not isinstance(data, dict):
        raise ConfigError("config root must be a table")

    inst_tbl = _get(data, "instance", "config")
    inst_kind = _get(inst_tbl, "kind", "instance")
    if inst_kind not in ("fixed", "prior-draw"):
        _fail("instance.kind", f"unknown instance kind {inst_kind!r}")
    reward_sd = float(_get(inst_tbl, "reward_sd", "instance"))
    if not reward_sd > 0.0:
        _fail("instance.reward_sd", "must be positive")
    means = None
    if inst_kind == "fixed":
        means = _vector(_get(inst_tbl, "means", "instance"), "instance.means")
        if len(means) < 2:
            _fail("instance.means", "need at least two arms")
    instance = InstanceConfig(kind=inst_kind, reward_sd=reward_sd, means=means)

    prior_tbl = _get(data, "prior", "config")
    prior_kind = _get(prior_tbl, "kind", "prior")
    if prior_kind not in ("explicit", "scaled-identity", "random-gram"):
        _fail("prior.kind", f"unknown prior kind {prior_kind!r}")
    mean = prior_tbl.get("mean")
    mean = None if mean is None else _vector(mean, "prior.mean")
    cov = variance = arms = None
    if prior_kind == "explicit":
        cov = _matrix(_get(prior_tbl, "cov", "prior"), "prior.cov")
    elif prior_kind == "scaled-identity":
        variance = float(_get(prior_tbl, "variance", "prior"))
        if not variance >= 0.0:
            _fail("prior.variance", "must be non-negative")
    else:
        arms = prior_tbl.get("arms")
        arms = None if arms is None else int(arms)
    prior = PriorConfig(kind=prior_kind, mean=mean, cov=cov, variance=variance, arms=arms)

    run_tbl = _get(data, "run", "config")
    horizon = int(_get(run_tbl, "horizon", "run"))
    if horizon < 1:
        _fail("run.horizon", "must be at least 1")
    replications = int(_get(run_tbl, "replications", "run"))
    if replications < 1:
        _fail("run.replications", "must be at least 1")
    base_seed = int(_get(run_tbl, "base_seed", "run"))
    output = str(run_tbl.get("output", "curves.csv"))
    dump = bool(run_tbl.get("dump_trajectories", False))

    policy_tables = _get(data, "policies", "config")
    if not isinstance(policy_tables, list) or not policy_tables:
        _fail("policies", "need a non-empty list of policy tables")
    policies = tuple(_parse_policy(tbl, i) for i, tbl in enumerate(policy_tables))
    ids = [p.policy_id for p in policies]
    if len(set(ids)) != len(ids):
        _fail("policies", f"duplicate policy ids in {ids}")

    config = ExperimentConfig(
        instance=instance,
        prior=prior,
        policies=policies,
        horizon=horizon,
        replications=replications,
        base_seed=base_seed,
        output=output,
        dump_trajectories=dump,
        title=str(data.get("title", "")),
    )
    validate_config(config)
    return config


def load_config(path: str) -> ExperimentConfig:
    with open(path, "rb") as fh:
        try:
            data = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: invalid TOML ({exc})") from exc
    return parse_config(data)


def build_prior(config: ExperimentConfig) -> GaussianBelief:
    """Materialize the prior belief (the random-gram draw is seed-determined)."""
    k = config.n_arms
    prior = config.prior
    mean = np.zeros(k) if prior.mean is None else np.asarray(prior.mean, dtype=float)
    if prior.kind == "explicit":
        cov = np.asarray(prior.cov, dtype=float)
    elif prior.kind == "scaled-identity":
        cov = prior.variance * np.eye(k)
    else:
        rng = np.random.default_rng(
            np.random.SeedSequence((config.base_seed, PRIOR_NS))
        )
        a = rng.uniform(0.0, 1.0, size=(k, k))
        cov = a.T @ a / k
    return GaussianBelief(mean, cov)


def _uses_adversarial(config: ExperimentConfig, kinds) -> bool:
    return any(
        isinstance(getattr(p.spec, "approximator", None), kinds)
        for p in config.policies
    )


def validate_config(config: ExperimentConfig) -> None:
    """Cross-field validation; raises ConfigError with a field path."""
    k_prior = config.prior.n_arms()
    if config.instance.means is not None:
        k = len(config.instance.means)
        if k_prior is not None and k_prior != k:
            _fail("prior", f"prior dimension {k_prior} != instance arms {k}")
    elif k_prior is None:
        _fail("prior", "prior-draw instances need the prior to fix the arm count")
    else:
        k = k_prior

    adversarial = (AdversarialOverSpec, AdversarialUnderSpec)
    if _uses_adversarial(config, adversarial) and k != 2:
        _fail("policies", "adversarial constructions require a two-armed problem")

    prior = build_prior(config)
    if not (config.prior.kind == "scaled-identity" and config.prior.variance == 0.0):
        try:
            prior.chol
        except NumericError as exc:
            _fail("prior", f"prior covariance is not positive definite ({exc})")

    if _uses_adversarial(config, (AdversarialUnderSpec,)):
        # Theorem-2 independence condition: Cov(M2, M1 - M2) = S12 - S22 = 0
        dependence = float(prior.cov[1, 0] - prior.cov[1, 1])
        if abs(dependence) > INDEPENDENCE_TOL:
            _fail(
                "prior",
                "under-exploration adversary needs Cov(M2, M1 - M2) = 0; "
                f"got {dependence!r}",
            )
