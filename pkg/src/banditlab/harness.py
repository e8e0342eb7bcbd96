"""Seeded replication harness: run experiments, aggregate, write outputs.

Every (policy, replication) pair gets its own RNG stream derived from
(base seed, hash of the policy id, replication index), so trajectories are
independent of scheduling and of which other policies share the run; outputs
are byte-identical across worker counts. In Bayesian mode the true means are
drawn from the prior once per replication from a policy-independent stream,
so all policies face the same instance within a replication.

Output schemas (UTF-8, LF, 17-significant-digit floats):

    curves:      policy,step,mean_regret,ci_half_width,reps
    repl. dump:  policy,rep,step,cum_regret        (opt-in)
    theory:      curve_id,alpha,x,value
"""

from __future__ import annotations

import hashlib
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import __version__
from .approximators import (
    AdversarialUnderSpec,
    EnsembleSpec,
    ScaledCovSpec,
    scaled_cov_kl_constants,
)
from .bandit import BanditInstance, regret_curve
from .config import INSTANCE_NS, POLICY_NS, ExperimentConfig, build_prior
from .gaussian import GaussianBelief, sample
from .policies import ApproxSample, make_trajectory_rngs, simulate
from .theory import BoundPoint

CI_FACTOR = 1.96  # normal-approximation 95% band


@dataclass(frozen=True)
class RegretCurve:
    """Mean cumulative pseudo-regret per step with a 95% CI half-width."""

    policy_id: str
    mean_regret: np.ndarray
    ci_half_width: np.ndarray
    reps: int


@dataclass(frozen=True)
class ExperimentResult:
    curves: tuple[RegretCurve, ...]
    metadata: dict
    replication_regrets: dict | None = None  # policy id -> (R, T) array


def policy_stream_key(policy_id: str) -> int:
    """Stable 64-bit key so streams survive policy-list edits."""
    digest = hashlib.blake2b(policy_id.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def replication_seed(base_seed: int, policy_id: str, rep: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(
        (base_seed, POLICY_NS, policy_stream_key(policy_id), rep)
    )


def instance_for_replication(
    config: ExperimentConfig, prior: GaussianBelief, rep: int
) -> BanditInstance:
    if config.instance.means is not None:
        return BanditInstance(
            np.asarray(config.instance.means, dtype=float), config.instance.reward_sd
        )
    rng = np.random.default_rng(
        np.random.SeedSequence((config.base_seed, INSTANCE_NS, rep))
    )
    return BanditInstance(sample(prior, rng), config.instance.reward_sd)


def _run_replication(args) -> tuple[int, dict]:
    config, rep = args
    prior = build_prior(config)
    instance = instance_for_replication(config, prior, rep)
    curves = {}
    for policy in config.policies:
        rngs = make_trajectory_rngs(
            replication_seed(config.base_seed, policy.policy_id, rep)
        )
        traj = simulate(policy.spec, prior, instance, config.horizon, rngs)
        curves[policy.policy_id] = regret_curve(instance, traj.arms)
    return rep, curves


def run_experiment(config: ExperimentConfig, workers: int = 1) -> ExperimentResult:
    """Run all policies over all replications and aggregate regret curves."""
    reps = config.replications
    horizon = config.horizon
    per_policy = {
        p.policy_id: np.empty((reps, horizon), dtype=float) for p in config.policies
    }
    tasks = [(config, rep) for rep in range(reps)]
    if workers > 1 and reps > 1:
        chunk = max(1, reps // (workers * 8))
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = pool.map(_run_replication, tasks, chunksize=chunk)
            for rep, curves in results:
                for pid, curve in curves.items():
                    per_policy[pid][rep] = curve
    else:
        for task in tasks:
            rep, curves = _run_replication(task)
            for pid, curve in curves.items():
                per_policy[pid][rep] = curve

    curves = tuple(
        _aggregate(p.policy_id, per_policy[p.policy_id]) for p in config.policies
    )
    result = ExperimentResult(
        curves=curves,
        metadata=_metadata(config),
        replication_regrets=per_policy if config.dump_trajectories else None,
    )
    return result


def _aggregate(policy_id: str, regrets: np.ndarray) -> RegretCurve:
    reps = regrets.shape[0]
    mean = regrets.mean(axis=0)
    if reps > 1:
        sd = regrets.std(axis=0, ddof=1)
        ci = CI_FACTOR * sd / np.sqrt(reps)
    else:
        ci = np.zeros_like(mean)
    return RegretCurve(policy_id=policy_id, mean_regret=mean, ci_half_width=ci, reps=reps)


def _describe_approximator(spec) -> dict:
    info: dict = {"kind": type(spec).__name__}
    for field_name in ("c", "n_models", "perturb_sd", "alpha", "epsilon"):
        if hasattr(spec, field_name):
            info[field_name] = getattr(spec, field_name)
    return info


def _metadata(config: ExperimentConfig) -> dict:
    k = config.n_arms
    policies = []
    notes = []
    for p in config.policies:
        entry = {
            "id": p.policy_id,
            "kind": type(p.spec).__name__,
            "stream_key": policy_stream_key(p.policy_id),
        }
        approx = getattr(p.spec, "approximator", None)
        if approx is not None:
            entry["approximator"] = _describe_approximator(approx)
            if isinstance(approx, ScaledCovSpec):
                entry["divergence_constants"] = scaled_cov_kl_constants(approx.c, k)
            if isinstance(approx, AdversarialUnderSpec) and approx.epsilon is not None:
                notes.append(
                    f"policy {p.policy_id!r}: restriction adversary capped at "
                    f"divergence budget {approx.epsilon} (alpha={approx.alpha})"
                )
            if isinstance(p.spec, ApproxSample) and isinstance(approx, EnsembleSpec):
                notes.append(
                    f"policy {p.policy_id!r}: ensemble re-drawn from the exact "
                    "posterior every step (approximate-sample construction)"
                )
        schedule = getattr(p.spec, "schedule", None)
        if schedule is not None:
            entry["exploration_rate"] = schedule.rate_constant
        policies.append(entry)
    return {
        "package_version": __version__,
        "title": config.title,
        "base_seed": config.base_seed,
        "horizon": config.horizon,
        "replications": config.replications,
        "arms": k,
        "instance": {
            "kind": config.instance.kind,
            "reward_sd": config.instance.reward_sd,
        },
        "prior": {"kind": config.prior.kind},
        "ci_method": "normal approximation, 1.96 * sd / sqrt(R)",
        "policies": policies,
        "notes": notes,
    }


# --------------------------------------------------------------------------
# Output files


def _fmt(x: float) -> str:
    return "%.17g" % x


def write_curves_csv(path: str, curves) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("policy,step,mean_regret,ci_half_width,reps\n")
        for curve in curves:
            for t in range(curve.mean_regret.size):
                fh.write(
                    f"{curve.policy_id},{t + 1},{_fmt(curve.mean_regret[t])},"
                    f"{_fmt(curve.ci_half_width[t])},{curve.reps}\n"
                )


def write_replications_csv(path: str, replication_regrets: dict) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("policy,rep,step,cum_regret\n")
        for pid, regrets in replication_regrets.items():
            for rep in range(regrets.shape[0]):
                for t in range(regrets.shape[1]):
                    fh.write(f"{pid},{rep},{t + 1},{_fmt(regrets[rep, t])}\n")


def write_theory_csv(path: str, points: list[BoundPoint]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("curve_id,alpha,x,value\n")
        for p in points:
            fh.write(f"{p.curve_id},{_fmt(p.alpha)},{_fmt(p.x)},{_fmt(p.value)}\n")


def write_metadata_json(path: str, metadata: dict) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(metadata, fh, indent=2, sort_keys=True)
        fh.write("\n")
