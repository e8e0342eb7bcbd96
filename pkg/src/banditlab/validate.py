"""Self-contained oracle and property suite, runnable from the CLI.

Each check is seeded and deterministic. They cover the load-bearing numeric
contracts: the Gaussian KL spot values, the arm-coarsening inequality
(divergence can only shrink when parameters are collapsed to arm choices),
continuity of the alpha family at its KL limits, order-independence of
conjugate updates, the bound round trip, and byte-identical experiment
output across worker counts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from io import StringIO

import numpy as np

from .config import parse_config
from .divergence import Grid, alpha_div_discrete, data_processing_check, gaussian_density
from .gaussian import GaussianBelief, kl_gaussian
from .harness import run_experiment
from .posterior import update
from .theory import over_construction_bound, r_from_epsilon

DPI_ALPHAS = (-1.0, 0.0, 0.5, 1.0, 2.0)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def check_divergence_oracles() -> CheckResult:
    base = np.array([[0.7, 0.15], [0.15, 0.4]])
    shrunk = GaussianBelief(np.zeros(2), 0.09 * base)
    wide = GaussianBelief(np.zeros(2), base)
    got = kl_gaussian(shrunk, wide)
    expected = (0.18 - 2.0 - math.log(0.0081)) / 2.0
    err = abs(got - expected)
    return CheckResult(
        "divergence-oracles",
        err < 1e-9,
        f"shrunk-vs-base KL {got:.12f}, formula {expected:.12f}, |err| {err:.2e}",
    )


def check_data_processing_margin(trials: int = 1000, seed: int = 2024) -> CheckResult:
    """Randomized arm-coarsening inequality margins on 2-D grids."""
    gen = np.random.default_rng(seed)
    worst = math.inf
    for _ in range(trials):
        means = gen.uniform(-1.0, 1.0, size=(2, 2))
        covs = []
        for _ in range(2):
            a = gen.uniform(-1.0, 1.0, size=(2, 2))
            covs.append(a @ a.T + 0.3 * np.eye(2))
        spread = math.sqrt(max(np.trace(c) for c in covs))
        lo = float(means.min()) - 8.0 * spread
        hi = float(means.max()) + 8.0 * spread
        grid = Grid((lo, lo), (hi, hi), (81, 81))
        p = gaussian_density(grid, GaussianBelief(means[0], covs[0]))
        q = gaussian_density(grid, GaussianBelief(means[1], covs[1]))
        m1, m2 = grid.mesh
        parts = [m1 > m2, m1 <= m2]
        for alpha in DPI_ALPHAS:
            margin = data_processing_check(p, q, parts, alpha, grid)
            if not math.isinf(margin):
                worst = min(worst, margin)
            if margin < -1e-6:
                return CheckResult(
                    "data-processing-margin",
                    False,
                    f"margin {margin:.3e} below -1e-6 at alpha={alpha}",
                )
    return CheckResult(
        "data-processing-margin",
        True,
        f"{trials} trials x {len(DPI_ALPHAS)} alphas, worst finite margin {worst:.3e}",
    )


def check_alpha_limit_continuity(seed: int = 7) -> CheckResult:
    gen = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(50):
        p = gen.dirichlet(np.ones(4))
        q = gen.dirichlet(np.ones(4))
        for limit, probes in ((0.0, (1e-4, -1e-4)), (1.0, (1.0 + 1e-4, 1.0 - 1e-4))):
            at_limit = alpha_div_discrete(p, q, limit)
            for alpha in probes:
                rel = abs(alpha_div_discrete(p, q, alpha) - at_limit) / at_limit
                worst = max(worst, rel)
    return CheckResult(
        "alpha-limit-continuity",
        worst < 1e-3,
        f"max relative gap to the KL branches {worst:.2e}",
    )


def check_posterior_permutation(seed: int = 12) -> CheckResult:
    gen = np.random.default_rng(seed)
    a = gen.normal(size=(3, 3))
    prior = GaussianBelief(gen.normal(size=3), a @ a.T + 0.3 * np.eye(3))
    obs = [(int(gen.integers(0, 3)), float(gen.normal())) for _ in range(30)]
    reference = None
    worst = 0.0
    for perm_seed in range(6):
        order = np.random.default_rng(perm_seed).permutation(len(obs))
        belief = prior
        for i in order:
            belief = update(belief, obs[i][0], obs[i][1], 0.6)
        if reference is None:
            reference = belief
        else:
            worst = max(
                worst,
                float(np.abs(belief.mean - reference.mean).max()),
                float(np.abs(belief.cov - reference.cov).max()),
            )
    return CheckResult(
        "posterior-permutation",
        worst < 1e-9,
        f"max deviation across orderings {worst:.2e}",
    )


def check_r_round_trip(seed: int = 5) -> CheckResult:
    gen = np.random.default_rng(seed)
    worst = 0.0
    tested = 0
    while tested < 500:
        alpha = float(gen.uniform(0.05, 5.0))
        cap = 1.0 / (alpha * (1.0 - alpha)) if 0 < alpha < 1 else 10.0
        eps = float(gen.uniform(1e-6, 0.999 * cap))
        r = r_from_epsilon(alpha, eps)
        if math.isinf(r):
            # saturation regime: r exceeds double range, no finite round trip
            continue
        worst = max(worst, abs(over_construction_bound(alpha, r) - eps))
        tested += 1
    return CheckResult(
        "r-round-trip", worst < 1e-12, f"max |recovered - epsilon| {worst:.2e}"
    )


def _small_experiment_csv(workers: int) -> bytes:
    config = parse_config(
        {
            "instance": {"kind": "fixed", "means": [0.6, 0.5], "reward_sd": 0.2},
            "prior": {"kind": "scaled-identity", "mean": [0.1, 0.9], "variance": 0.25},
            "run": {"horizon": 30, "replications": 12, "base_seed": 99},
            "policies": [
                {"id": "exact", "kind": "exact-ts"},
                {
                    "id": "wide",
                    "kind": "approx-ts",
                    "approximator": {"kind": "scaled-cov", "c": 4.5},
                },
                {
                    "id": "ens",
                    "kind": "approx-ts",
                    "approximator": {"kind": "ensemble", "models": 2},
                },
            ],
        }
    )
    result = run_experiment(config, workers=workers)
    buf = StringIO()
    buf.write("policy,step,mean_regret,ci_half_width,reps\n")
    for curve in result.curves:
        for t in range(curve.mean_regret.size):
            buf.write(
                f"{curve.policy_id},{t + 1},{curve.mean_regret[t]!r},"
                f"{curve.ci_half_width[t]!r},{curve.reps}\n"
            )
    return buf.getvalue().encode()


def check_thread_determinism() -> CheckResult:
    serial = _small_experiment_csv(workers=1)
    parallel = _small_experiment_csv(workers=2)
    return CheckResult(
        "determinism-threads",
        serial == parallel,
        f"{len(serial)} output bytes, byte-identical across worker counts: "
        f"{serial == parallel}",
    )


ALL_CHECKS = (
    check_divergence_oracles,
    check_data_processing_margin,
    check_alpha_limit_continuity,
    check_posterior_permutation,
    check_r_round_trip,
    check_thread_determinism,
)


def run_all_checks(trials: int = 1000) -> list[CheckResult]:
    results = []
    for check in ALL_CHECKS:
        if check is check_data_processing_margin:
            results.append(check(trials=trials))
        else:
            results.append(check())
    return results
