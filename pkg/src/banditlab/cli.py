"""Command-line entry point.

Subcommands:

    run CONFIG.toml     simulate an experiment, write curve CSV + metadata
    theory {fig5,fig6}  emit a bound-curve table
    divergence SPEC     one-off divergence computation from a small TOML spec
    validate            run the oracle/property suite

Exit codes: 0 success, 1 configuration failure, 2 numeric failure,
64 usage error.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import __version__
from .config import ExperimentConfig, load_config
from .divergence import Grid, alpha_div_discrete, alpha_div_grid, gaussian_density
from .errors import ConfigError, NumericError
from .gaussian import GaussianBelief, kl_gaussian
from .harness import (
    run_experiment,
    write_curves_csv,
    write_metadata_json,
    write_replications_csv,
    write_theory_csv,
)
from .approximators import scaled_cov_kl_constants
from .theory import emit_bound_curves

USAGE_EXIT = 64


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(USAGE_EXIT, f"{self.prog}: error: {message}\n")


def _build_parser() -> _Parser:
    parser = _Parser(prog="banditlab", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run an experiment from a TOML config")
    run_p.add_argument("config", help="path to the experiment config")
    run_p.add_argument("--seed", type=int, help="override the base seed")
    run_p.add_argument("--reps", type=int, help="override the replication count")
    run_p.add_argument("--out", help="override the output CSV path")
    run_p.add_argument("--threads", type=int, default=1, help="worker processes")
    run_p.add_argument(
        "--dump-trajectories",
        action="store_true",
        help="also write per-replication regret curves",
    )

    theory_p = sub.add_parser("theory", help="emit a bound-curve table")
    theory_p.add_argument("curve", choices=["fig5", "fig6"])
    theory_p.add_argument("--out", help="output CSV path (default <curve>.csv)")

    div_p = sub.add_parser("divergence", help="one-off divergence computation")
    div_p.add_argument("spec", help="path to a TOML divergence spec")

    val_p = sub.add_parser("validate", help="run the oracle/property suite")
    val_p.add_argument(
        "--trials",
        type=int,
        default=1000,
        help="randomized trials for the coarsening-inequality check",
    )
    return parser


def _cmd_run(args) -> int:
    config = load_config(args.config)
    overrides = {}
    if args.seed is not None:
        overrides["base_seed"] = args.seed
    if args.reps is not None:
        if args.reps < 1:
            raise ConfigError("run.replications: must be at least 1")
        overrides["replications"] = args.reps
    if args.out is not None:
        overrides["output"] = args.out
    if args.dump_trajectories:
        overrides["dump_trajectories"] = True
    if overrides:
        from dataclasses import replace

        config = replace(config, **overrides)
    workers = max(1, args.threads)
    result = run_experiment(config, workers=workers)

    out = config.output
    parent = os.path.dirname(out)
    if parent:
        os.makedirs(parent, exist_ok=True)
    write_curves_csv(out, result.curves)
    stem, _ = os.path.splitext(out)
    write_metadata_json(stem + ".meta.json", result.metadata)
    if result.replication_regrets is not None:
        write_replications_csv(stem + ".reps.csv", result.replication_regrets)
    for curve in result.curves:
        print(
            f"{curve.policy_id}: final regret {curve.mean_regret[-1]:.4f} "
            f"+/- {curve.ci_half_width[-1]:.4f} ({curve.reps} reps)"
        )
    print(f"wrote {out}")
    return 0


def _cmd_theory(args) -> int:
    points = emit_bound_curves(args.curve)
    out = args.out or f"{args.curve}.csv"
    parent = os.path.dirname(out)
    if parent:
        os.makedirs(parent, exist_ok=True)
    write_theory_csv(out, points)
    print(f"wrote {len(points)} rows to {out}")
    return 0


def _belief_from(table: dict, path: str) -> GaussianBelief:
    try:
        return GaussianBelief(
            np.asarray(table["mean"], dtype=float),
            np.asarray(table["cov"], dtype=float),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: expected mean and cov ({exc})") from exc


def _cmd_divergence(args) -> int:
    import sys as _sys

    if _sys.version_info >= (3, 11):
        import tomllib
    else:
        import tomli as tomllib

    with open(args.spec, "rb") as fh:
        try:
            spec = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{args.spec}: invalid TOML ({exc})") from exc
    kind = spec.get("kind")
    if kind == "gaussian-kl":
        value = kl_gaussian(_belief_from(spec["p"], "p"), _belief_from(spec["q"], "q"))
    elif kind == "alpha-discrete":
        value = alpha_div_discrete(
            np.asarray(spec["p_probs"], dtype=float),
            np.asarray(spec["q_probs"], dtype=float),
            float(spec["alpha"]),
        )
    elif kind == "alpha-grid":
        grid_tbl = spec.get("grid")
        if not grid_tbl:
            raise ConfigError("alpha-grid spec needs a [grid] table")
        grid = Grid(
            tuple(grid_tbl["lower"]), tuple(grid_tbl["upper"]), tuple(grid_tbl["shape"])
        )
        p = gaussian_density(grid, _belief_from(spec["p"], "p"))
        q = gaussian_density(grid, _belief_from(spec["q"], "q"))
        value = alpha_div_grid(
            p, q, float(spec["alpha"]), grid,
            min_mass=float(grid_tbl.get("min_mass", 1.0 - 1e-6)),
        )
    elif kind == "scaled-cov":
        consts = scaled_cov_kl_constants(float(spec["c"]), int(spec["arms"]))
        print(f"kl_posterior_to_approx = {consts['kl_posterior_to_approx']!r}")
        print(f"kl_approx_to_posterior = {consts['kl_approx_to_posterior']!r}")
        return 0
    else:
        raise ConfigError(
            f"unknown divergence spec kind {kind!r} "
            "(expected gaussian-kl, alpha-discrete, alpha-grid or scaled-cov)"
        )
    print(f"value = {value!r}")
    return 0


def _cmd_validate(args) -> int:
    from .validate import run_all_checks

    results = run_all_checks(trials=args.trials)
    failures = 0
    for res in results:
        status = "PASS" if res.passed else "FAIL"
        print(f"{status} {res.name}: {res.detail}")
        failures += not res.passed
    if failures:
        print(f"{failures} check(s) failed")
        return 2
    print(f"all {len(results)} checks passed")
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if exc.code is not None else 0
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "theory":
            return _cmd_theory(args)
        if args.command == "divergence":
            return _cmd_divergence(args)
        if args.command == "validate":
            return _cmd_validate(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
