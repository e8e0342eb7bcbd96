"""Fixtures generating real harness CSVs through the banditlab CLI."""

import subprocess
import sys

import pytest

EXPERIMENT = """
[instance]
kind = "fixed"
means = [0.6, 0.5]
reward_sd = 0.2

[prior]
kind = "scaled-identity"
mean = [0.1, 0.9]
variance = 0.25

[run]
horizon = 30
replications = 8
base_seed = 17

[[policies]]
id = "exact"
kind = "exact-ts"

[[policies]]
id = "overdispersed"
kind = "approx-ts"
[policies.approximator]
kind = "scaled-cov"
c = 4.5

[[policies]]
id = "underdispersed-forced"
kind = "forced-exploration"
exploration_rate = 1.0
[policies.approximator]
kind = "scaled-cov"
c = 0.3
"""


def run_banditlab(*args):
    proc = subprocess.run(
        [sys.executable, "-m", "banditlab.cli", *args],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0, proc.stderr
    return proc


@pytest.fixture(scope="session")
def curves_csv(tmp_path_factory):
    root = tmp_path_factory.mktemp("harness")
    config = root / "exp.toml"
    config.write_text(EXPERIMENT)
    out = root / "curves.csv"
    run_banditlab("run", str(config), "--out", str(out))
    return out


@pytest.fixture(scope="session")
def fig5_csv(tmp_path_factory):
    out = tmp_path_factory.mktemp("theory") / "fig5.csv"
    run_banditlab("theory", "fig5", "--out", str(out))
    return out


@pytest.fixture(scope="session")
def fig6_csv(tmp_path_factory):
    out = tmp_path_factory.mktemp("theory") / "fig6.csv"
    run_banditlab("theory", "fig6", "--out", str(out))
    return out
