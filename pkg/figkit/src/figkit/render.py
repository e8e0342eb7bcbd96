"""Render the experiment figures from the documented CSV schemas.

Strictly a consumer: every plotted number comes out of a CSV column, nothing
is recomputed here. Two schemas are understood:

    regret curves:  policy,step,mean_regret,ci_half_width,reps
    bound tables:   curve_id,alpha,x,value

Figure ids: ``fig2b``, ``fig3a`` and ``fig3b`` draw regret curves with
shaded 95% bands (no band for single-replication curves); ``fig5`` draws the
per-step regret floor against the error budget; ``fig6`` draws the
restriction thresholds against the wrong-region mass in two panels, with an
optional log-scaled divergence axis.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

REGRET_FIGURES = ("fig2b", "fig3a", "fig3b")
THEORY_FIGURES = ("fig5", "fig6")
FIGURE_IDS = REGRET_FIGURES + THEORY_FIGURES

CURVES_HEADER = ["policy", "step", "mean_regret", "ci_half_width", "reps"]
THEORY_HEADER = ["curve_id", "alpha", "x", "value"]

REGRET_TITLES = {
    "fig2b": "Mean cumulative regret, two-armed example",
    "fig3a": "Forced exploration on the two-armed example",
    "fig3b": "Forced exploration on the 50-armed problem",
}


class FigureError(Exception):
    """Schema mismatch or unusable input."""


@dataclass(frozen=True)
class FigureSpec:
    figure_id: str
    csv_path: str
    output_path: str
    log_epsilon: bool = False  # fig6 only: log-scale the divergence axis

    def __post_init__(self) -> None:
        if self.figure_id not in FIGURE_IDS:
            raise FigureError(
                f"unknown figure id {self.figure_id!r}; expected one of {FIGURE_IDS}"
            )


def _check_header(header, expected, path):
    if header != expected:
        missing = [col for col in expected if col not in (header or [])]
        raise FigureError(
            f"{path}: expected columns {expected}, got {header}"
            + (f" (missing {missing})" if missing else "")
        )


def read_curves_csv(path: str) -> dict:
    """Regret curves keyed by policy id, in file order."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        _check_header(header, CURVES_HEADER, path)
        rows = list(reader)
    if not rows:
        raise FigureError(f"{path}: no data rows")
    curves: dict = {}
    for policy, step, mean, ci, reps in rows:
        entry = curves.setdefault(
            policy, {"step": [], "mean_regret": [], "ci_half_width": [], "reps": int(reps)}
        )
        entry["step"].append(int(step))
        entry["mean_regret"].append(float(mean))
        entry["ci_half_width"].append(float(ci))
    for entry in curves.values():
        for key in ("step", "mean_regret", "ci_half_width"):
            entry[key] = np.asarray(entry[key])
    return curves


def read_theory_csv(path: str) -> dict:
    """Bound-table rows grouped by (curve_id, alpha), in file order."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        _check_header(header, THEORY_HEADER, path)
        rows = list(reader)
    if not rows:
        raise FigureError(f"{path}: no data rows")
    groups: dict = {}
    for curve_id, alpha, x, value in rows:
        entry = groups.setdefault((curve_id, float(alpha)), {"x": [], "value": []})
        entry["x"].append(float(x))
        entry["value"].append(float(value))
    for entry in groups.values():
        entry["x"] = np.asarray(entry["x"])
        entry["value"] = np.asarray(entry["value"])
    return groups


def _plotted_series(ax) -> dict:
    return {
        line.get_label(): (np.asarray(line.get_xdata()), np.asarray(line.get_ydata()))
        for line in ax.get_lines()
    }


def _render_regret(spec: FigureSpec) -> dict:
    curves = read_curves_csv(spec.csv_path)
    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    banded = 0
    for policy, entry in curves.items():
        (line,) = ax.plot(entry["step"], entry["mean_regret"], label=policy)
        if entry["reps"] > 1:
            ax.fill_between(
                entry["step"],
                entry["mean_regret"] - entry["ci_half_width"],
                entry["mean_regret"] + entry["ci_half_width"],
                color=line.get_color(),
                alpha=0.2,
                linewidth=0,
            )
            banded += 1
    ax.set_xlabel("time step")
    ax.set_ylabel("mean cumulative regret")
    ax.set_title(REGRET_TITLES[spec.figure_id])
    ax.legend()
    series = _plotted_series(ax)
    fig.savefig(spec.output_path, dpi=150)
    plt.close(fig)
    return {"series": series, "bands": banded}


def _render_fig5(spec: FigureSpec) -> dict:
    groups = read_theory_csv(spec.csv_path)
    rows = {alpha: g for (cid, alpha), g in groups.items() if cid == "fig5"}
    if not rows:
        raise FigureError(f"{spec.csv_path}: no fig5 rows")
    fig, ax = plt.subplots(figsize=(6.5, 4.5))
    for alpha in sorted(rows):
        ax.plot(rows[alpha]["x"], rows[alpha]["value"], label=f"alpha = {alpha:g}")
    ax.set_xlabel("error budget")
    ax.set_ylabel("regret floor per time step")
    ax.set_title("Per-step regret floor of the mass-shift construction")
    ax.legend()
    series = _plotted_series(ax)
    fig.savefig(spec.output_path, dpi=150)
    plt.close(fig)
    return {"series": series, "bands": 0}


def _render_fig6(spec: FigureSpec) -> dict:
    groups = read_theory_csv(spec.csv_path)
    panels = {"fig6a": {}, "fig6b": {}}
    for (cid, alpha), g in groups.items():
        if cid in panels:
            panels[cid][alpha] = g
    if not panels["fig6a"] and not panels["fig6b"]:
        raise FigureError(f"{spec.csv_path}: no fig6a/fig6b rows")
    fig, axes = plt.subplots(1, 2, figsize=(10.0, 4.2))
    series: dict = {}
    for ax, (cid, label) in zip(
        axes, (("fig6a", "alpha <= 0"), ("fig6b", "0 <= alpha < 1"))
    ):
        for alpha in sorted(panels[cid]):
            g = panels[cid][alpha]
            ax.plot(g["x"], g["value"], label=f"alpha = {alpha:g}")
        ax.set_xlabel("wrong-region mass")
        ax.set_ylabel("divergence threshold")
        ax.set_title(label)
        if spec.log_epsilon:
            ax.set_yscale("log")
        if panels[cid]:
            ax.legend()
        for name, data in _plotted_series(ax).items():
            series[f"{cid}:{name}"] = data
    fig.savefig(spec.output_path, dpi=150)
    plt.close(fig)
    return {"series": series, "bands": 0}


def render(spec: FigureSpec) -> dict:
    """Write the figure and return the plotted series for verification.

    The returned mapping carries, per legend label, the exact x and y arrays
    handed to matplotlib (taken back off the line objects), plus the number
    of CI bands drawn.
    """
    parent = os.path.dirname(spec.output_path)
    if parent:
        os.makedirs(parent, exist_ok=True)
    if spec.figure_id in REGRET_FIGURES:
        return _render_regret(spec)
    if spec.figure_id == "fig5":
        return _render_fig5(spec)
    return _render_fig6(spec)
