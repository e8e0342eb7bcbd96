"""Closed-form evaluation of the analytic bound objects.

The over-exploring construction shifts posterior mass off the best-arm region
by a factor r > 1. Its alpha-divergence from the posterior is bounded by

    bound(alpha, r) = (1 - r^(alpha-1)) / (alpha (1-alpha))   alpha != 1
                    = ln r                                    alpha  = 1

inverting which gives r as a function of the error budget epsilon, and the
per-step regret floor L = frac * gap * (1 - 1/r). The under-exploring
restriction has divergence

    eps(z) = (1 - z^alpha) / (alpha (1-alpha))   alpha < 1, alpha != 0
           = ln(1/z)                             alpha  = 0

where z is the prior mass on the wrong-arm region. ``emit_bound_curves``
produces dense tables of either family for the figure pipeline.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import ConfigError

# Dispatch window around the KL limit points alpha = 0 and alpha = 1.
KL_WINDOW = 1e-8

# z below this floor is clipped when emitting curve tables (the divergence
# genuinely blows up as z -> 0 for alpha <= 0; plots need finite values).
Z_FLOOR = 1e-4

FIG5_ALPHAS = (0.1, 0.5, 1.0, 2.0, 5.0)
FIG6_ALPHAS_NONPOS = (0.0, -0.5, -1.0, -5.0)
FIG6_ALPHAS_MID = (0.0, 0.5, 0.9)


@dataclass(frozen=True)
class BoundPoint:
    """One row of a bound-curve table: value of the curve at x."""

    curve_id: str
    alpha: float
    x: float
    value: float


def over_construction_bound(alpha: float, r: float) -> float:
    """Worst-case divergence of the mass-shift construction at ratio r."""
    if not alpha > 0.0:
        raise ConfigError("alpha must be positive")
    if not r >= 1.0:
        raise ConfigError("r must be at least 1")
    if abs(alpha - 1.0) <= KL_WINDOW:
        return math.log(r)
    if math.isinf(r):
        return 1.0 / (alpha * (1.0 - alpha)) if alpha < 1.0 else math.inf
    return (1.0 - r ** (alpha - 1.0)) / (alpha * (1.0 - alpha))


def r_from_epsilon(alpha: float, epsilon: float) -> float:
    """Mass-shift ratio r whose divergence bound equals epsilon.

    For 0 < alpha < 1 the bound saturates at 1/(alpha(1-alpha)); epsilon at
    the saturation point maps to r = +inf (the best arm is never chosen).
    """
    if not alpha > 0.0:
        raise ConfigError("alpha must be positive")
    if not epsilon > 0.0:
        raise ConfigError("epsilon must be positive")
    if abs(alpha - 1.0) <= KL_WINDOW:
        return math.exp(epsilon)
    if 0.0 < alpha < 1.0:
        cap = 1.0 / (alpha * (1.0 - alpha))
        if epsilon > cap:
            raise ConfigError(
                f"epsilon {epsilon!r} outside (0, {cap!r}] for alpha {alpha!r}"
            )
    base = 1.0 - epsilon * alpha * (1.0 - alpha)
    if base <= 0.0:
        return math.inf
    try:
        return base ** (1.0 / (alpha - 1.0))
    except OverflowError:
        return math.inf


def regret_lower_bound(
    alpha: float, epsilon: float, delta: float, frac: float = 1.0
) -> float:
    """Per-step regret floor frac * delta * (1 - 1/r) of the mass-shift adversary.

    ``frac`` is the fraction of the horizon spent sampling from the
    construction; ``delta`` the gap between the two arm means.
    """
    if not delta > 0.0:
        raise ConfigError("delta must be positive")
    if not 0.0 < frac <= 1.0:
        raise ConfigError("frac must be in (0, 1]")
    r = r_from_epsilon(alpha, epsilon)
    return frac * delta * (1.0 - 1.0 / r)


def epsilon_from_z(alpha: float, z: float) -> float:
    """Divergence of the wrong-region restriction when the region holds mass z."""
    if not 0.0 < z <= 1.0:
        raise ConfigError("z must be in (0, 1]")
    if not alpha < 1.0:
        raise ConfigError("the restriction divergence is defined for alpha < 1")
    if abs(alpha) <= KL_WINDOW:
        return math.log(1.0 / z)
    try:
        power = z**alpha
    except OverflowError:
        return math.inf
    if math.isinf(power):
        return math.inf
    return (1.0 - power) / (alpha * (1.0 - alpha))


def lower_bound_curve(
    alphas: Sequence[float] = FIG5_ALPHAS,
    delta: float = 0.1,
    frac: float = 0.5,
    eps_max: float = 8.0,
    n_points: int = 400,
    curve_id: str = "fig5",
) -> list[BoundPoint]:
    """Regret floor as a function of epsilon, one curve per alpha."""
    points = []
    for alpha in alphas:
        hi = eps_max
        if 0.0 < alpha < 1.0:
            hi = min(hi, 1.0 / (alpha * (1.0 - alpha)))
        for i in range(1, n_points + 1):
            eps = hi * i / n_points
            value = regret_lower_bound(alpha, eps, delta, frac)
            points.append(BoundPoint(curve_id, alpha, eps, value))
    return points


def under_threshold_curve(
    alphas_nonpos: Sequence[float] = FIG6_ALPHAS_NONPOS,
    alphas_mid: Sequence[float] = FIG6_ALPHAS_MID,
    z_floor: float = Z_FLOOR,
    n_points: int = 400,
) -> list[BoundPoint]:
    """Restriction divergence as a function of z, split by alpha regime."""
    points = []
    for curve_id, alphas in (("fig6a", alphas_nonpos), ("fig6b", alphas_mid)):
        for alpha in alphas:
            for i in range(n_points + 1):
                z = z_floor + (1.0 - z_floor) * i / n_points
                points.append(BoundPoint(curve_id, alpha, z, epsilon_from_z(alpha, z)))
    return points


def emit_bound_curves(curve: str, **overrides) -> list[BoundPoint]:
    """Named curve tables for the CLI: ``fig5`` or ``fig6``."""
    if curve == "fig5":
        return lower_bound_curve(**overrides)
    if curve == "fig6":
        return under_threshold_curve(**overrides)
    raise ConfigError(f"unknown theory curve {curve!r} (expected fig5 or fig6)")


def bound_points_rows(points: Iterable[BoundPoint]) -> list[tuple]:
    """Rows for the curve_id,alpha,x,value CSV schema."""
    return [(p.curve_id, p.alpha, p.x, p.value) for p in points]
