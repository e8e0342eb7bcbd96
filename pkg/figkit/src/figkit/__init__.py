"""Offline figure rendering for banditlab CSV outputs."""

__version__ = "0.1.0"

from .render import FigureSpec, FigureError, read_curves_csv, read_theory_csv, render

__all__ = [
    "FigureError",
    "FigureSpec",
    "read_curves_csv",
    "read_theory_csv",
    "render",
]
