"""Per-loss optimisation of the BB84 benchmarks and rate-versus-loss curves."""

from .curve import (
    CrossoverReport,
    RateCurve,
    build_curve,
    compare_curves,
    curve_csv_text,
    loss_grid,
    read_curve_csv,
    tolerable_loss,
    write_curve_csv,
)
from .search import CALCULATORS, OptimumPoint, optimize_point, rate_function

__all__ = [
    "CALCULATORS",
    "CrossoverReport",
    "OptimumPoint",
    "RateCurve",
    "build_curve",
    "compare_curves",
    "curve_csv_text",
    "loss_grid",
    "optimize_point",
    "rate_function",
    "read_curve_csv",
    "tolerable_loss",
    "write_curve_csv",
]
