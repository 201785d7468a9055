"""Node placement, repeater curves and their comparison with point-to-point links."""

import logging
import math
from dataclasses import dataclass
from functools import partial
from typing import List, Optional, Sequence, Tuple

import numpy as np
import scipy.optimize

from config import get_settings
from optimizer.curve import DEFAULT_LOSS_RANGE, CrossoverReport, RateCurve, compare_curves, loss_grid
from optimizer.search import OptimumPoint
from runtime.executor import parallel_map

from .model import NodePlacement, RepeaterParams, RepeaterRate, direct_rate, ma_qkd_rate

logger = logging.getLogger("repeater.placement")

# Point-to-point rates fall by a decade every 10 dB.
DIRECT_SLOPE = -0.1
TRANSITION_RATIO = 0.75


def optimize_placement(params: RepeaterParams, total_loss_db: float) -> Tuple[NodePlacement, RepeaterRate]:
    """
    Maximise the per-use rate over the node position.

    A uniform pre-scan picks the best grid point, then a bounded scalar
    search refines it between the neighbouring grid points; whichever of the
    two is better is returned.
    """
    settings = get_settings()
    grid = np.linspace(0.0, 1.0, settings.placement_grid)

    def rate_at(frac: float) -> float:
        return ma_qkd_rate(params, total_loss_db, NodePlacement(frac_to_alice=frac)).rate_per_use

    values = np.array([rate_at(float(x)) for x in grid])
    i = int(np.argmax(values))
    best_frac, best = float(grid[i]), float(values[i])
    if best > 0.0:
        lo, hi = float(grid[max(i - 1, 0)]), float(grid[min(i + 1, grid.size - 1)])
        res = scipy.optimize.minimize_scalar(
            lambda x: -rate_at(float(x)), bounds=(lo, hi), method="bounded", options={"xatol": settings.placement_tol}
        )
        if -res.fun > best:
            best_frac = float(res.x)
    placement = NodePlacement(frac_to_alice=min(max(best_frac, 0.0), 1.0))
    return placement, ma_qkd_rate(params, total_loss_db, placement)


def _repeater_point(params: RepeaterParams, optimise: bool, loss_db: float) -> Tuple[OptimumPoint, float]:
    if optimise:
        placement, rate = optimize_placement(params, loss_db)
    else:
        placement = NodePlacement()
        rate = ma_qkd_rate(params, loss_db, placement)
    point = OptimumPoint(
        loss_db=loss_db,
        rate_per_pulse=rate.rate_per_use,
        rate_bps=rate.rate_per_second,
        feasible=rate.rate_per_use > 0,
    )
    return point, placement.frac_to_alice


def build_repeater_curve(
    params: RepeaterParams,
    losses: Optional[Sequence[float]] = None,
    optimise: bool = True,
    max_workers: Optional[int] = None,
) -> RateCurve:
    """Repeater rate per use and per second on a loss grid, with optimised (or midpoint) placement."""
    losses = list(losses) if losses is not None else loss_grid(*DEFAULT_LOSS_RANGE)
    results = parallel_map(partial(_repeater_point, params, optimise), losses, kind="process", max_workers=max_workers)
    curve = RateCurve.from_points(
        "repeater",
        [point for point, _ in results],
        frac_to_alice=[frac if point.feasible else None for point, frac in results],
        meta={"t2_s": params.t2_s, "optimised_placement": optimise},
    )
    logger.info(f"Built repeater curve (T2={params.t2_s} s) over {len(losses)} losses")
    return curve


def direct_curve(params: RepeaterParams, losses: Optional[Sequence[float]] = None) -> RateCurve:
    """Point-to-point rate of the same hardware without the memory node."""
    losses = list(losses) if losses is not None else loss_grid(*DEFAULT_LOSS_RANGE)
    points = []
    for loss in losses:
        rate = direct_rate(params, loss)
        points.append(
            OptimumPoint(loss_db=loss, rate_per_pulse=rate.rate_per_use, rate_bps=rate.rate_per_second, feasible=rate.rate_per_use > 0)
        )
    return RateCurve.from_points("direct", points, meta={"t2_s": params.t2_s})


def log_slope(losses: Sequence[float], rates: Sequence[float]) -> np.ndarray:
    """Central-difference slope of log10(rate) against loss; NaN where a rate is zero."""
    x = np.asarray(losses, dtype=float)
    r = np.asarray(rates, dtype=float)
    with np.errstate(divide="ignore"):
        y = np.where(r > 0, np.log10(np.where(r > 0, r, 1.0)), np.nan)
    return np.gradient(y, x)


def scaling_transition(params: RepeaterParams, losses: Optional[Sequence[float]] = None) -> Optional[float]:
    """
    Smallest loss where the optimised repeater curve falls at least 0.75 times
    as steeply as point-to-point transmission.

    Returns:
        The loss in dB, or None when the curve keeps the square-root scaling
    """
    losses = list(losses) if losses is not None else loss_grid(0.0, 40.0, 0.5)
    rates = [optimize_placement(params, loss)[1].rate_per_use for loss in losses]
    ratio = log_slope(losses, rates) / DIRECT_SLOPE
    hits = np.flatnonzero(ratio >= TRANSITION_RATIO)
    if not hits.size:
        return None
    return float(losses[int(hits[0])])


def max_tolerable_loss(params: RepeaterParams, upper_db: float = 120.0, tol_db: float = 1e-3) -> Optional[float]:
    """Largest loss with a positive optimised rate, located by bisection."""
    def positive(loss: float) -> bool:
        return optimize_placement(params, loss)[1].rate_per_use > 0

    if not positive(0.0):
        return None
    if positive(upper_db):
        return upper_db
    lo, hi = 0.0, upper_db
    while hi - lo > tol_db:
        mid = 0.5 * (lo + hi)
        if positive(mid):
            lo = mid
        else:
            hi = mid
    return lo


def crossover_with(curve: RateCurve, params: RepeaterParams, max_workers: Optional[int] = None) -> CrossoverReport:
    """Where the repeater starts to beat ``curve``, and where each stops producing key."""
    repeater = build_repeater_curve(params, curve.loss_db, max_workers=max_workers)
    report = compare_curves(repeater, curve)
    if not report.found:
        logger.info("Repeater never overtakes the reference curve on this grid")
    return report


@dataclass(frozen=True)
class T2Map:
    loss_db: np.ndarray
    t2_s: np.ndarray
    rate_bps: np.ndarray
    max_loss_db: List[Optional[float]]
    crossover_db: List[Optional[float]]


def t2_map(
    params: RepeaterParams,
    losses: Sequence[float],
    t2_values: Sequence[float],
    reference: Optional[RateCurve] = None,
    max_workers: Optional[int] = None,
) -> T2Map:
    """Optimised repeater rate over (T2, loss), with per-T2 thresholds.

    ``crossover_db`` is filled when a point-to-point ``reference`` curve on
    the same loss grid is given.
    """
    rows = []
    max_loss: List[Optional[float]] = []
    crossovers: List[Optional[float]] = []
    for t2 in t2_values:
        curve = build_repeater_curve(params.with_t2(t2), losses, max_workers=max_workers)
        rows.append(curve.rate_bps)
        positive = [loss for loss, rate in zip(curve.loss_db, curve.rate_bps) if rate > 0]
        max_loss.append(max(positive) if positive else None)
        crossovers.append(compare_curves(curve, reference).crossover_db if reference is not None else None)
    return T2Map(
        loss_db=np.asarray(losses, dtype=float),
        t2_s=np.asarray(t2_values, dtype=float),
        rate_bps=np.asarray(rows, dtype=float),
        max_loss_db=max_loss,
        crossover_db=crossovers,
    )


def parse_duration(text: str) -> float:
    """Seconds from ``10ms``, ``5e-3``, ``2s``, ``100us`` or ``inf``."""
    value = text.strip().lower()
    if value in ("inf", "infinite", "infinity"):
        return math.inf
    for suffix, scale in (("ms", 1e-3), ("us", 1e-6), ("ns", 1e-9), ("s", 1.0)):
        if value.endswith(suffix):
            return float(value[: -len(suffix)]) * scale
    return float(value)
