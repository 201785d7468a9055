"""
Per-loss optimisation of the basis bias p_x and the pre-attenuation eta_pre.

Coordinate descent: each axis is scanned on a grid (log-spaced for eta_pre,
dense near p_x = 1 for the bias) and the best grid point is refined with a
bounded scalar minimiser. Descent starts from eta_pre = 1, 0.1 and 0.01 and
the best end point wins.
"""

import logging
from typing import Callable, Literal, Optional, Tuple

import numpy as np
import scipy.optimize
from pydantic import BaseModel, ConfigDict

from bb84.asymptotic import asymptotic_rate
from bb84.finite import ErrorModel, LeakModel, finite_rate
from config import get_settings
from core.errors import ParameterError
from core.params import ProtocolInstance

logger = logging.getLogger("optimizer.search")

Calculator = Literal["bb84-finite", "bb84-asymptotic", "bb84-prelimit"]
CALCULATORS: Tuple[str, ...] = ("bb84-finite", "bb84-asymptotic", "bb84-prelimit")

ETA_STARTS = (1.0, 0.1, 0.01)
LOG_ETA_MIN = -4.0
P_Z_MIN = 1e-3
MAX_ROUNDS = 25


class OptimumPoint(BaseModel):
    model_config = ConfigDict(frozen=True)

    loss_db: float
    rate_per_pulse: float
    rate_bps: float
    p_x: Optional[float] = None
    eta_pre: Optional[float] = None
    feasible: bool


def rate_function(
    calculator: str,
    inst: ProtocolInstance,
    error_model: ErrorModel = "qber",
    leak_model: LeakModel = "efficiency",
) -> Callable[[float, float], float]:
    """Per-pulse rate of ``inst`` as a function of (p_x, eta_pre)."""
    if calculator not in CALCULATORS:
        raise ParameterError(f"Unknown calculator '{calculator}' (choose from {', '.join(CALCULATORS)})")

    def rate(p_x: float, eta_pre: float) -> float:
        point = inst.with_choices(p_x=p_x, eta_pre=min(eta_pre, 1.0))
        try:
            if calculator == "bb84-finite":
                return finite_rate(point, error_model=error_model, leak_model=leak_model).rate_per_pulse
            return asymptotic_rate(point, pre_limit=calculator == "bb84-prelimit").rate_per_pulse
        except ParameterError:
            return 0.0

    return rate


def _axis_maximum(f: Callable[[float], float], grid: np.ndarray, rel_tol: float) -> Tuple[float, float]:
    values = np.array([f(float(x)) for x in grid])
    i = int(np.argmax(values))
    best_x, best = float(grid[i]), float(values[i])
    if best <= 0.0:
        return best_x, best
    lo, hi = float(grid[max(i - 1, 0)]), float(grid[min(i + 1, grid.size - 1)])
    res = scipy.optimize.minimize_scalar(
        lambda x: -f(x),
        bounds=(lo, hi),
        method="bounded",
        options={"xatol": max((hi - lo) * rel_tol, 1e-12)},
    )
    if -res.fun > best:
        best_x, best = float(res.x), float(-res.fun)
    return best_x, best


def _descend(rate: Callable[[float, float], float], p_x: float, eta: float, optimise_p: bool,
             eta_axis: np.ndarray, p_axis: np.ndarray, rel_tol: float) -> Tuple[float, float, float]:
    best = rate(p_x, eta)
    for _ in range(MAX_ROUNDS):
        previous = best
        log_eta, value = _axis_maximum(lambda u: rate(p_x, 10.0 ** u), eta_axis, rel_tol)
        if value > best:
            eta, best = min(10.0 ** log_eta, 1.0), value
        if optimise_p:
            px, value = _axis_maximum(lambda x: rate(x, eta), p_axis, rel_tol)
            if value > best:
                p_x, best = px, value
        if best <= 0.0 or best - previous <= rel_tol * best:
            break
    return best, p_x, eta


def optimize_point(
    calculator: str,
    inst: ProtocolInstance,
    loss_db: float,
    error_model: ErrorModel = "qber",
    leak_model: LeakModel = "efficiency",
    scan_points: Optional[int] = None,
) -> OptimumPoint:
    """
    Maximise the per-pulse rate over (p_x, eta_pre) at one channel loss.

    The asymptotic calculator keeps p_x = 1; the finite and pre-limit ones
    optimise both. Deterministic for identical inputs.

    Args:
        calculator: ``bb84-finite``, ``bb84-asymptotic`` or ``bb84-prelimit``
        inst: Protocol instance; its loss is replaced by ``loss_db``
        loss_db: Channel loss
        error_model: Error-count model of the finite calculator
        leak_model: Reconciliation leak of the finite calculator
        scan_points: Grid points per axis (settings default, at least 50)

    Returns:
        The optimum; ``feasible`` is False and the choices are None when no
        positive rate exists
    """
    settings = get_settings()
    n = scan_points or settings.scan_points
    rel_tol = settings.rel_tol
    rate = rate_function(calculator, inst.with_loss(loss_db), error_model, leak_model)
    optimise_p = calculator != "bb84-asymptotic"

    eta_axis = np.linspace(LOG_ETA_MIN, 0.0, n)
    p_axis = np.sort(1.0 - np.logspace(np.log10(1.0 - P_Z_MIN), np.log10(P_Z_MIN), n))
    p_start = 0.5 if optimise_p else 1.0

    best = (0.0, p_start, 1.0)
    for eta0 in ETA_STARTS:
        found = _descend(rate, p_start, eta0, optimise_p, eta_axis, p_axis, rel_tol)
        if found[0] > best[0]:
            best = found
    value, p_x, eta = best
    clock = inst.source.clock_rate_hz
    if value <= 0.0:
        logger.debug(f"No positive {calculator} rate at {loss_db} dB")
        return OptimumPoint(loss_db=loss_db, rate_per_pulse=0.0, rate_bps=0.0, feasible=False)
    return OptimumPoint(
        loss_db=loss_db,
        rate_per_pulse=value,
        rate_bps=value * clock,
        p_x=p_x,
        eta_pre=eta,
        feasible=True,
    )
