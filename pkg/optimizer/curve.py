"""Rate-versus-loss curves, their CSV form and curve comparison."""

import csv
import io
import logging
import math
from functools import partial
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from bb84.finite import ErrorModel, LeakModel
from core.params import ProtocolInstance
from runtime.executor import parallel_map

from .search import OptimumPoint, optimize_point

logger = logging.getLogger("optimizer.curve")

CURVE_COLUMNS = ("loss_db", "distance_km", "rate_per_pulse", "rate_bps", "p_x_opt", "eta_tr_opt", "feasible")
REPEATER_COLUMN = "frac_to_alice"
DEFAULT_LOSS_RANGE = (0.0, 35.0, 0.5)


class RateCurve(BaseModel):
    """Optimised key rate on a loss grid; choices are None where no key is possible."""

    model_config = ConfigDict(frozen=True)

    calculator: str
    preset: Optional[str] = None
    t_s: Optional[float] = None
    db_per_km: float = 0.2
    loss_db: List[float]
    rate_per_pulse: List[float]
    rate_bps: List[float]
    p_x_opt: List[Optional[float]]
    eta_tr_opt: List[Optional[float]]
    feasible: List[bool]
    frac_to_alice: Optional[List[Optional[float]]] = None
    meta: Dict[str, Any] = Field(default_factory=dict)

    @model_validator(mode="after")
    def _aligned(self) -> "RateCurve":
        n = len(self.loss_db)
        columns = [self.rate_per_pulse, self.rate_bps, self.p_x_opt, self.eta_tr_opt, self.feasible]
        if self.frac_to_alice is not None:
            columns.append(self.frac_to_alice)
        if any(len(c) != n for c in columns):
            raise ValueError("Curve columns must all match the loss grid")
        if any(r < 0 for r in self.rate_per_pulse) or any(r < 0 for r in self.rate_bps):
            raise ValueError("Rates must be non-negative")
        if any(b <= a for a, b in zip(self.loss_db, self.loss_db[1:])):
            raise ValueError("Loss grid must be strictly increasing")
        return self

    @property
    def distance_km(self) -> List[float]:
        return [loss / self.db_per_km for loss in self.loss_db]

    @classmethod
    def from_points(cls, calculator: str, points: Sequence[OptimumPoint], **fields: Any) -> "RateCurve":
        return cls(
            calculator=calculator,
            loss_db=[p.loss_db for p in points],
            rate_per_pulse=[p.rate_per_pulse for p in points],
            rate_bps=[p.rate_bps for p in points],
            p_x_opt=[p.p_x for p in points],
            eta_tr_opt=[p.eta_pre for p in points],
            feasible=[p.feasible for p in points],
            **fields,
        )


def loss_grid(start: float, stop: float, step: float) -> List[float]:
    """Inclusive loss grid in dB."""
    if step <= 0 or stop < start or start < 0:
        raise ValueError(f"Malformed loss range ({start}, {stop}, {step})")
    n = int(round((stop - start) / step)) + 1
    return [float(x) for x in np.round(start + step * np.arange(n), 6)]


def _curve_point(calculator: str, inst: ProtocolInstance, error_model: ErrorModel, leak_model: LeakModel, loss_db: float) -> OptimumPoint:
    return optimize_point(calculator, inst, loss_db, error_model=error_model, leak_model=leak_model)


def build_curve(
    calculator: str,
    inst: ProtocolInstance,
    loss_range: Tuple[float, float, float] = DEFAULT_LOSS_RANGE,
    t_s: Optional[float] = None,
    error_model: ErrorModel = "qber",
    leak_model: LeakModel = "efficiency",
    max_workers: Optional[int] = None,
) -> RateCurve:
    """
    Optimise every loss point of the range; per-second rate is the per-pulse rate times R.

    Points are evaluated in worker processes and collected in grid order.
    """
    if t_s is not None:
        inst = inst.model_copy(update={"t_s": t_s})
    losses = loss_grid(*loss_range)
    worker = partial(_curve_point, calculator, inst, error_model, leak_model)
    points = parallel_map(worker, losses, kind="process", max_workers=max_workers)
    curve = RateCurve.from_points(
        calculator,
        points,
        preset=inst.preset_id,
        t_s=inst.t_s if calculator == "bb84-finite" else None,
        db_per_km=inst.channel.db_per_km,
        meta={"error_model": error_model, "leak_model": leak_model} if calculator == "bb84-finite" else {},
    )
    logger.info(f"Built {calculator} curve for {inst.preset_id or 'custom'}: tolerable loss {tolerable_loss(curve)} dB")
    return curve


def tolerable_loss(curve: RateCurve) -> Optional[float]:
    """Largest grid loss with a positive rate, or None when the curve is zero everywhere."""
    positive = [loss for loss, rate in zip(curve.loss_db, curve.rate_bps) if rate > 0]
    return max(positive) if positive else None


def _fmt(value: Optional[float]) -> str:
    return "" if value is None else repr(float(value))


def curve_csv_text(curve: RateCurve) -> str:
    columns = list(CURVE_COLUMNS) + ([REPEATER_COLUMN] if curve.frac_to_alice is not None else [])
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(columns)
    for i, loss in enumerate(curve.loss_db):
        row = [
            _fmt(loss),
            _fmt(curve.distance_km[i]),
            _fmt(curve.rate_per_pulse[i]),
            _fmt(curve.rate_bps[i]),
            _fmt(curve.p_x_opt[i]),
            _fmt(curve.eta_tr_opt[i]),
            "1" if curve.feasible[i] else "0",
        ]
        if curve.frac_to_alice is not None:
            row.append(_fmt(curve.frac_to_alice[i]))
        writer.writerow(row)
    return buffer.getvalue()


def write_curve_csv(curve: RateCurve, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(curve_csv_text(curve))
    logger.info(f"Wrote {len(curve.loss_db)} curve points to {path}")


def read_curve_csv(path: str, calculator: str = "file") -> RateCurve:
    """Read a curve written by :func:`write_curve_csv`."""
    with open(path, "r", encoding="utf-8", newline="") as f:
        rows = list(csv.DictReader(f))
    if rows and any(column not in rows[0] for column in CURVE_COLUMNS):
        raise ValueError(f"{path} is not a rate curve (expected columns {', '.join(CURVE_COLUMNS)})")

    def optional(text: str) -> Optional[float]:
        return float(text) if text not in ("", None) else None

    has_placement = bool(rows) and REPEATER_COLUMN in rows[0]
    return RateCurve(
        calculator=calculator,
        loss_db=[float(r["loss_db"]) for r in rows],
        rate_per_pulse=[float(r["rate_per_pulse"]) for r in rows],
        rate_bps=[float(r["rate_bps"]) for r in rows],
        p_x_opt=[optional(r["p_x_opt"]) for r in rows],
        eta_tr_opt=[optional(r["eta_tr_opt"]) for r in rows],
        feasible=[r["feasible"] == "1" for r in rows],
        frac_to_alice=[optional(r[REPEATER_COLUMN]) for r in rows] if has_placement else None,
        meta={"source_path": path},
    )


class CrossoverReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    found: bool
    crossover_db: Optional[float] = None
    crossover_grid_db: Optional[float] = None
    max_loss_a_db: Optional[float] = None
    max_loss_b_db: Optional[float] = None
    rate_ratio: Dict[str, Optional[float]] = Field(default_factory=dict)


def compare_curves(a: RateCurve, b: RateCurve, sample_step_db: float = 5.0) -> CrossoverReport:
    """
    Smallest loss where curve ``a`` delivers more key per second than ``b``.

    Between two grid points with positive rates on both curves the crossing is
    interpolated on the log-rate difference.

    Raises:
        ValueError: If the curves do not share the same loss grid
    """
    if len(a.loss_db) != len(b.loss_db) or not np.allclose(a.loss_db, b.loss_db, rtol=0, atol=1e-9):
        raise ValueError("Curves must be evaluated on the same loss grid")
    ra, rb = np.asarray(a.rate_bps), np.asarray(b.rate_bps)
    ahead = np.flatnonzero(ra > rb)

    crossover = grid = None
    if ahead.size:
        i = int(ahead[0])
        grid = crossover = a.loss_db[i]
        if i > 0 and min(ra[i - 1], rb[i - 1], ra[i], rb[i]) > 0:
            before = math.log(ra[i - 1] / rb[i - 1])
            after = math.log(ra[i] / rb[i])
            step = a.loss_db[i] - a.loss_db[i - 1]
            crossover = a.loss_db[i - 1] + step * before / (before - after)

    ratios: Dict[str, Optional[float]] = {}
    for loss, x, y in zip(a.loss_db, ra, rb):
        if abs(loss / sample_step_db - round(loss / sample_step_db)) < 1e-9:
            ratios[f"{loss:g}"] = float(x / y) if y > 0 else None
    return CrossoverReport(
        found=crossover is not None,
        crossover_db=crossover,
        crossover_grid_db=grid,
        max_loss_a_db=tolerable_loss(a),
        max_loss_b_db=tolerable_loss(b),
        rate_ratio=ratios,
    )
