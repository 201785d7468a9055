"""Temporal filtering and sifting of B92 time tags.

For every trigger pulse, clicks whose offset falls in the half-open window
[t0, t0 + dt) are kept. A pulse with clicks on one channel only is
conclusive, clicks on both channels make it a discarded double, and no
clicks leave it empty. Channel 0 reads as bit 1, channel 1 as bit 0.
"""

import logging
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from runtime.executor import parallel_map

from .stream import TagStream, alice_bits

logger = logging.getLogger("timetag.sifting")

KeyLengthFn = Callable[["SiftedStats"], float]


class FilterWindow(BaseModel):
    model_config = ConfigDict(frozen=True)

    t0_ns: float = Field(ge=0)
    dt_ns: float = Field(gt=0)

    @property
    def start_ps(self) -> int:
        return int(round(self.t0_ns * 1000))

    @property
    def stop_ps(self) -> int:
        return int(round((self.t0_ns + self.dt_ns) * 1000))

    def check_fits(self, period_ps: int) -> None:
        if self.stop_ps > period_ps:
            raise ValueError(
                f"Window [{self.t0_ns}, {self.t0_ns + self.dt_ns}) ns exceeds the trigger period of {period_ps / 1000} ns"
            )


class SiftedStats(BaseModel):
    model_config = ConfigDict(frozen=True)

    n_received: int = Field(ge=0)
    n_errors: int = Field(ge=0)
    n_double: int = Field(ge=0)
    n_empty: int = Field(ge=0)
    duration_s: float = Field(gt=0)
    sikr_bps: float
    qber: float = Field(ge=0, le=1)

    @classmethod
    def from_counts(cls, n_received: int, n_errors: int, n_double: int, n_pulses: int, duration_s: float) -> "SiftedStats":
        return cls(
            n_received=n_received,
            n_errors=n_errors,
            n_double=n_double,
            n_empty=n_pulses - n_received - n_double,
            duration_s=duration_s,
            sikr_bps=n_received / duration_s,
            qber=n_errors / n_received if n_received else 0.0,
        )


@dataclass(frozen=True)
class PulseEvents:
    """Per-event pulse index, offset, channel bit mask and Alice's bit, precomputed once."""

    pulse: np.ndarray
    offset_ps: np.ndarray
    mask: np.ndarray
    alice: np.ndarray
    n_pulses: int
    duration_s: float
    period_ps: int


def prepare_events(stream: TagStream) -> PulseEvents:
    if stream.n_triggers == 0:
        raise ValueError("Stream has no trigger records; pulses cannot be identified")
    pulse, offset, position = stream.pulse_offsets()
    channels = stream.channels[position]
    return PulseEvents(
        pulse=pulse,
        offset_ps=offset,
        mask=(np.uint8(1) << channels).astype(np.uint8),
        alice=alice_bits(pulse, stream.random_bits_seed),
        n_pulses=stream.n_triggers,
        duration_s=stream.duration_s,
        period_ps=stream.trigger_period_ps,
    )


def _count_window(events: PulseEvents, start_ps: int, stop_ps: int) -> Tuple[int, int, int]:
    keep = (events.offset_ps >= start_ps) & (events.offset_ps < stop_ps)
    pulse = events.pulse[keep]
    if pulse.size == 0:
        return 0, 0, 0
    first = np.flatnonzero(np.concatenate(([True], pulse[1:] != pulse[:-1])))
    masks = np.bitwise_or.reduceat(events.mask[keep], first)
    conclusive = masks != 3
    bob = (masks == 1).astype(np.uint8)
    errors = conclusive & (bob != events.alice[keep][first])
    n_double = int(masks.size - np.count_nonzero(conclusive))
    return int(np.count_nonzero(conclusive)), int(np.count_nonzero(errors)), n_double


def sift(stream: TagStream, window: FilterWindow, events: Optional[PulseEvents] = None) -> SiftedStats:
    """
    Sift one temporal window.

    Raises:
        ValueError: If the stream has no triggers or the window overruns the period
    """
    events = events or prepare_events(stream)
    window.check_fits(events.period_ps)
    received, errors, double = _count_window(events, window.start_ps, window.stop_ps)
    if received == 0:
        logger.warning(f"No conclusive events in window t0={window.t0_ns} ns, dt={window.dt_ns} ns")
    return SiftedStats.from_counts(received, errors, double, events.n_pulses, events.duration_s)


def grid_values(start: float, stop: float, step: float) -> np.ndarray:
    """Inclusive grid start, start+step, ..., stop (in ns), snapped to whole picoseconds."""
    if step <= 0 or stop < start:
        raise ValueError(f"Malformed grid ({start}, {stop}, {step})")
    n = int(round((stop - start) / step)) + 1
    return np.round(start + step * np.arange(n), 3)


@dataclass(frozen=True)
class FilterSweepResult:
    t0_grid: np.ndarray
    dt_grid: np.ndarray
    sikr_map: np.ndarray
    qber_map: np.ndarray
    skr_map: np.ndarray
    received_map: np.ndarray
    errors_map: np.ndarray
    double_map: np.ndarray
    n_pulses: int
    duration_s: float

    @property
    def empty_map(self) -> np.ndarray:
        return self.n_pulses - self.received_map - self.double_map

    def cell(self, i: int, j: int) -> SiftedStats:
        return SiftedStats.from_counts(
            int(self.received_map[i, j]),
            int(self.errors_map[i, j]),
            int(self.double_map[i, j]),
            self.n_pulses,
            self.duration_s,
        )

    def argmax(self) -> Tuple[int, int]:
        """Index of the best SKR cell; ties resolve to the lowest (t0, dt)."""
        flat = int(np.argmax(self.skr_map))
        i, j = np.unravel_index(flat, self.skr_map.shape)
        return int(i), int(j)

    def best_window(self) -> FilterWindow:
        i, j = self.argmax()
        return FilterWindow(t0_ns=float(self.t0_grid[i]), dt_ns=float(self.dt_grid[j]))

    def with_skr(self, keylen_fn: KeyLengthFn) -> "FilterSweepResult":
        skr = np.zeros_like(self.sikr_map)
        for i in range(self.t0_grid.size):
            for j in range(self.dt_grid.size):
                skr[i, j] = max(0.0, keylen_fn(self.cell(i, j)))
        return FilterSweepResult(
            t0_grid=self.t0_grid,
            dt_grid=self.dt_grid,
            sikr_map=self.sikr_map,
            qber_map=self.qber_map,
            skr_map=skr,
            received_map=self.received_map,
            errors_map=self.errors_map,
            double_map=self.double_map,
            n_pulses=self.n_pulses,
            duration_s=self.duration_s,
        )


def _sweep_row(events: PulseEvents, start_ps: int, widths_ps: Sequence[int]) -> np.ndarray:
    return np.array([_count_window(events, start_ps, start_ps + w) for w in widths_ps], dtype=np.int64)


def sweep_filters(
    stream: TagStream,
    t0_range: Tuple[float, float, float] = (0.0, 4.0, 0.1),
    dt_range: Tuple[float, float, float] = (3.0, 12.0, 0.1),
    keylen_fn: Optional[KeyLengthFn] = None,
    max_workers: Optional[int] = None,
) -> FilterSweepResult:
    """
    Sift every (t0, dt) cell of the grid.

    Rows are evaluated in parallel threads; the result equals a sequential
    evaluation. ``keylen_fn`` maps a cell's SiftedStats to a secure key rate
    in bit/s; without it the SKR map stays zero.
    """
    events = prepare_events(stream)
    t0_grid = grid_values(*t0_range)
    dt_grid = grid_values(*dt_range)
    starts = [int(round(t * 1000)) for t in t0_grid]
    widths = [int(round(d * 1000)) for d in dt_grid]
    if starts[-1] + widths[-1] > events.period_ps:
        raise ValueError("Sweep grid reaches beyond the trigger period")

    rows = parallel_map(lambda s: _sweep_row(events, s, widths), starts, kind="thread", max_workers=max_workers)
    counts = np.stack(rows)
    received, errors, double = counts[..., 0], counts[..., 1], counts[..., 2]
    with np.errstate(divide="ignore", invalid="ignore"):
        qber = np.where(received > 0, errors / np.maximum(received, 1), 0.0)
    result = FilterSweepResult(
        t0_grid=t0_grid,
        dt_grid=dt_grid,
        sikr_map=received / events.duration_s,
        qber_map=qber,
        skr_map=np.zeros(received.shape),
        received_map=received,
        errors_map=errors,
        double_map=double,
        n_pulses=events.n_pulses,
        duration_s=events.duration_s,
    )
    logger.info(f"Swept {t0_grid.size}x{dt_grid.size} filter cells over {events.n_pulses} pulses")
    if keylen_fn is not None:
        result = result.with_skr(keylen_fn)
    return result
