"""Source characterisation from time tags: HBT g2(0) and the emitter lifetime."""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from config import get_settings
from core.errors import EstimationError

from .stream import TagStream

logger = logging.getLogger("timetag.statistics")

MIN_COINCIDENCES = 100
MIN_LIFETIME_EVENTS = 1000
MIN_FIT_BINS = 5
# Fit stops at the first bin below this fraction of the peak.
TAIL_FRACTION = 0.02
TAIL_GUARD_NS = 2.0


@dataclass(frozen=True)
class G2Result:
    delay_ns: np.ndarray
    counts: np.ndarray
    peak_offsets: np.ndarray
    peak_areas: np.ndarray
    g2_zero: float
    n_coincidences: int

    @property
    def side_peak_mean(self) -> float:
        return float(self.peak_areas[self.peak_offsets != 0].mean())


def _detector_events(stream: TagStream):
    pulse, _, position = stream.pulse_offsets()
    return pulse, stream.timestamps_ps[position], stream.channels[position]


def g2_histogram(stream: TagStream, bin_ps: int = 100, span_ns: float = 125.0) -> G2Result:
    """
    Start-stop correlation between detector channels 0 and 1.

    Every channel-0 click is paired with every channel-1 click up to P pulses
    away, P = floor(span / period). Peak areas are the pair counts per pulse
    separation, so each peak is integrated over one full period; g2(0) is the
    zero-separation area over the mean of the other 2P areas.

    Args:
        stream: Tag stream recorded in an HBT arrangement
        bin_ps: Histogram bin width in picoseconds
        span_ns: Half-width of the delay histogram

    Returns:
        G2Result with the delay histogram and the g2(0) estimate

    Raises:
        EstimationError: If fewer than 100 coincidences are found or no side peak has counts
        ValueError: If the span is shorter than one trigger period
    """
    period = stream.trigger_period_ps
    span_ps = int(round(span_ns * 1000))
    n_side = span_ps // period
    if n_side < 1:
        raise ValueError(f"span_ns={span_ns} must cover at least one trigger period ({period / 1000} ns)")
    if bin_ps <= 0:
        raise ValueError("bin_ps must be positive")

    pulse, stamps, channels = _detector_events(stream)
    start = channels == 0
    stop = channels == 1
    k_a, t_a = pulse[start], stamps[start]
    k_b, t_b = pulse[stop], stamps[stop]
    if k_a.size == 0 or k_b.size == 0:
        raise EstimationError("g2 needs events on both detector channels")

    lo = np.searchsorted(k_b, k_a - n_side, side="left")
    hi = np.searchsorted(k_b, k_a + n_side, side="right")
    per_start = hi - lo
    n_pairs = int(per_start.sum())
    if n_pairs < MIN_COINCIDENCES:
        raise EstimationError(f"Only {n_pairs} coincidences; at least {MIN_COINCIDENCES} are needed")

    ia = np.repeat(np.arange(k_a.size), per_start)
    group_start = np.repeat(np.cumsum(per_start) - per_start, per_start)
    ib = np.repeat(lo, per_start) + (np.arange(n_pairs) - group_start)
    separation = k_b[ib] - k_a[ia]
    delay = t_b[ib] - t_a[ia]

    offsets = np.arange(-n_side, n_side + 1)
    areas = np.bincount(separation + n_side, minlength=offsets.size)
    side_mean = areas[offsets != 0].mean()
    if side_mean <= 0:
        raise EstimationError("No coincidences at long delays to normalise against")

    edges = np.arange(-span_ps, span_ps + bin_ps, bin_ps)
    counts, _ = np.histogram(delay, bins=edges)
    g2_zero = float(areas[n_side] / side_mean)
    logger.info(f"g2(0) = {g2_zero:.4f} from {n_pairs} coincidences")
    return G2Result(
        delay_ns=(edges[:-1] + bin_ps / 2.0) / 1000.0,
        counts=counts,
        peak_offsets=offsets,
        peak_areas=areas,
        g2_zero=g2_zero,
        n_coincidences=n_pairs,
    )


@dataclass(frozen=True)
class LifetimeFit:
    tau_ns: float
    amplitude: float
    rms_residual: float
    n_events: int
    fit_start_ns: float
    fit_stop_ns: float
    n_bins: int


def fit_lifetime(stream: TagStream, bin_ps: Optional[int] = None) -> LifetimeFit:
    """
    Single-exponential fit to the arrival-offset histogram.

    The fit runs on log-counts from the histogram peak to the first bin below
    2% of the peak, and never past period - 2 ns.

    Raises:
        EstimationError: With fewer than 1000 events, too short a decay, or a
            non-decaying histogram (all-dark streams)
    """
    bin_ps = bin_ps or get_settings().hist_bin_ps
    period = stream.trigger_period_ps
    _, offsets, _ = stream.pulse_offsets()
    if offsets.size < MIN_LIFETIME_EVENTS:
        raise EstimationError(f"{offsets.size} detector events; at least {MIN_LIFETIME_EVENTS} are needed")

    edges = np.arange(0, period + bin_ps, bin_ps)
    edges[-1] = min(edges[-1], period)
    counts, _ = np.histogram(offsets, bins=edges)
    centres_ns = (edges[:-1] + edges[1:]) / 2000.0

    peak = int(np.argmax(counts))
    limit = int(np.searchsorted(centres_ns, period / 1000.0 - TAIL_GUARD_NS, side="right"))
    below = np.flatnonzero(counts[peak:limit] < TAIL_FRACTION * counts[peak])
    stop = peak + int(below[0]) if below.size else limit
    if stop - peak < MIN_FIT_BINS:
        raise EstimationError(f"Decay spans {max(stop - peak, 0)} bins; at least {MIN_FIT_BINS} are needed")

    x = centres_ns[peak:stop]
    y = np.log(counts[peak:stop])
    slope, intercept = np.polyfit(x, y, 1)
    if slope >= 0:
        raise EstimationError("Offset histogram does not decay")
    tau_ns = -1.0 / slope
    if tau_ns > period / 1000.0:
        raise EstimationError(f"Fitted lifetime {tau_ns:.3g} ns exceeds the trigger period")
    residual = y - (slope * x + intercept)
    fit = LifetimeFit(
        tau_ns=float(tau_ns),
        amplitude=float(np.exp(intercept)),
        rms_residual=float(np.sqrt(np.mean(residual ** 2))),
        n_events=int(offsets.size),
        fit_start_ns=float(x[0]),
        fit_stop_ns=float(x[-1]),
        n_bins=int(x.size),
    )
    logger.info(f"Lifetime fit: tau = {fit.tau_ns:.3f} ns over {fit.n_bins} bins")
    return fit
