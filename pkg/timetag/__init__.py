"""Synthetic time-tag generation, tag file I/O, sifting and source statistics."""

from .generator import generate_stream
from .sifting import FilterSweepResult, FilterWindow, PulseEvents, SiftedStats, grid_values, prepare_events, sift, sweep_filters
from .statistics import G2Result, LifetimeFit, fit_lifetime, g2_histogram
from .stream import RECORD_DTYPE, TRIGGER_CHANNEL, TagStream, alice_bits, bit_to_channel
from .tagio import detect_format, read_csv, read_qtt1, read_tags, write_csv, write_qtt1, write_tags

__all__ = [
    "FilterSweepResult",
    "FilterWindow",
    "G2Result",
    "LifetimeFit",
    "PulseEvents",
    "RECORD_DTYPE",
    "SiftedStats",
    "TRIGGER_CHANNEL",
    "TagStream",
    "alice_bits",
    "bit_to_channel",
    "detect_format",
    "fit_lifetime",
    "g2_histogram",
    "generate_stream",
    "grid_values",
    "prepare_events",
    "read_csv",
    "read_qtt1",
    "read_tags",
    "sift",
    "sweep_filters",
    "write_csv",
    "write_qtt1",
    "write_tags",
]
