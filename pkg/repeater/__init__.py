"""Single-node memory-assisted QKD: key rate, node placement and comparison with direct links."""

from .model import NodePlacement, RepeaterParams, RepeaterRate, direct_rate, ma_qkd_rate, segment_success
from .placement import (
    T2Map,
    build_repeater_curve,
    crossover_with,
    direct_curve,
    max_tolerable_loss,
    optimize_placement,
    parse_duration,
    scaling_transition,
    t2_map,
)

__all__ = [
    "NodePlacement",
    "RepeaterParams",
    "RepeaterRate",
    "T2Map",
    "build_repeater_curve",
    "crossover_with",
    "direct_curve",
    "direct_rate",
    "ma_qkd_rate",
    "max_tolerable_loss",
    "optimize_placement",
    "parse_duration",
    "scaling_transition",
    "segment_success",
    "t2_map",
]
