"""Physical and security parameters plus the elementary detection probabilities."""

from .errors import EstimationError, InfeasibleError, ParameterError, QkdLabError, TagFormatError
from .params import (
    ChannelParams,
    ProtocolInstance,
    ReceiverParams,
    SecurityParams,
    SourceParams,
    StreamModel,
)
from .presets import apply_overrides, get_preset, get_repeater_block, list_presets, load_parameter_file, load_presets
from .probabilities import (
    detected_mean,
    distance_to_loss,
    expected_qber,
    loss_to_distance,
    loss_to_transmittance,
    p_click,
    p_error_bb84,
    p_multiphoton,
    p_vacuum,
    total_transmittance,
    transmittance_to_loss,
)

__all__ = [
    "ChannelParams",
    "EstimationError",
    "InfeasibleError",
    "ParameterError",
    "ProtocolInstance",
    "QkdLabError",
    "ReceiverParams",
    "SecurityParams",
    "SourceParams",
    "StreamModel",
    "TagFormatError",
    "apply_overrides",
    "detected_mean",
    "distance_to_loss",
    "expected_qber",
    "get_preset",
    "get_repeater_block",
    "list_presets",
    "load_parameter_file",
    "load_presets",
    "loss_to_distance",
    "loss_to_transmittance",
    "p_click",
    "p_error_bb84",
    "p_multiphoton",
    "p_vacuum",
    "total_transmittance",
    "transmittance_to_loss",
]
