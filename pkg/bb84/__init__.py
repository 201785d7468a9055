"""BB84 benchmark key rates: finite-key and asymptotic."""

from .asymptotic import AsymptoticResult, asymptotic_rate
from .finite import BB84Counts, BB84KeyResult, expected_counts, finite_rate, key_length_bb84

__all__ = [
    "AsymptoticResult",
    "BB84Counts",
    "BB84KeyResult",
    "asymptotic_rate",
    "expected_counts",
    "finite_rate",
    "key_length_bb84",
]
