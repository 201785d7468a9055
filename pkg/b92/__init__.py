"""B92 finite-key analysis."""

from .finite import B92Input, B92KeyResult, b92_keylen_fn, key_length_b92, leak_ec, skr_map_from_sweep

__all__ = ["B92Input", "B92KeyResult", "b92_keylen_fn", "key_length_b92", "leak_ec", "skr_map_from_sweep"]
