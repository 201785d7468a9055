"""Named parameter sets and user parameter documents."""

import json
import logging
import os
from functools import lru_cache
from typing import Any, Dict, List, Mapping, Optional

from pydantic import ValidationError

from config import get_settings

from .errors import ParameterError
from .params import ProtocolInstance

logger = logging.getLogger("core.presets")

# Keys of a preset entry that describe it rather than parameterise it.
_DESCRIPTIVE_KEYS = ("id", "description", "approximation", "provenance")
_BLOCKS = ("source", "channel", "receiver", "security", "stream")


def default_presets_path() -> str:
    configured = get_settings().presets_path
    if configured:
        return configured
    current_dir = os.path.dirname(os.path.abspath(__file__))
    return os.path.join(current_dir, "presets.json")


@lru_cache(maxsize=8)
def _read_document(path: str) -> Dict[str, Any]:
    try:
        with open(path, "r", encoding="utf-8") as f:
            return json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        logger.error(f"Failed to load presets from {path}: {e}")
        raise ParameterError(f"Cannot read presets document {path}: {e}") from e


def load_presets(path: Optional[str] = None) -> Dict[str, Any]:
    """Return the raw presets document (``settings``, ``presets``, ``repeaters``)."""
    return _read_document(path or default_presets_path())


def list_presets(path: Optional[str] = None) -> List[str]:
    return [entry["id"] for entry in load_presets(path).get("presets", [])]


def _find(entries: List[Dict[str, Any]], entry_id: str, kind: str) -> Dict[str, Any]:
    for entry in entries:
        if entry.get("id") == entry_id:
            return entry
    known = ", ".join(e.get("id", "?") for e in entries)
    raise ParameterError(f"Unknown {kind} '{entry_id}' (known: {known})")


def instance_from_mapping(data: Mapping[str, Any], preset_id: Optional[str] = None) -> ProtocolInstance:
    """Validate a parameter mapping whose keys mirror the model field names."""
    payload = {k: v for k, v in data.items() if k not in _DESCRIPTIVE_KEYS}
    if preset_id is not None:
        payload["preset_id"] = preset_id
    try:
        return ProtocolInstance.model_validate(payload)
    except ValidationError as e:
        raise ParameterError(f"Invalid parameter set{f' {preset_id}' if preset_id else ''}: {e}") from e


def get_preset(preset_id: Optional[str] = None, path: Optional[str] = None) -> ProtocolInstance:
    document = load_presets(path)
    preset_id = preset_id or document.get("settings", {}).get("default_preset", "baseline")
    entry = _find(document.get("presets", []), preset_id, "preset")
    if entry.get("approximation"):
        logger.info(f"Preset '{preset_id}' is an approximation ({entry.get('provenance', 'no provenance')})")
    return instance_from_mapping(entry, preset_id=preset_id)


def get_repeater_block(repeater_id: Optional[str] = None, path: Optional[str] = None) -> Dict[str, Any]:
    document = load_presets(path)
    repeater_id = repeater_id or document.get("settings", {}).get("default_repeater", "memory-node")
    entry = _find(document.get("repeaters", []), repeater_id, "repeater set")
    return {k: v for k, v in entry.items() if k not in _DESCRIPTIVE_KEYS}


def load_parameter_file(path: str) -> ProtocolInstance:
    """Load a user JSON document laid out like a preset entry."""
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise ParameterError(f"Cannot read parameter file {path}: {e}") from e
    return instance_from_mapping(data, preset_id=data.get("id", os.path.basename(path)))


def _resolve_key(payload: Dict[str, Any], key: str) -> List[str]:
    parts = key.split(".")
    if len(parts) > 1:
        return parts
    if key in ProtocolInstance.model_fields:
        return [key]
    owners = [block for block in _BLOCKS if key in _block_fields(block)]
    if len(owners) != 1:
        raise ParameterError(f"Override key '{key}' is {'ambiguous' if owners else 'unknown'}; use block.field")
    return [owners[0], key]


def _block_fields(block: str) -> Dict[str, Any]:
    annotation = ProtocolInstance.model_fields[block].annotation
    return getattr(annotation, "model_fields", {})


def parse_override_value(raw: str) -> Any:
    """Decode ``--param`` values as JSON where possible, else keep the string."""
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        return raw


def apply_overrides(inst: ProtocolInstance, overrides: Mapping[str, Any]) -> ProtocolInstance:
    """Return a re-validated instance with dotted-key overrides applied.

    Only explicitly supplied fields are carried over, so derived values
    (``mu_sps`` from ``mu_tran``, the default epsilons) follow the override.
    """
    if not overrides:
        return inst
    payload = inst.model_dump(exclude_unset=True)
    for key, value in overrides.items():
        path = _resolve_key(payload, key)
        target = payload
        for part in path[:-1]:
            target = target.setdefault(part, {})
            if not isinstance(target, dict):
                raise ParameterError(f"Override key '{key}' does not address a parameter block")
        target[path[-1]] = value
        if path[0] == "source" and path[-1] in ("mu_sps", "eta_tran") and "mu_tran" not in overrides:
            # Re-derive the transmitted mean unless it was overridden too.
            source = payload["source"]
            if "mu_sps" in source or path[-1] == "mu_sps":
                source.pop("mu_tran", None)
    try:
        return ProtocolInstance.model_validate(payload)
    except ValidationError as e:
        raise ParameterError(f"Invalid override {dict(overrides)}: {e}") from e
