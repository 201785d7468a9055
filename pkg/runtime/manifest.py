"""Run manifests written next to every CLI output file.

A manifest records what produced an output: the command, the preset and its
overrides, the seed, a hash of the inputs and the tool version. It carries
no timestamps, so rerunning the same command writes the same bytes.
"""

import hashlib
import json
import logging
from typing import Any, Dict, Iterable, List, Optional

from pydantic import BaseModel, Field

from config import get_settings

logger = logging.getLogger("runtime.manifest")

MANIFEST_SUFFIX = ".manifest.json"


class RunManifest(BaseModel):
    command: str
    preset: Optional[str] = None
    overrides: Dict[str, Any] = Field(default_factory=dict)
    seed: Optional[int] = None
    parameters: Dict[str, Any] = Field(default_factory=dict)
    inputs: List[str] = Field(default_factory=list)
    outputs: List[str] = Field(default_factory=list)
    input_hash: str = ""
    tool_version: str = Field(default_factory=lambda: get_settings().app_version)


def canonical_json(data: Any) -> str:
    return json.dumps(data, sort_keys=True, separators=(",", ":"), default=str)


def hash_inputs(paths: Iterable[str] = (), extra: Optional[Dict[str, Any]] = None) -> str:
    """SHA-256 over the input files' bytes followed by the canonical JSON of ``extra``."""
    digest = hashlib.sha256()
    for path in paths:
        with open(path, "rb") as f:
            for block in iter(lambda: f.read(1 << 20), b""):
                digest.update(block)
    digest.update(canonical_json(extra or {}).encode("utf-8"))
    return digest.hexdigest()


def manifest_path(out_path: str) -> str:
    return f"{out_path}{MANIFEST_SUFFIX}"


def write_manifest(out_path: str, manifest: RunManifest) -> str:
    """Write ``<out_path>.manifest.json`` and return its path."""
    path = manifest_path(out_path)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(manifest.model_dump(mode="json"), f, indent=2, sort_keys=True)
        f.write("\n")
    logger.debug(f"Wrote manifest {path}")
    return path


def read_manifest(out_path: str) -> RunManifest:
    with open(manifest_path(out_path), "r", encoding="utf-8") as f:
        return RunManifest.model_validate(json.load(f))
