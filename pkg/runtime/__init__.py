"""Execution plumbing: ordered parallel maps and run manifests."""

from .executor import parallel_map, worker_cap
from .manifest import RunManifest, hash_inputs, read_manifest, write_manifest

__all__ = ["RunManifest", "hash_inputs", "parallel_map", "read_manifest", "worker_cap", "write_manifest"]
