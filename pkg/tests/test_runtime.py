import time

from config import get_settings
from runtime.executor import parallel_map, worker_cap
from runtime.manifest import RunManifest, canonical_json, hash_inputs, manifest_path, read_manifest, write_manifest


def _slow_square(x: int) -> int:
    time.sleep(0.001 * (5 - x % 5))
    return x * x


def test_parallel_map_keeps_input_order() -> None:
    items = list(range(20))
    assert parallel_map(_slow_square, items, kind="thread", max_workers=4) == [x * x for x in items]
    assert parallel_map(_slow_square, items) == [x * x for x in items]
    assert parallel_map(_slow_square, []) == []


def test_worker_cap(monkeypatch) -> None:
    assert worker_cap(3) == 3
    assert worker_cap(0) == 1
    assert worker_cap() == 1
    monkeypatch.setenv("QKDLAB_THREADS", "6")
    get_settings.cache_clear()
    assert worker_cap() == 6


def test_manifest_round_trip(tmp_path) -> None:
    out = str(tmp_path / "curve.csv")
    manifest = RunManifest(command="curve", preset="baseline", overrides={"receiver.p_dc": 1e-6}, seed=3,
                           outputs=[out], input_hash=hash_inputs(extra={"seed": 3}))
    path = write_manifest(out, manifest)
    assert path == manifest_path(out) == out + ".manifest.json"
    first = (tmp_path / "curve.csv.manifest.json").read_bytes()
    assert read_manifest(out) == manifest
    write_manifest(out, manifest)
    assert (tmp_path / "curve.csv.manifest.json").read_bytes() == first
    assert manifest.tool_version == get_settings().app_version


def test_input_hash_tracks_content(tmp_path) -> None:
    path = tmp_path / "tags.csv"
    path.write_text("channel,timestamp_ps\n2,0\n")
    before = hash_inputs([str(path)], {"b": 1, "a": 2})
    assert hash_inputs([str(path)], {"a": 2, "b": 1}) == before
    path.write_text("channel,timestamp_ps\n2,5\n")
    assert hash_inputs([str(path)], {"b": 1, "a": 2}) != before
    assert canonical_json({"b": [1, 2], "a": None}) == '{"a":null,"b":[1,2]}'
