"""Reading and writing time-tag files.

QTT1 layout (all little-endian)::

    offset  size  field
    0       8     magic  b"QTT1\\0\\0\\0\\0"
    8       8     u64 trigger_period_ps
    16      8     u64 record count
    24      9*n   records: u8 channel, u64 timestamp_ps (packed, no padding)

Channels are 0 (APD-1, bit 1), 1 (APD-2, bit 0) and 2 (trigger). The CSV
alternative has the header ``channel,timestamp_ps`` and one record per line;
its trigger period is taken from the trigger spacing unless given.
"""

import logging
import os
import struct
import warnings
from typing import Any, Dict, Optional

import numpy as np

from core.errors import TagFormatError

from .stream import RECORD_DTYPE, TRIGGER_CHANNEL, TagStream

logger = logging.getLogger("timetag.tagio")

MAGIC = b"QTT1\x00\x00\x00\x00"
HEADER = struct.Struct("<8sQQ")
CSV_HEADER = "channel,timestamp_ps"
_INT64_MAX = np.iinfo(np.int64).max


def write_qtt1(stream: TagStream, path: str) -> int:
    """Write ``stream`` as QTT1 and return the number of records written."""
    with open(path, "wb") as f:
        f.write(HEADER.pack(MAGIC, stream.trigger_period_ps, stream.n_records))
        written = 0
        for chunk in stream.iter_records():
            f.write(chunk.tobytes())
            written += chunk.size
    logger.info(f"Wrote {written} records to {path}")
    return written


def _validate_records(channels: np.ndarray, timestamps: np.ndarray, path: str, base: int, stride: int, ts_field: int) -> None:
    bad = np.flatnonzero(channels > TRIGGER_CHANNEL)
    if bad.size:
        i = int(bad[0])
        raise TagFormatError(f"invalid channel {int(channels[i])} in record {i}", path, base + stride * i)
    too_big = np.flatnonzero(timestamps > _INT64_MAX)
    if too_big.size:
        i = int(too_big[0])
        raise TagFormatError(f"timestamp out of range in record {i}", path, base + stride * i + ts_field)
    stamps = timestamps.astype(np.int64)
    backwards = np.flatnonzero(np.diff(stamps) < 0)
    if backwards.size:
        i = int(backwards[0]) + 1
        raise TagFormatError(f"timestamp decreases at record {i}", path, base + stride * i + ts_field)


def read_qtt1(path: str) -> TagStream:
    """
    Parse a QTT1 file.

    Raises:
        TagFormatError: On a bad header, a truncated body, an invalid channel
            or decreasing timestamps; the message carries the byte offset
    """
    try:
        size = os.path.getsize(path)
        with open(path, "rb") as f:
            header = f.read(HEADER.size)
    except OSError as e:
        raise TagFormatError(f"cannot read file: {e}", path) from e
    if len(header) < HEADER.size:
        raise TagFormatError("truncated header", path, len(header))
    magic, period_ps, count = HEADER.unpack(header)
    if magic != MAGIC:
        raise TagFormatError(f"bad magic {magic!r}", path, 0)
    if period_ps == 0:
        raise TagFormatError("trigger period is zero", path, 8)
    expected = HEADER.size + RECORD_DTYPE.itemsize * count
    if size < expected:
        complete = (size - HEADER.size) // RECORD_DTYPE.itemsize
        raise TagFormatError(
            f"header announces {count} records but only {complete} are complete",
            path,
            HEADER.size + RECORD_DTYPE.itemsize * complete,
        )
    if size > expected:
        raise TagFormatError(f"{size - expected} trailing bytes after {count} records", path, expected)

    records = np.fromfile(path, dtype=RECORD_DTYPE, count=count, offset=HEADER.size)
    channels = records["channel"]
    timestamps = records["timestamp"]
    _validate_records(channels, timestamps, path, HEADER.size, RECORD_DTYPE.itemsize, 1)
    stream = TagStream.from_records(channels, timestamps.astype(np.int64), int(period_ps), {"source_path": str(path)})
    logger.info(f"Read {count} records from {path}")
    return stream


def write_csv(stream: TagStream, path: str) -> int:
    written = 0
    with open(path, "w", encoding="ascii", newline="\n") as f:
        f.write(CSV_HEADER + "\n")
        for chunk in stream.iter_records():
            if chunk.size:
                table = np.column_stack([chunk["channel"].astype(np.int64), chunk["timestamp"].astype(np.int64)])
                np.savetxt(f, table, fmt="%d", delimiter=",")
            written += chunk.size
    logger.info(f"Wrote {written} records to {path}")
    return written


def _load_csv(path: str) -> np.ndarray:
    """Vectorised parse of a well-formed CSV body."""
    with open(path, "r", encoding="ascii", newline="") as f:
        if f.readline().strip() != CSV_HEADER:
            raise TagFormatError(f"expected header '{CSV_HEADER}'", path, 0)
        with warnings.catch_warnings():
            # An empty body warns before returning an empty table.
            warnings.simplefilter("ignore", UserWarning)
            table = np.loadtxt(f, delimiter=",", dtype=np.int64, comments=None, ndmin=2)
    if table.size == 0:
        return np.empty((0, 2), dtype=np.int64)
    if table.shape[1] != 2:
        raise ValueError(f"expected two fields per record, got {table.shape[1]}")
    return table


def _scan_csv(path: str) -> np.ndarray:
    """Line-by-line parse that reports the byte offset of the first bad line."""
    rows = []
    offset = 0
    with open(path, "rb") as f:
        first = f.readline()
        if first.strip().decode("ascii", errors="replace") != CSV_HEADER:
            raise TagFormatError(f"expected header '{CSV_HEADER}'", path, 0)
        offset = len(first)
        for line in f:
            text = line.strip()
            if text:
                fields = text.split(b",")
                try:
                    if len(fields) != 2:
                        raise ValueError("expected two fields")
                    rows.append((int(fields[0]), int(fields[1])))
                except ValueError as e:
                    raise TagFormatError(f"malformed record {text[:40]!r}: {e}", path, offset) from e
            offset += len(line)
    return np.array(rows, dtype=np.int64).reshape(-1, 2)


def _line_offsets(path: str, n_lines: int) -> np.ndarray:
    offsets = np.zeros(n_lines, dtype=np.int64)
    with open(path, "rb") as f:
        pos = len(f.readline())
        i = 0
        for line in f:
            if i >= n_lines:
                break
            if line.strip():
                offsets[i] = pos
                i += 1
            pos += len(line)
    return offsets


def infer_period(timestamps: np.ndarray, channels: np.ndarray) -> int:
    triggers = timestamps[channels == TRIGGER_CHANNEL]
    if triggers.size < 2:
        raise TagFormatError("cannot infer the trigger period from fewer than two triggers")
    return int(np.median(np.diff(triggers)))


def read_csv(path: str, trigger_period_ps: Optional[int] = None) -> TagStream:
    try:
        try:
            table = _load_csv(path)
        except ValueError:
            # Malformed input: rescan line by line to locate it.
            table = _scan_csv(path)
    except OSError as e:
        raise TagFormatError(f"cannot read file: {e}", path) from e
    channels = table[:, 0]
    timestamps = table[:, 1]
    if np.any(channels < 0) or np.any(timestamps < 0) or np.any(channels > TRIGGER_CHANNEL) or np.any(np.diff(timestamps) < 0):
        offsets = _line_offsets(path, table.shape[0])
        bad = np.flatnonzero((channels < 0) | (channels > TRIGGER_CHANNEL) | (timestamps < 0))
        backwards = np.flatnonzero(np.diff(timestamps) < 0) + 1
        first = int(min(bad[0] if bad.size else table.shape[0], backwards[0] if backwards.size else table.shape[0]))
        raise TagFormatError(f"invalid channel, timestamp or ordering in record {first}", path, int(offsets[first]))
    if trigger_period_ps is None:
        trigger_period_ps = infer_period(timestamps, channels)
    metadata: Dict[str, Any] = {"source_path": str(path)}
    return TagStream.from_records(channels.astype(np.uint8), timestamps, trigger_period_ps, metadata)


def detect_format(path: str) -> str:
    with open(path, "rb") as f:
        head = f.read(len(MAGIC))
    return "qtt1" if head == MAGIC else "csv"


def read_tags(path: str, trigger_period_ps: Optional[int] = None) -> TagStream:
    """Read a QTT1 or CSV tag file, detected from its first bytes."""
    try:
        fmt = detect_format(path)
    except OSError as e:
        raise TagFormatError(f"cannot read file: {e}", path) from e
    if fmt == "qtt1":
        return read_qtt1(path)
    return read_csv(path, trigger_period_ps)


def write_tags(stream: TagStream, path: str, fmt: str = "qtt1") -> int:
    if fmt == "qtt1":
        return write_qtt1(stream, path)
    if fmt == "csv":
        return write_csv(stream, path)
    raise ValueError(f"Unknown tag format '{fmt}'")
