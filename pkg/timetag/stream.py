"""In-memory time-tag stream.

Detector events are held as parallel numpy arrays. Triggers are usually a
strict periodic train and are then stored as (first, period, count) only;
streams read from files with irregular triggers keep explicit timestamps.
"""

from dataclasses import dataclass, field
from typing import Any, Dict, Iterator, Optional, Tuple

import numpy as np

RECORD_DTYPE = np.dtype([("channel", "<u1"), ("timestamp", "<u8")])
TRIGGER_CHANNEL = 2
DETECTOR_CHANNELS = (0, 1)

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)


def alice_bits(pulse_index: np.ndarray, random_seed: Optional[int] = None) -> np.ndarray:
    """Alice's bit per pulse: 1-0-1-0... from pulse 0, or a seeded hash when random_seed is set."""
    k = np.atleast_1d(np.asarray(pulse_index, dtype=np.int64))
    if random_seed is None:
        return (1 - (k & 1)).astype(np.uint8)
    z = (k.astype(np.uint64) + np.uint64(1)) * _GOLDEN + np.uint64(random_seed)
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    z = z ^ (z >> np.uint64(31))
    return (z & np.uint64(1)).astype(np.uint8)


def bit_to_channel(bits: np.ndarray) -> np.ndarray:
    """Bit 1 is detected on channel 0, bit 0 on channel 1."""
    return (1 - np.asarray(bits, dtype=np.uint8)).astype(np.uint8)


@dataclass(frozen=True, eq=False)
class TagStream:
    channels: np.ndarray
    timestamps_ps: np.ndarray
    trigger_period_ps: int
    n_triggers: int
    first_trigger_ps: int = 0
    trigger_times_ps: Optional[np.ndarray] = None
    metadata: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        channels = np.ascontiguousarray(self.channels, dtype=np.uint8)
        timestamps = np.ascontiguousarray(self.timestamps_ps, dtype=np.int64)
        object.__setattr__(self, "channels", channels)
        object.__setattr__(self, "timestamps_ps", timestamps)
        if channels.shape != timestamps.shape or channels.ndim != 1:
            raise ValueError("channels and timestamps must be 1-D arrays of equal length")
        if self.trigger_period_ps <= 0:
            raise ValueError(f"Trigger period must be positive, got {self.trigger_period_ps}")
        if self.n_triggers < 0:
            raise ValueError("Trigger count cannot be negative")
        if channels.size and channels.max() > 1:
            raise ValueError("Detector events must be on channel 0 or 1")
        if timestamps.size > 1 and np.any(np.diff(timestamps) < 0):
            raise ValueError("Detector timestamps must be non-decreasing")
        if self.trigger_times_ps is not None:
            triggers = np.ascontiguousarray(self.trigger_times_ps, dtype=np.int64)
            if triggers.size != self.n_triggers:
                raise ValueError("Explicit trigger array does not match n_triggers")
            if triggers.size > 1 and np.any(np.diff(triggers) < 0):
                raise ValueError("Trigger timestamps must be non-decreasing")
            object.__setattr__(self, "trigger_times_ps", triggers)
        for array in (self.channels, self.timestamps_ps, self.trigger_times_ps):
            if array is not None:
                array.setflags(write=False)

    @property
    def n_events(self) -> int:
        return int(self.timestamps_ps.size)

    @property
    def n_records(self) -> int:
        return self.n_triggers + self.n_events

    @property
    def duration_s(self) -> float:
        return self.n_triggers * self.trigger_period_ps * 1e-12

    @property
    def random_bits_seed(self) -> Optional[int]:
        seed = self.metadata.get("alice_seed")
        return None if seed is None else int(seed)

    def trigger_times(self, start: int = 0, stop: Optional[int] = None) -> np.ndarray:
        stop = self.n_triggers if stop is None else min(stop, self.n_triggers)
        if self.trigger_times_ps is not None:
            return self.trigger_times_ps[start:stop]
        return self.first_trigger_ps + np.arange(start, stop, dtype=np.int64) * self.trigger_period_ps

    def pulse_offsets(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Pulse index, offset after that trigger (ps) and event position, for events inside the train."""
        t = self.timestamps_ps
        if self.n_triggers == 0 or t.size == 0:
            empty = np.empty(0, dtype=np.int64)
            return empty, empty, empty
        if self.trigger_times_ps is None:
            rel = t - self.first_trigger_ps
            k = np.floor_divide(rel, self.trigger_period_ps)
            offsets = rel - k * self.trigger_period_ps
        else:
            k = np.searchsorted(self.trigger_times_ps, t, side="right") - 1
            offsets = t - self.trigger_times_ps[np.clip(k, 0, None)]
        inside = (k >= 0) & (k < self.n_triggers)
        position = np.flatnonzero(inside)
        return k[inside], offsets[inside], position

    def iter_records(self, chunk_pulses: int = 1 << 20) -> Iterator[np.ndarray]:
        """Yield time-ordered record chunks (triggers interleaved with detector events)."""
        t = self.timestamps_ps
        start_event = 0
        n_chunks = max(1, -(-self.n_triggers // chunk_pulses))
        for c in range(n_chunks):
            k0 = c * chunk_pulses
            k1 = min(k0 + chunk_pulses, self.n_triggers)
            triggers = self.trigger_times(k0, k1)
            if c == n_chunks - 1:
                stop_event = t.size
            else:
                stop_event = int(np.searchsorted(t, self.trigger_times(k1, k1 + 1)[0], side="left"))
            events = slice(start_event, stop_event)
            start_event = stop_event
            stamps = np.concatenate([triggers, t[events]])
            channels = np.concatenate([np.full(triggers.size, TRIGGER_CHANNEL, dtype=np.uint8), self.channels[events]])
            order = np.argsort(stamps, kind="stable")
            chunk = np.empty(stamps.size, dtype=RECORD_DTYPE)
            chunk["channel"] = channels[order]
            chunk["timestamp"] = stamps[order].astype(np.uint64)
            yield chunk

    def records(self) -> np.ndarray:
        chunks = list(self.iter_records())
        return np.concatenate(chunks) if chunks else np.empty(0, dtype=RECORD_DTYPE)

    def same_content(self, other: "TagStream") -> bool:
        return (
            self.trigger_period_ps == other.trigger_period_ps
            and self.n_triggers == other.n_triggers
            and np.array_equal(self.trigger_times(), other.trigger_times())
            and np.array_equal(self.channels, other.channels)
            and np.array_equal(self.timestamps_ps, other.timestamps_ps)
        )

    @classmethod
    def from_records(
        cls,
        channels: np.ndarray,
        timestamps_ps: np.ndarray,
        trigger_period_ps: int,
        metadata: Optional[Dict[str, Any]] = None,
    ) -> "TagStream":
        """Split a merged record sequence into triggers and detector events."""
        channels = np.asarray(channels, dtype=np.uint8)
        timestamps = np.asarray(timestamps_ps, dtype=np.int64)
        is_trigger = channels == TRIGGER_CHANNEL
        triggers = timestamps[is_trigger]
        detectors = ~is_trigger
        periodic = triggers.size <= 1 or bool(np.all(np.diff(triggers) == trigger_period_ps))
        return cls(
            channels=channels[detectors],
            timestamps_ps=timestamps[detectors],
            trigger_period_ps=int(trigger_period_ps),
            n_triggers=int(triggers.size),
            first_trigger_ps=int(triggers[0]) if triggers.size else 0,
            trigger_times_ps=None if periodic else triggers,
            metadata=dict(metadata or {}),
        )
