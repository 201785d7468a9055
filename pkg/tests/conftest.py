"""Shared fixtures: single-worker settings, preset instances and small synthetic streams."""

import numpy as np
import pytest

from config import get_settings
from core.params import ProtocolInstance, ReceiverParams, SourceParams, StreamModel
from core.presets import get_preset
from timetag.stream import TagStream

PERIOD_PS = 25_000


@pytest.fixture(autouse=True)
def single_worker(monkeypatch):
    """Run every parallel map in-process and start from fresh settings."""
    monkeypatch.setenv("QKDLAB_THREADS", "1")
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()


@pytest.fixture
def baseline() -> ProtocolInstance:
    return get_preset("baseline")


@pytest.fixture
def improved() -> ProtocolInstance:
    return get_preset("improved")


@pytest.fixture
def ideal() -> ProtocolInstance:
    """Perfect source and receiver: no multi-photon pulses, darks or misalignment."""
    return ProtocolInstance(
        source=SourceParams(clock_rate_hz=40e6, mu_tran=0.5, g2_zero=0.0),
        receiver=ReceiverParams(eta_rec=1.0, p_dc=0.0, p_mis=0.0),
    )


def hbt_instance(mu: float, g2_zero: float = 0.0, lifetime_ns: float = 4.58, statistics: str = "sub_poisson",
                 delay_ns: float = 0.0) -> ProtocolInstance:
    """Lossless HBT arrangement without dark counts."""
    return ProtocolInstance(
        source=SourceParams(clock_rate_hz=40e6, mu_tran=mu, g2_zero=g2_zero, lifetime_ns=lifetime_ns),
        receiver=ReceiverParams(eta_rec=1.0, p_dc=0.0, p_mis=0.0),
        stream=StreamModel(mode="hbt", photon_statistics=statistics, delay_ns=delay_ns),
    )


def make_stream(events, n_triggers: int, period_ps: int = PERIOD_PS, **metadata) -> TagStream:
    """Stream from (pulse, offset_ps, channel) triples on a periodic trigger train starting at 0."""
    events = sorted(events, key=lambda e: (e[0] * period_ps + e[1], e[2]))
    stamps = np.array([k * period_ps + t for k, t, _ in events], dtype=np.int64)
    channels = np.array([c for _, _, c in events], dtype=np.uint8)
    return TagStream(
        channels=channels,
        timestamps_ps=stamps,
        trigger_period_ps=period_ps,
        n_triggers=n_triggers,
        metadata=dict(metadata),
    )


def merged_records(stream: TagStream):
    """Channels and timestamps of the interleaved record sequence, triggers included."""
    records = stream.records()
    return records["channel"].astype(np.uint8), records["timestamp"].astype(np.int64)

