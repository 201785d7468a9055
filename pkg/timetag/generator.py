"""Synthetic detector time tags for a B92 run or an HBT measurement."""

import logging
from typing import List, Optional

import numpy as np

from config import get_settings
from core.errors import ParameterError
from core.params import ProtocolInstance, StreamModel

from .stream import TagStream, alice_bits, bit_to_channel

logger = logging.getLogger("timetag.generator")


def _error_probability(offsets_ps: np.ndarray, p_mis: float, model: StreamModel, period_ps: int) -> np.ndarray:
    """Misalignment per photon; arrivals outside the EOM flat region use edge_error_prob."""
    err = np.full(offsets_ps.size, p_mis)
    settle_ps = int(round(model.eom_settle_ns * 1000))
    flat_end_ps = period_ps if model.eom_flat_end_ns is None else int(round(model.eom_flat_end_ns * 1000))
    edge = (offsets_ps < settle_ps) | (offsets_ps >= flat_end_ps)
    err[edge] = model.edge_error_prob
    return err


def _photon_numbers(rng: np.random.Generator, size: int, mu: float, g2_zero: float, statistics: str) -> np.ndarray:
    if statistics == "poisson":
        return rng.poisson(mu, size)
    p_pair = g2_zero * mu * mu / 2.0
    p_single = mu - 2.0 * p_pair
    u = rng.random(size)
    return (u < p_pair + p_single).astype(np.int64) + (u < p_pair)


def generate_stream(
    inst: ProtocolInstance,
    duration_s: float,
    seed: int,
    chunk_pulses: Optional[int] = None,
) -> TagStream:
    """
    Draw a seeded time-tag stream for ``inst``.

    Per trigger pulse the source emits 0, 1 or 2 photons (or a Poisson number
    in the ``poisson`` variant) with mean mu_tran * eta_pre. Each photon
    survives the channel and the analyzer, then in ``qkd`` mode yields a
    conclusive click with probability eta_rec / 4, landing on the detector
    matching Alice's bit unless a misalignment error flips it. In ``hbt`` mode
    it is detected with probability eta_rec and routed 50/50. Arrival offsets
    are delay + Exp(lifetime) + N(0, jitter) after the emitting trigger; a
    photon arriving past the period (or before its trigger) is tagged in the
    neighbouring slot and still carries the bit of the pulse that emitted it.
    Photons pushed outside the acquisition are dropped.
    Each detector also fires dark counts uniformly within the period.

    Args:
        inst: Protocol instance; ``inst.stream`` holds the apparatus knobs
        duration_s: Acquisition time in seconds
        seed: Seed for the random generator
        chunk_pulses: Pulses drawn per iteration (settings default)

    Returns:
        The generated stream, identical for identical arguments

    Raises:
        ValueError: If the duration is not positive or the source is unphysical
    """
    if not duration_s > 0:
        raise ParameterError(f"Duration must be positive, got {duration_s}")
    settings = get_settings()
    chunk_pulses = chunk_pulses or settings.generator_chunk
    src, rec, model = inst.source, inst.receiver, inst.stream

    period_ps = int(round(1e12 / src.clock_rate_hz))
    n_pulses = max(1, int(round(duration_s * src.clock_rate_hz)))
    mu = src.mu_tran * inst.eta_pre
    if model.photon_statistics == "sub_poisson" and mu - src.g2_zero * mu * mu < 0:
        raise ParameterError(f"mu={mu:g} with g2={src.g2_zero:g} gives a negative single-photon probability")

    survive = inst.channel.eta_ch * model.analyzer_transmission
    click = survive * rec.eta_rec * (0.25 if model.mode == "qkd" else 1.0)
    p_mis = rec.p_mis if model.p_mis is None else model.p_mis
    jitter_ps = settings.jitter_ps if model.jitter_ps is None else model.jitter_ps
    tau_ps = src.lifetime_ns * 1000.0
    delay_ps = model.delay_ns * 1000.0
    bits_seed = seed if model.random_bits else None

    rng = np.random.default_rng(seed)
    pulses: List[np.ndarray] = []
    offsets: List[np.ndarray] = []
    channels: List[np.ndarray] = []

    logger.debug(f"Generating {n_pulses} pulses ({model.mode} mode, seed {seed})")
    for start in range(0, n_pulses, chunk_pulses):
        size = min(chunk_pulses, n_pulses - start)

        counts = _photon_numbers(rng, size, mu, src.g2_zero, model.photon_statistics)
        emitting = np.flatnonzero(counts)
        photon_pulse = np.repeat(emitting, counts[emitting]).astype(np.int64) + start
        emitted = photon_pulse[rng.random(photon_pulse.size) < click]
        n = emitted.size
        arrival = delay_ps + rng.exponential(tau_ps, n) + rng.normal(0.0, jitter_ps, n)
        arrival_ps = np.rint(arrival).astype(np.int64)
        # Arrivals outside [0, period) belong to a neighbouring trigger slot.
        photon_pulse = emitted + np.floor_divide(arrival_ps, period_ps)
        photon_offset = np.mod(arrival_ps, period_ps)
        if model.mode == "qkd":
            wrong = rng.random(n) < _error_probability(photon_offset, p_mis, model, period_ps)
            photon_channel = bit_to_channel(alice_bits(emitted, bits_seed)) ^ wrong.astype(np.uint8)
        else:
            photon_channel = (rng.random(n) < 0.5).astype(np.uint8)
        inside = (photon_pulse >= 0) & (photon_pulse < n_pulses)
        photon_pulse, photon_offset, photon_channel = photon_pulse[inside], photon_offset[inside], photon_channel[inside]
        pulses.append(photon_pulse)
        offsets.append(photon_offset)
        channels.append(photon_channel)

        for detector in (0, 1):
            n_dark = int(rng.binomial(size, rec.p_dc)) if rec.p_dc > 0 else 0
            pulses.append(rng.integers(0, size, n_dark, dtype=np.int64) + start)
            offsets.append(rng.integers(0, period_ps, n_dark, dtype=np.int64))
            channels.append(np.full(n_dark, detector, dtype=np.uint8))

    pulse = np.concatenate(pulses) if pulses else np.empty(0, dtype=np.int64)
    stamps = pulse * period_ps + np.concatenate(offsets) if pulses else np.empty(0, dtype=np.int64)
    chan = np.concatenate(channels) if channels else np.empty(0, dtype=np.uint8)
    order = np.lexsort((chan, stamps))

    metadata = {
        "generator": "synthetic",
        "mode": model.mode,
        "seed": int(seed),
        "preset": inst.preset_id,
        "chunk_pulses": int(chunk_pulses),
    }
    if bits_seed is not None:
        metadata["alice_seed"] = int(bits_seed)
    stream = TagStream(
        channels=chan[order],
        timestamps_ps=stamps[order],
        trigger_period_ps=period_ps,
        n_triggers=n_pulses,
        metadata=metadata,
    )
    logger.info(f"Generated {stream.n_events} detector events over {n_pulses} pulses")
    return stream
