import numpy as np
import pytest

from b92.finite import skr_map_from_sweep
from conftest import make_stream
from core.params import ProtocolInstance, ReceiverParams, SourceParams
from timetag.generator import generate_stream
from timetag.sifting import FilterWindow, grid_values, prepare_events, sift, sweep_filters
from timetag.stream import TagStream, alice_bits


def _eight_pulses() -> TagStream:
    return make_stream(
        [
            (0, 2_000, 0),    # bit 1 on channel 0: correct
            (1, 3_000, 1),    # bit 0 on channel 1: correct
            (2, 4_000, 1),    # bit 1 on channel 1: error
            (3, 5_000, 0),    # double
            (3, 6_000, 1),
            (4, 24_000, 0),   # outside the window
        ],
        n_triggers=8,
    )


def test_sift_eight_pulse_oracle() -> None:
    stats = sift(_eight_pulses(), FilterWindow(t0_ns=0.0, dt_ns=20.0))
    assert (stats.n_received, stats.n_errors, stats.n_double, stats.n_empty) == (3, 1, 1, 4)
    assert stats.duration_s == pytest.approx(8 * 25e-9)
    assert stats.sikr_bps == pytest.approx(3 / 2e-7)
    assert stats.qber == pytest.approx(1 / 3)


def test_window_is_half_open() -> None:
    stream = make_stream([(0, 5_000, 0), (1, 8_000, 1)], n_triggers=2)
    stats = sift(stream, FilterWindow(t0_ns=5.0, dt_ns=3.0))
    assert stats.n_received == 1
    assert stats.n_empty == 1
    stats = sift(stream, FilterWindow(t0_ns=5.001, dt_ns=3.0))
    assert stats.n_received == 1


def test_window_must_fit_period() -> None:
    with pytest.raises(ValueError):
        sift(_eight_pulses(), FilterWindow(t0_ns=20.0, dt_ns=6.0))
    with pytest.raises(ValueError):
        FilterWindow(t0_ns=-1.0, dt_ns=3.0)


def test_no_triggers() -> None:
    stream = TagStream(channels=np.array([0], dtype=np.uint8), timestamps_ps=np.array([10]), trigger_period_ps=25_000, n_triggers=0)
    with pytest.raises(ValueError):
        prepare_events(stream)


def _naive_sift(stream: TagStream, start_ps: int, stop_ps: int):
    pulses = {}
    for channel, stamp in zip(stream.channels.tolist(), stream.timestamps_ps.tolist()):
        k, offset = divmod(stamp - stream.first_trigger_ps, stream.trigger_period_ps)
        if 0 <= k < stream.n_triggers and start_ps <= offset < stop_ps:
            pulses.setdefault(k, set()).add(channel)
    received = errors = double = 0
    for k, channels in pulses.items():
        if len(channels) == 2:
            double += 1
            continue
        received += 1
        bob = 1 if channels == {0} else 0
        alice = int(alice_bits(np.array([k]), stream.random_bits_seed)[0])
        errors += bob != alice
    return received, errors, double


@pytest.mark.parametrize("seed", [1, 2, 3])
def test_sift_matches_naive_reference(seed: int) -> None:
    rng = np.random.default_rng(seed)
    n = 2_000
    pulse = rng.integers(0, 500, n)
    offset = rng.integers(0, 25_000, n)
    channel = rng.integers(0, 2, n)
    metadata = {"alice_seed": seed} if seed == 2 else {}
    stream = make_stream(list(zip(pulse.tolist(), offset.tolist(), channel.tolist())), n_triggers=500, **metadata)
    for t0, dt in [(0.0, 25.0), (0.5, 10.0), (3.2, 7.7), (12.0, 1.0)]:
        window = FilterWindow(t0_ns=t0, dt_ns=dt)
        stats = sift(stream, window)
        assert (stats.n_received, stats.n_errors, stats.n_double) == _naive_sift(stream, window.start_ps, window.stop_ps)
        assert stats.n_received + stats.n_double + stats.n_empty == 500


def test_nested_windows_only_add_clicks(ideal) -> None:
    rng = np.random.default_rng(5)
    events = zip(rng.integers(0, 500, 3_000).tolist(), rng.integers(0, 25_000, 3_000).tolist(), rng.integers(0, 2, 3_000).tolist())
    for stream in (make_stream(list(events), n_triggers=500), generate_stream(ideal, 1e-3, seed=6)):
        windows = [(2.0, 1.0), (1.0, 5.0), (0.5, 9.5), (0.0, 25.0)]
        stats = [sift(stream, FilterWindow(t0_ns=t0, dt_ns=dt)) for t0, dt in windows]
        assert all(b.n_empty <= a.n_empty for a, b in zip(stats, stats[1:]))
        assert all(b.n_double >= a.n_double for a, b in zip(stats, stats[1:]))
        assert all(s.n_received + s.n_double + s.n_empty == stream.n_triggers for s in stats)
        assert stats[0].n_empty > stats[-1].n_empty


def test_sweep_cells_equal_single_windows() -> None:
    stream = _eight_pulses()
    sweep = sweep_filters(stream, (0.0, 4.0, 2.0), (3.0, 6.0, 1.5))
    assert sweep.sikr_map.shape == (3, 3)
    for i, t0 in enumerate(sweep.t0_grid):
        for j, dt in enumerate(sweep.dt_grid):
            assert sweep.cell(i, j) == sift(stream, FilterWindow(t0_ns=float(t0), dt_ns=float(dt)))
    assert np.all(sweep.received_map + sweep.double_map + sweep.empty_map == 8)
    assert sweep.argmax() == (0, 0)


def test_sweep_rejects_grid_beyond_period() -> None:
    with pytest.raises(ValueError):
        sweep_filters(_eight_pulses(), (0.0, 20.0, 1.0), (3.0, 12.0, 1.0))
    with pytest.raises(ValueError):
        grid_values(1.0, 0.0, 0.1)


def test_dark_stream_grows_with_window() -> None:
    inst = ProtocolInstance(
        source=SourceParams(clock_rate_hz=40e6, mu_tran=0.0),
        receiver=ReceiverParams(eta_rec=1.0, p_dc=1e-2),
    )
    stream = generate_stream(inst, 0.025, seed=11)
    sweep = sweep_filters(stream, (0.0, 4.0, 1.0), (3.0, 12.0, 1.0))
    assert np.all(np.diff(sweep.sikr_map, axis=1) > 0)
    assert sweep.qber_map.mean() == pytest.approx(0.5, abs=0.05)


@pytest.mark.slow
def test_filter_pipeline_on_baseline_stream(baseline) -> None:
    stream = generate_stream(baseline, 10.0, seed=7)
    sweep = skr_map_from_sweep(sweep_filters(stream), baseline.security, block_s=1.0)
    assert np.all(sweep.received_map + sweep.double_map + sweep.empty_map == stream.n_triggers)
    i, j = sweep.argmax()
    best = sweep.cell(i, j)
    assert sweep.t0_grid[i] == pytest.approx(0.5, abs=0.3)
    assert best.sikr_bps == pytest.approx(17_500, rel=0.3)
    assert best.qber == pytest.approx(0.0649, abs=0.02)
    assert sweep.skr_map[i, j] == pytest.approx(7_000, rel=0.3)
