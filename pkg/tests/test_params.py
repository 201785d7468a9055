import json
import math

import pytest
from pydantic import ValidationError

from config import Settings, get_settings
from core.errors import ParameterError
from core.params import ChannelParams, ProtocolInstance, SecurityParams, SourceParams
from core.presets import apply_overrides, get_preset, get_repeater_block, list_presets, load_parameter_file
from core.probabilities import (
    detected_mean,
    distance_to_loss,
    expected_qber,
    loss_to_distance,
    loss_to_transmittance,
    p_click,
    p_multiphoton,
    total_transmittance,
    transmittance_to_loss,
)


def test_settings_validation(monkeypatch) -> None:
    assert get_settings().threads == 1
    with pytest.raises(ValidationError):
        Settings(threads=0)
    with pytest.raises(ValidationError):
        Settings(scan_points=10)
    monkeypatch.setenv("QKDLAB_SCAN_POINTS", "80")
    get_settings.cache_clear()
    assert get_settings().scan_points == 80


def test_source_derives_transmitted_mean() -> None:
    src = SourceParams(clock_rate_hz=40e6, mu_sps=0.1, eta_tran=0.5)
    assert src.mu_tran == pytest.approx(0.05)
    src = SourceParams(clock_rate_hz=40e6, mu_tran=0.0131, eta_tran=0.252)
    assert src.mu_sps == pytest.approx(0.0131 / 0.252)
    with pytest.raises(ValidationError):
        SourceParams(clock_rate_hz=40e6, mu_sps=0.1, eta_tran=0.5, mu_tran=0.2)
    with pytest.raises(ValidationError):
        SourceParams(clock_rate_hz=40e6)


def test_instance_validation() -> None:
    src = SourceParams(clock_rate_hz=10.0, mu_tran=0.1)
    with pytest.raises(ValidationError):
        ProtocolInstance(source=src, t_s=0.01)
    with pytest.raises(ValidationError):
        ProtocolInstance(source=src, p_x=0.0)
    with pytest.raises(ValidationError):
        ProtocolInstance(source=src, eta_pre=1.5)


def test_security_defaults() -> None:
    sec = SecurityParams()
    assert sec.eps_pa == sec.eps_cor == sec.eps_ec == 1e-10
    assert sec.eps_bar == pytest.approx(1.5625e-22)
    assert sec.eps_pe == pytest.approx(4e-10)
    assert sec.eps_qkd_b92() == pytest.approx(2e-10 + 2 * 1.5625e-22)
    assert SecurityParams(eps=1e-6, eps_pa=1e-8).eps_pa == 1e-8


def test_baseline_literal_probabilities(baseline: ProtocolInstance) -> None:
    literal = baseline.model_copy(update={"count_eta_tran_twice": True})
    assert total_transmittance(literal) == pytest.approx(0.10584)
    assert p_click(literal) == pytest.approx(1.38730e-3, rel=1e-4)
    assert expected_qber(literal) == pytest.approx(0.01774, abs=2e-4)
    assert p_multiphoton(literal) == pytest.approx(2.0593e-5, rel=1e-4)


def test_detected_mean_counts_transmitter_once(baseline: ProtocolInstance) -> None:
    assert detected_mean(baseline) == pytest.approx(0.0131 * 0.42)
    at_10db = baseline.with_loss(10.0)
    assert detected_mean(at_10db) == pytest.approx(0.0131 * 0.42 * 0.1)


def test_click_probability_limits(ideal: ProtocolInstance) -> None:
    assert p_click(ideal) == pytest.approx(0.5)
    assert expected_qber(ideal) == 0.0
    dark = ideal.model_copy(update={"receiver": ideal.receiver.model_copy(update={"p_dc": 1.0})})
    assert p_click(dark) == pytest.approx(1.0)
    bright = ideal.model_copy(update={"source": SourceParams(clock_rate_hz=40e6, mu_tran=1.0)})
    assert p_click(bright) == pytest.approx(1.0)
    silent = ideal.model_copy(update={"source": SourceParams(clock_rate_hz=40e6, mu_tran=0.0)})
    with pytest.raises(ParameterError):
        expected_qber(silent)


def test_loss_conversions() -> None:
    assert loss_to_transmittance(10.0) == pytest.approx(0.1)
    assert transmittance_to_loss(0.01) == pytest.approx(20.0)
    assert loss_to_distance(20.0) == pytest.approx(100.0)
    assert distance_to_loss(100.0, 0.25) == pytest.approx(25.0)
    assert ChannelParams(loss_db=3.0).distance_km == pytest.approx(15.0)
    with pytest.raises(ParameterError):
        transmittance_to_loss(0.0)


def _with(inst: ProtocolInstance, part: str, **update) -> ProtocolInstance:
    return inst.model_copy(update={part: getattr(inst, part).model_copy(update=update)})


def test_click_probability_is_monotone(baseline: ProtocolInstance) -> None:
    grid = [0.01, 0.1, 0.3, 0.6, 1.0]
    for clicks in (
        [p_click(_with(baseline, "receiver", eta_rec=v)) for v in grid],
        [p_click(baseline.with_choices(eta_pre=v)) for v in grid],
        [p_click(_with(baseline, "source", mu_tran=v * 0.0131)) for v in grid],
        [p_click(_with(baseline, "receiver", p_dc=v * 1e-5)) for v in grid],
        [p_click(baseline.with_loss(loss)) for loss in (40.0, 30.0, 20.0, 10.0, 0.0)],
    ):
        assert all(b > a for a, b in zip(clicks, clicks[1:]))


def test_qber_grows_as_transmittance_falls(baseline: ProtocolInstance) -> None:
    qber = [expected_qber(baseline.with_loss(loss)) for loss in range(0, 45, 5)]
    assert all(b > a for a, b in zip(qber, qber[1:]))
    assert qber[0] == pytest.approx(0.0176, abs=1e-3)
    assert qber[-1] < 0.5


def test_multiphoton_share_vanishes_with_pre_attenuation(baseline: ProtocolInstance) -> None:
    for inst in (baseline, _with(baseline, "receiver", p_dc=0.0)):
        ratios = [p_multiphoton(inst.with_choices(eta_pre=eta)) / p_click(inst.with_choices(eta_pre=eta))
                  for eta in (1.0, 1e-2, 1e-4, 1e-6)]
        assert all(b < a for a, b in zip(ratios, ratios[1:]))
        assert ratios[-1] < 1e-6


@pytest.mark.parametrize("loss_db", [0.0, 0.5, 3.0, 17.25, 40.0, 80.0])
def test_loss_transmittance_distance_round_trip(loss_db: float) -> None:
    eta = loss_to_transmittance(loss_db)
    back = transmittance_to_loss(eta)
    assert back == pytest.approx(loss_db, rel=1e-12, abs=1e-12)
    assert distance_to_loss(loss_to_distance(back)) == pytest.approx(loss_db, rel=1e-12, abs=1e-12)
    assert distance_to_loss(loss_to_distance(back, 0.17), 0.17) == pytest.approx(loss_db, rel=1e-12, abs=1e-12)


def test_fibre_length_uses_attenuation_length() -> None:
    channel = ChannelParams(loss_db=10.0)
    assert channel.fibre_length_km == pytest.approx(22.0 * math.log(10.0), rel=1e-12)
    assert math.exp(-channel.fibre_length_km / channel.att_length_km) == pytest.approx(channel.eta_ch, rel=1e-12)
    assert ChannelParams(loss_db=10.0, att_length_km=11.0).fibre_length_km == pytest.approx(channel.fibre_length_km / 2)
    assert ChannelParams().fibre_length_km == 0.0


def test_presets_load() -> None:
    assert list_presets() == ["baseline", "improved", "qd"]
    qd = get_preset("qd")
    assert qd.source.clock_rate_hz == pytest.approx(76.13e6)
    assert get_preset().preset_id == "baseline"
    assert get_repeater_block()["t_init"] == pytest.approx(6e-5)
    with pytest.raises(ParameterError):
        get_preset("nope")


def test_overrides_rederive(baseline: ProtocolInstance) -> None:
    changed = apply_overrides(baseline, {"p_dc": 1e-6, "receiver.p_mis": 0.02})
    assert changed.receiver.p_dc == 1e-6
    assert changed.receiver.p_mis == 0.02
    assert changed.source.mu_tran == baseline.source.mu_tran
    brighter = apply_overrides(baseline, {"source.mu_sps": 0.1})
    assert brighter.source.mu_tran == pytest.approx(0.1 * 0.252)
    with pytest.raises(ParameterError):
        apply_overrides(baseline, {"receiver.p_dc": 2.0})
    with pytest.raises(ParameterError):
        apply_overrides(baseline, {"no_such_field": 1})
    with pytest.raises(ParameterError):
        apply_overrides(baseline, {"p_mis": 0.02})


def test_parameter_file(tmp_path) -> None:
    path = tmp_path / "link.json"
    path.write_text(json.dumps({
        "id": "custom",
        "source": {"clock_rate_hz": 1e6, "mu_tran": 0.2, "g2_zero": 0.1},
        "receiver": {"eta_rec": 0.5, "p_dc": 1e-6, "p_mis": 0.01},
    }))
    inst = load_parameter_file(str(path))
    assert inst.preset_id == "custom"
    assert inst.source.mu_sps == pytest.approx(0.2)
    path.write_text("{not json")
    with pytest.raises(ParameterError):
        load_parameter_file(str(path))
