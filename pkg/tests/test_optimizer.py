import pytest
from pydantic import ValidationError

from bb84.asymptotic import asymptotic_rate
from bb84.finite import finite_rate
from core.errors import ParameterError
from core.params import ProtocolInstance, ReceiverParams, SourceParams
from core.presets import get_preset
from optimizer.curve import (
    RateCurve,
    build_curve,
    compare_curves,
    loss_grid,
    read_curve_csv,
    tolerable_loss,
    write_curve_csv,
)
from optimizer.search import optimize_point, rate_function


def _curve(rates, losses=(0.0, 5.0, 10.0, 15.0)) -> RateCurve:
    return RateCurve(
        calculator="test",
        loss_db=list(losses),
        rate_per_pulse=[r / 1e6 for r in rates],
        rate_bps=list(rates),
        p_x_opt=[0.5 if r > 0 else None for r in rates],
        eta_tr_opt=[1.0 if r > 0 else None for r in rates],
        feasible=[r > 0 for r in rates],
    )


def test_pure_source_keeps_full_brightness() -> None:
    inst = ProtocolInstance(
        source=SourceParams(clock_rate_hz=40e6, mu_tran=0.5, g2_zero=0.0),
        receiver=ReceiverParams(eta_rec=0.5, p_dc=0.0, p_mis=0.01),
    )
    point = optimize_point("bb84-asymptotic", inst, 10.0)
    assert point.feasible
    assert point.eta_pre == pytest.approx(1.0, abs=1e-3)
    assert point.p_x == 1.0


def test_pre_attenuation_helps_near_the_limit(baseline: ProtocolInstance) -> None:
    point = optimize_point("bb84-asymptotic", baseline, 22.0)
    assert point.eta_pre < 1.0
    assert point.rate_per_pulse >= asymptotic_rate(baseline.with_loss(22.0)).rate_per_pulse


def test_finite_optimum_biases_the_basis(baseline: ProtocolInstance) -> None:
    inst = baseline.model_copy(update={"t_s": 100.0})
    point = optimize_point("bb84-finite", inst, 10.0)
    assert point.p_x > 0.5
    assert 0.0 < point.eta_pre <= 1.0
    reference = finite_rate(inst.with_loss(10.0)).rate_per_pulse
    assert point.rate_per_pulse >= reference
    assert optimize_point("bb84-finite", inst, 10.0) == point


def test_unknown_calculator(baseline: ProtocolInstance) -> None:
    with pytest.raises(ParameterError):
        rate_function("b92", baseline)


def test_infeasible_point_has_no_choices(baseline: ProtocolInstance) -> None:
    point = optimize_point("bb84-asymptotic", baseline, 40.0)
    assert not point.feasible
    assert point.rate_bps == 0.0
    assert point.p_x is None and point.eta_pre is None


def test_curve_csv_round_trip(tmp_path, baseline: ProtocolInstance) -> None:
    curve = build_curve("bb84-asymptotic", baseline, (0.0, 30.0, 10.0))
    assert curve.loss_db == [0.0, 10.0, 20.0, 30.0]
    assert curve.feasible == [True, True, True, False]
    assert curve.distance_km == pytest.approx([0.0, 50.0, 100.0, 150.0])
    path = str(tmp_path / "curve.csv")
    write_curve_csv(curve, path)
    header = (tmp_path / "curve.csv").read_text().splitlines()[0]
    assert header == "loss_db,distance_km,rate_per_pulse,rate_bps,p_x_opt,eta_tr_opt,feasible"
    back = read_curve_csv(path)
    assert back.rate_bps == curve.rate_bps
    assert back.eta_tr_opt == curve.eta_tr_opt
    assert back.feasible == curve.feasible


def test_curve_validation() -> None:
    with pytest.raises(ValidationError):
        _curve([1.0, 2.0], losses=(0.0, 5.0, 10.0))
    with pytest.raises(ValidationError):
        _curve([1.0, 2.0], losses=(5.0, 5.0))
    with pytest.raises(ValueError):
        loss_grid(5.0, 0.0, 1.0)
    assert loss_grid(0.0, 1.0, 0.25) == [0.0, 0.25, 0.5, 0.75, 1.0]


def test_compare_interpolates_crossover() -> None:
    a = _curve([5.0, 5.0, 5.0, 5.0])
    b = _curve([20.0, 10.0, 2.5, 0.0])
    report = compare_curves(a, b)
    assert report.found
    assert report.crossover_grid_db == 10.0
    assert report.crossover_db == pytest.approx(7.5)
    assert report.max_loss_a_db == 15.0
    assert report.max_loss_b_db == 10.0
    assert report.rate_ratio == {"0": 0.25, "5": 0.5, "10": 2.0, "15": None}


def test_compare_without_crossover() -> None:
    a = _curve([5.0, 4.0, 3.0, 0.0])
    report = compare_curves(a, a)
    assert not report.found
    assert report.crossover_db is None
    assert tolerable_loss(_curve([0.0, 0.0, 0.0, 0.0])) is None
    with pytest.raises(ValueError):
        compare_curves(a, _curve([1.0, 1.0, 1.0, 1.0], losses=(0.0, 5.0, 10.0, 20.0)))


def test_quantum_dot_preset_beats_baseline(baseline: ProtocolInstance) -> None:
    losses = (0.0, 25.0, 5.0)
    hbn = build_curve("bb84-asymptotic", baseline, losses)
    qd = build_curve("bb84-asymptotic", get_preset("qd"), losses)
    for ours, theirs in zip(hbn.rate_bps, qd.rate_bps):
        if ours > 0:
            assert theirs > ours
    assert tolerable_loss(qd) >= tolerable_loss(hbn)
