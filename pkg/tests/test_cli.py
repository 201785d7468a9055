import csv
import json

import pytest
from click.testing import CliRunner

from cli import cli
from runtime.manifest import read_manifest


@pytest.fixture
def runner() -> CliRunner:
    return CliRunner()


def _generate(runner: CliRunner, path: str, seed: int = 1):
    return runner.invoke(cli, ["--preset", "baseline", "--seed", str(seed), "--out", path, "generate", "--duration", "0.001"])


def test_presets(runner: CliRunner) -> None:
    result = runner.invoke(cli, ["presets"])
    assert result.exit_code == 0
    assert {"baseline", "improved", "qd"} <= set(result.output.split())


def test_generate_writes_tags_and_manifest(runner: CliRunner, tmp_path) -> None:
    first, second = str(tmp_path / "a.qtt1"), str(tmp_path / "b.qtt1")
    assert _generate(runner, first).exit_code == 0
    assert _generate(runner, second).exit_code == 0
    assert (tmp_path / "a.qtt1").read_bytes() == (tmp_path / "b.qtt1").read_bytes()
    manifest = read_manifest(first)
    assert manifest.command == "generate"
    assert manifest.seed == 1
    assert manifest.parameters["duration_s"] == 0.001


def test_generate_rejects_zero_duration(runner: CliRunner, tmp_path) -> None:
    result = runner.invoke(cli, ["--out", str(tmp_path / "x.qtt1"), "generate", "--duration", "0"])
    assert result.exit_code == 2
    assert not (tmp_path / "x.qtt1").exists()


def test_sift_single_window(runner: CliRunner, tmp_path) -> None:
    tags, table = str(tmp_path / "tags.qtt1"), str(tmp_path / "sift.csv")
    assert _generate(runner, tags).exit_code == 0
    result = runner.invoke(cli, ["--out", table, "sift", tags, "--t0", "0", "--dt", "5"])
    assert result.exit_code == 0
    with open(table, newline="") as f:
        rows = list(csv.DictReader(f))
    assert len(rows) == 1
    row = rows[0]
    assert list(row) == ["t0_ns", "dt_ns", "n_received", "n_errors", "n_double", "n_empty", "sikr_bps", "qber",
                         "key_len_bits", "skr_bps"]
    assert int(row["n_received"]) + int(row["n_double"]) + int(row["n_empty"]) == 40_000
    assert int(row["n_errors"]) <= int(row["n_received"])
    assert read_manifest(table).inputs == [tags]


def test_malformed_tag_file_exits_3(runner: CliRunner, tmp_path) -> None:
    path = tmp_path / "bad.csv"
    path.write_bytes(b"channel,timestamp_ps\n2,0\n0,abc\n")
    result = runner.invoke(cli, ["sift", str(path), "--t0", "0", "--dt", "5", "--period-ps", "25000"])
    assert result.exit_code == 3
    assert "byte 25" in result.output


def test_curve_and_compare(runner: CliRunner, tmp_path) -> None:
    path, report = str(tmp_path / "curve.csv"), str(tmp_path / "report.json")
    result = runner.invoke(cli, ["--out", path, "curve", "--calculator", "bb84-asymptotic", "--loss-range", "0", "10", "5"])
    assert result.exit_code == 0
    lines = (tmp_path / "curve.csv").read_text().splitlines()
    assert lines[0] == "loss_db,distance_km,rate_per_pulse,rate_bps,p_x_opt,eta_tr_opt,feasible"
    assert len(lines) == 4
    assert read_manifest(path).parameters["calculator"] == "bb84-asymptotic"

    result = runner.invoke(cli, ["--out", report, "compare", path, path])
    assert result.exit_code == 0
    data = json.loads((tmp_path / "report.json").read_text())
    assert data["found"] is False
    assert data["crossover_db"] is None


def test_repeater_curve_takes_memory_time(runner: CliRunner, tmp_path) -> None:
    path = str(tmp_path / "repeater.csv")
    result = runner.invoke(cli, ["--param", "repeater.e_ma=0.02", "--out", path, "curve", "--calculator", "repeater",
                                 "--loss-range", "10", "20", "10", "--t2", "5ms", "--midpoint"])
    assert result.exit_code == 0
    assert (tmp_path / "repeater.csv").read_text().splitlines()[0].endswith(",frac_to_alice")
    parameters = read_manifest(path).parameters
    assert parameters["repeater"]["t2_s"] == pytest.approx(0.005)
    assert parameters["repeater"]["e_ma"] == 0.02


def test_rate_exit_codes(runner: CliRunner, tmp_path) -> None:
    path = str(tmp_path / "rate.json")
    result = runner.invoke(cli, ["--format", "json", "--out", path, "rate", "--calculator", "bb84-asymptotic", "--loss", "10"])
    assert result.exit_code == 0
    assert json.loads((tmp_path / "rate.json").read_text())["feasible"] is True
    result = runner.invoke(cli, ["rate", "--calculator", "bb84-asymptotic", "--loss", "60"])
    assert result.exit_code == 4


def test_bad_parameters_exit_2(runner: CliRunner) -> None:
    assert runner.invoke(cli, ["--param", "receiver.p_dc", "presets"]).exit_code == 2
    assert runner.invoke(cli, ["--param", "p_mis=0.02", "rate", "--calculator", "bb84-asymptotic", "--loss", "5"]).exit_code == 2
    assert runner.invoke(cli, ["--preset", "nope", "rate", "--calculator", "bb84-asymptotic", "--loss", "5"]).exit_code == 2
    assert runner.invoke(cli, ["--param", "repeater.f=0.5", "curve", "--calculator", "repeater"]).exit_code == 2


def test_sift_and_curve_are_reproducible(runner: CliRunner, tmp_path) -> None:
    tags, table, path = str(tmp_path / "tags.qtt1"), tmp_path / "sift.csv", tmp_path / "curve.csv"
    assert _generate(runner, tags).exit_code == 0
    commands = (
        (table, ["--out", str(table), "sift", tags, "--t0", "0", "--dt", "5"]),
        (path, ["--out", str(path), "curve", "--calculator", "bb84-asymptotic", "--loss-range", "0", "10", "5"]),
    )
    for out, args in commands:
        assert runner.invoke(cli, args).exit_code == 0
        first = (out.read_bytes(), (tmp_path / f"{out.name}.manifest.json").read_bytes(), read_manifest(str(out)).input_hash)
        assert runner.invoke(cli, args).exit_code == 0
        second = (out.read_bytes(), (tmp_path / f"{out.name}.manifest.json").read_bytes(), read_manifest(str(out)).input_hash)
        assert first == second
        assert first[2]


def test_plot_option_writes_svg(runner: CliRunner, tmp_path) -> None:
    tags, figure = str(tmp_path / "tags.qtt1"), tmp_path / "curve.svg"
    result = runner.invoke(cli, ["--out", str(tmp_path / "curve.csv"), "curve", "--calculator", "bb84-asymptotic",
                                 "--loss-range", "0", "10", "5", "--plot", str(figure)])
    assert result.exit_code == 0
    assert "<svg" in figure.read_text()

    assert _generate(runner, tags).exit_code == 0
    heatmap = tmp_path / "sweep.svg"
    result = runner.invoke(cli, ["--out", str(tmp_path / "sweep.csv"), "sift", tags, "--sweep", "--t0-range", "0", "1", "0.5",
                                 "--dt-range", "3", "5", "1", "--plot", str(heatmap)])
    assert result.exit_code == 0
    assert "<svg" in heatmap.read_text()
    assert (tmp_path / "sweep_skr.csv").exists()
