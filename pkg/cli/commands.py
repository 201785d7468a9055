"""
Command-line interface.

Global options select the parameter set (``--preset`` or ``--params-file``,
refined with ``--param key=value``), the seed, the output format and the
output path. Every file written with ``--out`` gets a ``.manifest.json``
sibling describing how it was produced.

Exit codes: 0 success, 2 usage or parameter error, 3 malformed tag file,
4 infeasible single-point query or estimate.
"""

import dataclasses
import functools
import logging
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import click

from b92.finite import B92Input, key_length_b92, skr_map_from_sweep
from core.errors import InfeasibleError, ParameterError, QkdLabError
from core.params import ProtocolInstance
from core.presets import apply_overrides, get_preset, list_presets, load_parameter_file, parse_override_value
from optimizer.curve import build_curve, compare_curves, curve_csv_text, loss_grid, read_curve_csv, tolerable_loss
from optimizer.search import CALCULATORS, optimize_point
from repeater.model import RepeaterParams
from repeater.placement import build_repeater_curve, direct_curve, parse_duration
from runtime.manifest import RunManifest, hash_inputs, write_manifest
from timetag.generator import generate_stream
from timetag.sifting import FilterWindow, SiftedStats, sift, sweep_filters
from timetag.statistics import fit_lifetime, g2_histogram
from timetag.stream import TagStream
from timetag.tagio import read_tags, write_tags

from . import output

logger = logging.getLogger("cli")

CURVE_CALCULATORS = CALCULATORS + ("repeater", "direct")
SIFT_COLUMNS = (
    "t0_ns", "dt_ns", "n_received", "n_errors", "n_double", "n_empty", "sikr_bps", "qber", "key_len_bits", "skr_bps",
)
LIFETIME_COLUMNS = ("tau_ns", "amplitude", "rms_residual", "n_events", "fit_start_ns", "fit_stop_ns", "n_bins")
REPEATER_PREFIX = "repeater."


@dataclasses.dataclass
class CliContext:
    preset: Optional[str]
    params_file: Optional[str]
    overrides: Dict[str, Any]
    repeater_overrides: Dict[str, Any]
    seed: int
    fmt: str
    out: Optional[str]

    def instance(self) -> ProtocolInstance:
        base = load_parameter_file(self.params_file) if self.params_file else get_preset(self.preset)
        return apply_overrides(base, self.overrides)

    def repeater(self, repeater_set: Optional[str] = None, t2: Optional[str] = None) -> RepeaterParams:
        overrides = dict(self.repeater_overrides)
        try:
            if t2 is not None:
                overrides["t2_s"] = parse_duration(t2)
            return RepeaterParams.from_preset(repeater_set, **overrides)
        except ValueError as e:
            if isinstance(e, QkdLabError):
                raise
            raise ParameterError(f"Invalid repeater parameters: {e}") from e

    def finish(self, command: str, outputs: List[str], inputs: Sequence[str] = (), parameters: Optional[Dict[str, Any]] = None) -> None:
        """Write the manifest next to the primary output file."""
        if not outputs:
            return
        parameters = parameters or {}
        manifest = RunManifest(
            command=command,
            preset=self.preset,
            overrides={**self.overrides, **{REPEATER_PREFIX + k: v for k, v in self.repeater_overrides.items()}},
            seed=self.seed,
            parameters=parameters,
            inputs=list(inputs),
            outputs=outputs,
            input_hash=hash_inputs(inputs, {"command": command, "preset": self.preset, "overrides": self.overrides,
                                            "repeater": self.repeater_overrides, "seed": self.seed, **parameters}),
        )
        write_manifest(outputs[0], manifest)


def _parse_params(values: Sequence[str]) -> Tuple[Dict[str, Any], Dict[str, Any]]:
    overrides: Dict[str, Any] = {}
    repeater: Dict[str, Any] = {}
    for item in values:
        key, sep, raw = item.partition("=")
        if not sep or not key:
            raise click.BadParameter(f"'{item}' is not KEY=VALUE", param_hint="--param")
        if key.startswith(REPEATER_PREFIX):
            repeater[key[len(REPEATER_PREFIX):]] = parse_override_value(raw)
        else:
            overrides[key] = parse_override_value(raw)
    return overrides, repeater


def handle_errors(fn: Callable) -> Callable:
    """Turn domain errors into a red message and their exit code."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        ctx = click.get_current_context()
        try:
            return fn(*args, **kwargs)
        except QkdLabError as e:
            logger.error(f"{ctx.command.name} failed: {e}")
            output.fail(str(e))
            ctx.exit(e.exit_code)
        except OSError as e:
            logger.error(f"{ctx.command.name} failed: {e}")
            output.fail(f"{getattr(e, 'filename', None) or ''} {e.strerror or e}".strip())
            ctx.exit(1)

    return wrapper


@click.group()
@click.option("--preset", default=None, help="Parameter preset id (baseline, improved, qd).")
@click.option("--params-file", type=click.Path(exists=True, dir_okay=False), default=None, help="JSON parameter document laid out like a preset.")
@click.option("--param", "params", multiple=True, metavar="KEY=VALUE",
              help="Override a parameter, e.g. receiver.p_dc=1e-6 or repeater.t2_s=0.005.")
@click.option("--seed", type=int, default=1, show_default=True, help="Seed for synthetic streams.")
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv", show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="Output file; stdout when omitted.")
@click.pass_context
def cli(ctx: click.Context, preset, params_file, params, seed, fmt, out):
    """Key-rate toolkit for single-photon QKD links."""
    overrides, repeater = _parse_params(params)
    ctx.obj = CliContext(
        preset=preset,
        params_file=params_file,
        overrides=overrides,
        repeater_overrides=repeater,
        seed=seed,
        fmt=fmt,
        out=out,
    )


@cli.command()
@click.pass_obj
@handle_errors
def presets(obj: CliContext):
    """List the shipped parameter presets."""
    for preset_id in list_presets():
        click.echo(preset_id)


@cli.command()
@click.option("--duration", type=click.FloatRange(min=0, min_open=True), required=True, help="Acquisition time in seconds.")
@click.option("--tag-format", type=click.Choice(["qtt1", "csv"]), default=None,
              help="Tag file format; inferred from the --out extension by default.")
@click.pass_obj
@handle_errors
def generate(obj: CliContext, duration, tag_format):
    """Write a synthetic time-tag file for the selected parameter set."""
    if obj.out is None:
        raise click.UsageError("generate needs --out")
    inst = obj.instance()
    tag_format = tag_format or ("csv" if obj.out.lower().endswith(".csv") else "qtt1")
    stream = generate_stream(inst, duration, obj.seed)
    written = write_tags(stream, obj.out, tag_format)
    obj.finish("generate", [obj.out], parameters={"duration_s": duration, "tag_format": tag_format})
    output.success(f"Wrote {written} records ({stream.n_triggers} triggers, {stream.n_events} detections) to {obj.out}")


def _load_stream(path: str, period_ps: Optional[int], alice_seed: Optional[int]) -> TagStream:
    stream = read_tags(path, period_ps)
    if alice_seed is not None:
        stream = dataclasses.replace(stream, metadata={**stream.metadata, "alice_seed": alice_seed})
    return stream


def _sift_row(window: FilterWindow, stats: Optional[SiftedStats], inst: ProtocolInstance, block_s: float) -> Dict[str, Any]:
    row: Dict[str, Any] = {"t0_ns": window.t0_ns, "dt_ns": window.dt_ns}
    if stats is None:
        row.update({"n_received": 0, "n_errors": 0, "n_double": 0, "n_empty": 0, "sikr_bps": 0.0, "qber": 0.0,
                    "key_len_bits": 0.0, "skr_bps": 0.0})
        return row
    row.update(stats.model_dump(include={"n_received", "n_errors", "n_double", "n_empty", "sikr_bps", "qber"}))
    n_r = stats.sikr_bps * block_s
    key = 0.0
    if n_r >= 1:
        key = key_length_b92(B92Input(n_r=n_r, qber=stats.qber, security=inst.security, block_s=block_s)).key_len_bits
    row.update({"key_len_bits": key, "skr_bps": key / block_s})
    return row


@cli.command("sift")
@click.argument("tag_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--t0", type=float, default=None, help="Window start after the trigger (ns).")
@click.option("--dt", type=float, default=None, help="Window width (ns).")
@click.option("--sweep", is_flag=True, help="Sweep the (t0, dt) grid instead of one window.")
@click.option("--t0-range", nargs=3, type=float, default=(0.0, 4.0, 0.1), show_default=True, help="START STOP STEP in ns.")
@click.option("--dt-range", nargs=3, type=float, default=(3.0, 12.0, 0.1), show_default=True, help="START STOP STEP in ns.")
@click.option("--block", "block_s", type=click.FloatRange(min=0, min_open=True), default=1.0, show_default=True,
              help="Block duration in seconds for the finite-key rate.")
@click.option("--period-ps", type=int, default=None, help="Trigger period for CSV files with irregular triggers.")
@click.option("--alice-seed", type=int, default=None, help="Seed of a random Alice pattern (alternating when omitted).")
@click.option("--plot", type=click.Path(dir_okay=False), default=None, help="Also save SVG heatmaps of the sweep.")
@click.pass_obj
@handle_errors
def sift_command(obj: CliContext, tag_path, t0, dt, sweep, t0_range, dt_range, block_s, period_ps, alice_seed, plot):
    """
    Sift a tag file with one temporal window or sweep a window grid.

    A single window writes one row with columns t0_ns, dt_ns, n_received,
    n_errors, n_double, n_empty, sikr_bps, qber, key_len_bits, skr_bps. A
    sweep with --out X.csv writes X_sikr.csv, X_qber.csv and X_skr.csv
    (rows t0, columns dt) and reports the best cell.
    """
    inst = obj.instance()
    stream = _load_stream(tag_path, period_ps, alice_seed)
    parameters: Dict[str, Any] = {"block_s": block_s, "alice_seed": alice_seed}

    if not sweep:
        if t0 is None or dt is None:
            raise click.UsageError("give --t0 and --dt, or --sweep")
        try:
            window = FilterWindow(t0_ns=t0, dt_ns=dt)
        except ValueError as e:
            raise click.BadParameter(str(e), param_hint="--t0/--dt")
        stats = None
        if stream.n_triggers == 0:
            output.warn(f"{tag_path} has no trigger records; reporting zero statistics")
        else:
            try:
                stats = sift(stream, window)
            except ValueError as e:
                raise click.BadParameter(str(e), param_hint="--t0/--dt")
            if stats.n_received == 0:
                output.warn("no conclusive events in the window")
        row = _sift_row(window, stats, inst, block_s)
        text = output.json_text(row) if obj.fmt == "json" else output.csv_text(SIFT_COLUMNS, [[row[c] for c in SIFT_COLUMNS]])
        written = output.emit(text, obj.out)
        obj.finish("sift", written, [tag_path], {**parameters, "t0_ns": t0, "dt_ns": dt})
        output.success(f"SiKR {row['sikr_bps']:.1f} bit/s, QBER {100 * row['qber']:.2f} %, SKR {row['skr_bps']:.1f} bit/s")
        return

    if stream.n_triggers == 0:
        raise click.BadParameter(f"{tag_path} has no trigger records to sweep", param_hint="TAG_PATH")
    try:
        result = sweep_filters(stream, tuple(t0_range), tuple(dt_range))
    except ValueError as e:
        raise click.BadParameter(str(e), param_hint="--t0-range/--dt-range")
    result = skr_map_from_sweep(result, inst.security, block_s)
    summary = output.sweep_summary(result)
    parameters.update({"t0_range": list(t0_range), "dt_range": list(dt_range)})
    written: List[str] = []
    if obj.fmt == "json":
        data = {**summary, "sikr_map": result.sikr_map, "qber_map": result.qber_map, "skr_map": result.skr_map}
        written = output.emit(output.json_text(data), obj.out)
    elif obj.out is None:
        output.emit(output.json_text(summary), None)
    else:
        paths = output.sweep_paths(obj.out)
        for name, values in (("sikr", result.sikr_map), ("qber", result.qber_map), ("skr", result.skr_map)):
            written += output.emit(output.map_csv_text(result, values), paths[name])
    obj.finish("sift --sweep", written, [tag_path], parameters)
    if plot:
        from .plots import plot_sweep

        plot_sweep(result, plot)
    best = summary["best"]
    output.success(
        f"Best window t0={best['t0_ns']:g} ns, dt={best['dt_ns']:g} ns: SiKR {best['sikr_bps']:.1f} bit/s, "
        f"QBER {100 * best['qber']:.2f} %, SKR {best['skr_bps']:.1f} bit/s"
    )


@cli.command()
@click.option("--calculator", type=click.Choice(CURVE_CALCULATORS), default="bb84-finite", show_default=True)
@click.option("--ts", "t_s", type=click.FloatRange(min=0, min_open=True), default=None, help="Block time in seconds (finite BB84).")
@click.option("--loss-range", nargs=3, type=float, default=(0.0, 35.0, 0.5), show_default=True, help="START STOP STEP in dB.")
@click.option("--t2", default=None, help="Memory time for the repeater, e.g. 10ms, 0.005 or inf.")
@click.option("--repeater-set", default=None, help="Repeater parameter set id.")
@click.option("--midpoint", is_flag=True, help="Keep the repeater node at the midpoint.")
@click.option("--error-model", type=click.Choice(["qber", "printed"]), default="qber", show_default=True)
@click.option("--leak-model", type=click.Choice(["efficiency", "binomial"]), default="efficiency", show_default=True)
@click.option("--plot", type=click.Path(dir_okay=False), default=None, help="Also save an SVG of the curve.")
@click.pass_obj
@handle_errors
def curve(obj: CliContext, calculator, t_s, loss_range, t2, repeater_set, midpoint, error_model, leak_model, plot):
    """
    Optimised key rate against channel loss.

    CSV columns: loss_db, distance_km, rate_per_pulse, rate_bps, p_x_opt,
    eta_tr_opt, feasible, plus frac_to_alice for repeater curves.
    """
    try:
        losses = loss_grid(*loss_range)
    except ValueError as e:
        raise click.BadParameter(str(e), param_hint="--loss-range")
    parameters: Dict[str, Any] = {"calculator": calculator, "loss_range": list(loss_range)}
    if calculator in ("repeater", "direct"):
        params = obj.repeater(repeater_set, t2)
        parameters.update({"repeater": params.model_dump(mode="json"), "midpoint": midpoint})
        result = build_repeater_curve(params, losses, optimise=not midpoint) if calculator == "repeater" else direct_curve(params, losses)
    else:
        inst = obj.instance()
        parameters.update({"t_s": t_s, "error_model": error_model, "leak_model": leak_model})
        result = build_curve(calculator, inst, tuple(loss_range), t_s=t_s, error_model=error_model, leak_model=leak_model)

    if obj.fmt == "json":
        written = output.emit(output.json_text(result.model_dump(mode="json")), obj.out)
    else:
        written = output.emit(curve_csv_text(result), obj.out)
    obj.finish("curve", written, parameters=parameters)
    if plot:
        from .plots import plot_curves

        plot_curves([result], plot)

    limit = tolerable_loss(result)
    if limit is None:
        output.warn(f"{calculator} rate is zero over the whole loss range")
    else:
        output.success(f"{calculator}: positive key up to {limit:g} dB")


@cli.command()
@click.argument("curve_a", type=click.Path(exists=True, dir_okay=False))
@click.argument("curve_b", type=click.Path(exists=True, dir_okay=False))
@click.option("--sample-step", type=click.FloatRange(min=0, min_open=True), default=5.0, show_default=True,
              help="Loss spacing of the reported rate ratios (dB).")
@click.pass_obj
@handle_errors
def compare(obj: CliContext, curve_a, curve_b, sample_step):
    """Report where CURVE_A overtakes CURVE_B and where each stops producing key (JSON)."""
    try:
        a = read_curve_csv(curve_a, calculator="a")
        b = read_curve_csv(curve_b, calculator="b")
        report = compare_curves(a, b, sample_step_db=sample_step)
    except (ValueError, KeyError) as e:
        raise click.BadParameter(str(e), param_hint="CURVE_A/CURVE_B")
    written = output.emit(output.json_text(report.model_dump(mode="json")), obj.out)
    obj.finish("compare", written, [curve_a, curve_b], {"sample_step_db": sample_step})
    if report.found:
        output.success(f"Crossover at {report.crossover_db:.2f} dB")
    else:
        output.warn("No crossover on the shared loss grid")


@cli.command()
@click.option("--calculator", type=click.Choice(CALCULATORS), default="bb84-finite", show_default=True)
@click.option("--loss", "loss_db", type=click.FloatRange(min=0), required=True, help="Channel loss in dB.")
@click.option("--ts", "t_s", type=click.FloatRange(min=0, min_open=True), default=None)
@click.pass_obj
@handle_errors
def rate(obj: CliContext, calculator, loss_db, t_s):
    """Optimised key rate at a single loss; exits with code 4 when no key is possible."""
    inst = obj.instance()
    if t_s is not None:
        inst = inst.model_copy(update={"t_s": t_s})
    point = optimize_point(calculator, inst, loss_db)
    if not point.feasible:
        raise InfeasibleError(f"No positive {calculator} key rate at {loss_db:g} dB")
    data = point.model_dump()
    columns = ("loss_db", "rate_per_pulse", "rate_bps", "p_x", "eta_pre", "feasible")
    text = output.json_text(data) if obj.fmt == "json" else output.csv_text(columns, [[data[c] for c in columns]])
    written = output.emit(text, obj.out)
    obj.finish("rate", written, parameters={"calculator": calculator, "loss_db": loss_db, "t_s": inst.t_s})
    output.success(f"{point.rate_bps:.4g} bit/s at p_x={point.p_x:.4f}, eta_pre={point.eta_pre:.4g}")


@cli.command()
@click.argument("tag_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--bin-ps", type=click.IntRange(min=1), default=100, show_default=True)
@click.option("--span-ns", type=click.FloatRange(min=0, min_open=True), default=125.0, show_default=True)
@click.option("--period-ps", type=int, default=None)
@click.option("--plot", type=click.Path(dir_okay=False), default=None)
@click.pass_obj
@handle_errors
def g2(obj: CliContext, tag_path, bin_ps, span_ns, period_ps, plot):
    """Coincidence histogram between the two detectors and the g2(0) estimate (CSV columns delay_ns, counts)."""
    stream = read_tags(tag_path, period_ps)
    try:
        result = g2_histogram(stream, bin_ps=bin_ps, span_ns=span_ns)
    except ValueError as e:
        if isinstance(e, QkdLabError):
            raise
        raise click.BadParameter(str(e), param_hint="--span-ns")
    if obj.fmt == "json":
        data = {
            "g2_zero": result.g2_zero,
            "n_coincidences": result.n_coincidences,
            "peak_offsets": result.peak_offsets,
            "peak_areas": result.peak_areas,
            "delay_ns": result.delay_ns,
            "counts": result.counts,
        }
        text = output.json_text(data)
    else:
        text = output.csv_text(("delay_ns", "counts"), zip(result.delay_ns.tolist(), result.counts.tolist()))
    written = output.emit(text, obj.out)
    obj.finish("g2", written, [tag_path], {"bin_ps": bin_ps, "span_ns": span_ns})
    if plot:
        from .plots import plot_g2

        plot_g2(result, plot)
    output.success(f"g2(0) = {result.g2_zero:.4f} from {result.n_coincidences} coincidences")


@cli.command()
@click.argument("tag_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--bin-ps", type=click.IntRange(min=1), default=None, help="Histogram bin (settings default).")
@click.option("--period-ps", type=int, default=None)
@click.pass_obj
@handle_errors
def lifetime(obj: CliContext, tag_path, bin_ps, period_ps):
    """Single-exponential lifetime fit to the arrival-offset histogram."""
    stream = read_tags(tag_path, period_ps)
    fit = fit_lifetime(stream, bin_ps=bin_ps)
    data = dataclasses.asdict(fit)
    text = output.json_text(data) if obj.fmt == "json" else output.csv_text(LIFETIME_COLUMNS, [[data[c] for c in LIFETIME_COLUMNS]])
    written = output.emit(text, obj.out)
    obj.finish("lifetime", written, [tag_path], {"bin_ps": bin_ps})
    output.success(f"tau = {fit.tau_ns:.3f} ns (rms residual {fit.rms_residual:.3g})")
