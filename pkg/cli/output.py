"""Terminal summaries and deterministic CSV/JSON writers for the CLI."""

import csv
import io
import json
import os
from typing import Any, Dict, Iterable, List, Optional, Sequence

import click
import numpy as np
from colorama import Fore, Style

from timetag.sifting import FilterSweepResult


def success(message: str) -> None:
    click.echo(f"{Fore.GREEN}{message}{Style.RESET_ALL}", err=True)


def warn(message: str) -> None:
    click.echo(f"{Fore.YELLOW}Warning: {message}{Style.RESET_ALL}", err=True)


def fail(message: str) -> None:
    click.echo(f"{Fore.RED}Error: {message}{Style.RESET_ALL}", err=True)


def fmt_value(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def csv_text(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt_value(v) for v in row])
    return buffer.getvalue()


def json_text(data: Any) -> str:
    return json.dumps(data, indent=2, sort_keys=True, default=_json_default) + "\n"


def _json_default(value: Any) -> Any:
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    raise TypeError(f"Cannot serialise {type(value).__name__}")


def emit(text: str, out: Optional[str]) -> List[str]:
    """Write ``text`` to ``out`` or stdout; returns the paths written."""
    if out is None:
        click.echo(text, nl=False)
        return []
    with open(out, "w", encoding="utf-8", newline="") as f:
        f.write(text)
    return [out]


def map_csv_text(sweep: FilterSweepResult, values: np.ndarray) -> str:
    """One sweep map: first column t0 (ns), one column per dt (ns)."""
    header = ["t0_ns\\dt_ns"] + [fmt_value(float(d)) for d in sweep.dt_grid]
    rows = ([float(t0)] + [float(v) for v in values[i]] for i, t0 in enumerate(sweep.t0_grid))
    return csv_text(header, rows)


def sweep_paths(out: str) -> Dict[str, str]:
    """``sweep.csv`` becomes ``sweep_sikr.csv``, ``sweep_qber.csv`` and ``sweep_skr.csv``."""
    stem, ext = os.path.splitext(out)
    return {name: f"{stem}_{name}{ext or '.csv'}" for name in ("sikr", "qber", "skr")}


def sweep_summary(sweep: FilterSweepResult) -> Dict[str, Any]:
    i, j = sweep.argmax()
    best = sweep.cell(i, j)
    return {
        "t0_grid_ns": [float(x) for x in sweep.t0_grid],
        "dt_grid_ns": [float(x) for x in sweep.dt_grid],
        "best": {
            "t0_ns": float(sweep.t0_grid[i]),
            "dt_ns": float(sweep.dt_grid[j]),
            "sikr_bps": best.sikr_bps,
            "qber": best.qber,
            "skr_bps": float(sweep.skr_map[i, j]),
        },
        "n_pulses": sweep.n_pulses,
        "duration_s": sweep.duration_s,
    }
