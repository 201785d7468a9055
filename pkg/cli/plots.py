"""Optional SVG figures for curves, sweeps and g2 histograms."""

import logging
from typing import Sequence

from optimizer.curve import RateCurve
from timetag.sifting import FilterSweepResult
from timetag.statistics import G2Result

logger = logging.getLogger("cli.plots")


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "qkdlab"
    return plt


def plot_curves(curves: Sequence[RateCurve], path: str) -> None:
    """Per-second key rate against loss on a log axis."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for curve in curves:
        points = [(loss, rate) for loss, rate in zip(curve.loss_db, curve.rate_bps) if rate > 0]
        if not points:
            continue
        label = curve.calculator + (f" t_s={curve.t_s:g} s" if curve.t_s else "") + (f" ({curve.preset})" if curve.preset else "")
        ax.semilogy([p[0] for p in points], [p[1] for p in points], label=label)
    ax.set_xlabel("Channel loss (dB)")
    ax.set_ylabel("Secure key rate (bit/s)")
    ax.grid(True, which="both", linestyle="--", alpha=0.5)
    ax.legend()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    logger.info(f"Saved curve plot to {path}")


def plot_sweep(sweep: FilterSweepResult, path: str) -> None:
    """SiKR, QBER and SKR heatmaps over (t0, dt)."""
    plt = _pyplot()
    fig, axes = plt.subplots(1, 3, figsize=(14, 4), sharey=True)
    extent = (sweep.dt_grid[0], sweep.dt_grid[-1], sweep.t0_grid[0], sweep.t0_grid[-1])
    for ax, data, title in zip(
        axes,
        (sweep.sikr_map, 100.0 * sweep.qber_map, sweep.skr_map),
        ("SiKR (bit/s)", "QBER (%)", "SKR (bit/s)"),
    ):
        image = ax.imshow(data, origin="lower", aspect="auto", extent=extent)
        ax.set_title(title)
        ax.set_xlabel("dt (ns)")
        fig.colorbar(image, ax=ax)
    axes[0].set_ylabel("t0 (ns)")
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    logger.info(f"Saved sweep plot to {path}")


def plot_g2(result: G2Result, path: str) -> None:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(8, 4))
    ax.plot(result.delay_ns, result.counts, drawstyle="steps-mid")
    ax.set_xlabel("Delay (ns)")
    ax.set_ylabel("Coincidences")
    ax.set_title(f"g2(0) = {result.g2_zero:.3f}")
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
