"""Median-and-quartile-band SVG plots from an aggregate CSV."""

from __future__ import annotations

import numpy as np

from ..errors import UsageError
from .experiment import METRICS, read_aggregate_csv

X_AXES = ("so_calls", "seconds", "iteration")


def emit_svg_plot(aggregate_csv, metric: str, out_path, x_axis: str = "so_calls") -> None:
    """Median line with a shaded 25th-75th percentile band, log-scale y.

    ``lambda_min`` can change sign, so it uses a symmetric-log axis. The SVG
    is byte-stable for identical input (fixed hash salt, no date stamp).
    """
    if metric not in METRICS:
        raise UsageError(f"unknown metric {metric!r}; choose from {METRICS}")
    if x_axis not in X_AXES:
        raise UsageError(f"unknown x axis {x_axis!r}; choose from {X_AXES}")
    rows = read_aggregate_csv(aggregate_csv)
    if not rows:
        raise UsageError(f"{aggregate_csv} has no snapshots")
    med = np.array([r[f"{metric}_median"] for r in rows])
    lo = np.array([r[f"{metric}_p25"] for r in rows])
    hi = np.array([r[f"{metric}_p75"] for r in rows])
    if not np.any(np.isfinite(med)):
        raise UsageError(f"metric column {metric!r} is empty")
    if x_axis == "iteration":
        x = np.arange(len(rows))
    elif x_axis == "so_calls":
        x = np.array([r["so_calls"] for r in rows], dtype=float)
    else:
        x = np.array([r["seconds_median"] for r in rows])

    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    with matplotlib.rc_context({"svg.hashsalt": "rsvrc", "svg.fonttype": "path"}):
        fig, ax = plt.subplots(figsize=(6, 4))
        ax.fill_between(x, lo, hi, alpha=0.3, linewidth=0)
        ax.plot(x, med, linewidth=1.5)
        if metric == "lambda_min":
            ax.set_yscale("symlog", linthresh=1e-8)
        elif np.all(med[np.isfinite(med)] > 0):
            ax.set_yscale("log")
        ax.set_xlabel({"so_calls": "SO calls", "seconds": "seconds", "iteration": "snapshot"}[x_axis])
        ax.set_ylabel(metric)
        ax.grid(True, which="major", alpha=0.3)
        fig.tight_layout()
        fig.savefig(out_path, format="svg", metadata={"Date": None})
        plt.close(fig)
