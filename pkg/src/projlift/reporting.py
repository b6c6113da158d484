"""Report emission: delimited data, JSON reports, gnuplot scripts, and
rendered matplotlib figures.

Numeric text uses shortest round-trip float repr so that a rerun with the
same seed reproduces every CSV/JSON byte for byte.  Figures are rendered
headlessly to PNG next to the data they plot; the gnuplot scripts reference
the same CSV files for anyone replotting outside Python.
"""

from __future__ import annotations

import dataclasses
import json
import os
from typing import Iterable

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .linalg import Subspace


def fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return str(x)


def write_csv(path, header: list[str], rows: Iterable) -> None:
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(fmt(x) for x in row) + "\n")


def to_jsonable(obj):
    """Recursively convert reports/dataclasses/arrays to JSON-safe values."""
    if isinstance(obj, Subspace):
        return {"dim": obj.dim, "ambient_dim": obj.ambient_dim,
                "basis": [[float(x) for x in col] for col in obj.basis.T]}
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        out = {}
        for f in dataclasses.fields(obj):
            if f.name in ("trace",):  # bulky raw trajectories go to CSV, not JSON
                continue
            out[f.name] = to_jsonable(getattr(obj, f.name))
        return out
    if isinstance(obj, np.ndarray):
        return [to_jsonable(x) for x in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if np.isfinite(v) else repr(v)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(x) for x in obj]
    return obj


def write_json(path, payload) -> None:
    with open(path, "w") as fh:
        json.dump(to_jsonable(payload), fh, indent=2, sort_keys=True)
        fh.write("\n")


# ---------------------------------------------------------------------------
# gnuplot emission


def gnuplot_script(csv_name: str, columns: list[tuple[int, str]], title: str,
                   xlabel: str, ylabel: str, out_name: str) -> str:
    plots = ", \\\n    ".join(
        f"'{csv_name}' using 1:{c} with lines title '{label}'"
        for c, label in columns
    )
    return (
        "set datafile separator ','\n"
        "set key outside\n"
        f"set title '{title}'\n"
        f"set xlabel '{xlabel}'\n"
        f"set ylabel '{ylabel}'\n"
        "set term pngcairo size 900,600\n"
        f"set output '{out_name}'\n"
        f"plot {plots}\n"
    )


def write_gnuplot(path, script: str) -> None:
    with open(path, "w") as fh:
        fh.write(script)


# ---------------------------------------------------------------------------
# figures


def _new_axes(title: str, xlabel: str, ylabel: str):
    fig, ax = plt.subplots(figsize=(7.0, 4.4))
    ax.set_title(title)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.grid(alpha=0.3)
    return fig, ax


def _save(fig, path) -> None:
    fig.savefig(path, dpi=120, bbox_inches="tight")
    plt.close(fig)


def render_drift_trace(path, drift: np.ndarray, title: str = "drift trace") -> None:
    fig, ax = _new_axes(title, "step", "log(||t|| + 1)")
    step = max(1, len(drift) // 4000)  # thin long traces, keep the envelope
    ax.plot(np.arange(0, len(drift), step), drift[::step], lw=0.8)
    _save(fig, path)


def render_escape_curve(path, radius_grid, fractions, title: str = "escape profile") -> None:
    fig, ax = _new_axes(title, "radius R", "fraction of steps with drift > R")
    ax.plot(radius_grid, fractions, marker="o")
    ax.set_ylim(-0.02, 1.02)
    _save(fig, path)


def render_spectrum(path, values, stderrs, title: str = "Lyapunov spectrum") -> None:
    fig, ax = _new_axes(title, "index", "exponent (nats/step)")
    idx = np.arange(1, len(values) + 1)
    ax.errorbar(idx, values, yerr=3.0 * np.asarray(stderrs), fmt="s", capsize=4)
    ax.set_xticks(idx)
    _save(fig, path)


def render_levels(path, levels, title: str = "growth levels") -> None:
    fig, ax = _new_axes(title, "level", "exponent (nats/step)")
    idx = np.arange(1, len(levels) + 1)
    ax.step(idx, levels, where="mid", marker="o")
    ax.set_xticks(idx)
    _save(fig, path)


def render_cloud(path, points: np.ndarray, weights: np.ndarray,
                 title: str = "occupation cloud") -> None:
    """Scatter of the first two coordinates of the cloud representatives."""
    fig, ax = _new_axes(title, "coordinate 1", "coordinate 2")
    n = len(points)
    keep = slice(None) if n <= 20000 else slice(0, n, n // 20000)
    size = 40.0 * weights[keep] * len(points)
    ax.scatter(points[keep, 0], points[keep, 1], s=np.clip(size, 1.0, 30.0), alpha=0.35)
    ax.set_xlim(-1.05, 1.05)
    ax.set_ylim(-1.05, 1.05)
    _save(fig, path)
