"""Render the four experiment figures from harness CSVs.

All figure values come straight from CSV cells; the only transforms here are
plotting ones (rolling means for convergence smoothing, mean/std shading
across seed files).  Output is deterministic for identical inputs: the SVG
hash salt is pinned and date metadata is stripped.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "vlcuav-figures"

import numpy as np
from matplotlib import pyplot as plt
from matplotlib.patches import Circle

from .schema import (
    COMPARISON_COLUMNS,
    CONVERGENCE_COLUMNS,
    GU_COLUMNS,
    KINDS,
    SWEEP_COLUMNS,
    TRAJ_COLUMNS,
    FigureInputError,
    float_or_none,
    read_rows,
)


@dataclass
class FigureSpec:
    kind: str
    inputs: list[str]
    output: str
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise FigureInputError(f"unknown figure kind '{self.kind}' (expected one of {KINDS})")
        if not self.inputs:
            raise FigureInputError("at least one input CSV is required")


def _fig_sweep(inputs, options):
    rows = read_rows(inputs[0], SWEEP_COLUMNS)
    fig, ax = plt.subplots(figsize=(5.0, 3.6))
    planners = sorted({r["planner"] for r in rows})
    for planner in planners:
        sub = [r for r in rows if r["planner"] == planner and r["feasible"] == "1"]
        hs = np.array([float(r["h"]) for r in sub])
        means = np.array([float_or_none(r["mean_distance"]) for r in sub], dtype=float)
        stds = np.array([float_or_none(r["std_distance"]) or 0.0 for r in sub], dtype=float)
        order = np.argsort(hs)
        hs, means, stds = hs[order], means[order], stds[order]
        ax.errorbar(hs, means, yerr=stds, marker="o", capsize=3, label=planner)
    h_star = float(rows[0]["h_star"])
    ax.axvline(h_star, color="crimson", linestyle="--", linewidth=1.0, label="closed-form optimum")
    ax.set_xlabel("altitude (m)")
    ax.set_ylabel("total flight distance (m)")
    ax.legend(fontsize=8)
    ax.grid(alpha=0.3)
    return fig


def _fig_trajectory(inputs, options):
    if len(inputs) < 2:
        raise FigureInputError("trajectory figure needs the episode CSV and the GU CSV")
    steps = read_rows(inputs[0], TRAJ_COLUMNS)
    gus = read_rows(inputs[1], GU_COLUMNS)
    fig, ax = plt.subplots(figsize=(4.6, 4.6))
    xs = np.array([float(r["x"]) for r in steps])
    ys = np.array([float(r["y"]) for r in steps])
    ax.plot(xs, ys, color="tab:blue", linewidth=1.2, label="UAV path")
    ax.plot(xs[0], ys[0], marker="s", color="tab:blue", markersize=6)
    for row in gus:
        gx, gy = float(row["x"]), float(row["y"])
        comm = float(row["comm_radius"])
        recep = float(row["reception_radius"])
        if comm > recep:
            raise FigureInputError(f"GU {row['gu']}: comm_radius exceeds reception_radius")
        ax.plot(gx, gy, marker="^", color="red", markersize=7, linestyle="none")
        ax.add_patch(Circle((gx, gy), comm, fill=False, linestyle="--", edgecolor="red", linewidth=0.9))
        ax.add_patch(Circle((gx, gy), recep, fill=False, linestyle="--", edgecolor="black", linewidth=0.9))
    served_steps = [i for i, r in enumerate(steps) if r["served_ids"]]
    if served_steps:
        ax.plot(xs[served_steps], ys[served_steps], marker="*", color="goldenrod",
                markersize=9, linestyle="none", label="serve events")
    ax.set_xlabel("x (m)")
    ax.set_ylabel("y (m)")
    ax.set_aspect("equal")
    ax.legend(fontsize=8, loc="upper right")
    return fig


def _fig_convergence(inputs, options):
    window = int(options.get("window", 25))
    series = []
    for path in inputs:
        rows = read_rows(path, CONVERGENCE_COLUMNS)
        returns = np.array([float(r["ep_return"]) for r in rows])
        series.append(returns)
    fig, ax = plt.subplots(figsize=(5.0, 3.6))

    def smooth(values):
        if len(values) < 2 or window <= 1:
            return values
        kernel = np.ones(min(window, len(values))) / min(window, len(values))
        return np.convolve(values, kernel, mode="valid")

    if len(series) == 1:
        sm = smooth(series[0])
        ax.plot(np.arange(len(sm)), sm, color="tab:blue")
        ax.plot(np.arange(len(series[0])), series[0], color="tab:blue", alpha=0.2, linewidth=0.6)
    else:
        # align on the shortest run, shade mean +/- std across seeds
        n = min(len(s) for s in series)
        stack = np.vstack([smooth(s[:n]) for s in series])
        x = np.arange(stack.shape[1])
        mean = stack.mean(axis=0)
        std = stack.std(axis=0)
        ax.plot(x, mean, color="tab:blue", label=f"mean of {len(series)} seeds")
        ax.fill_between(x, mean - std, mean + std, color="tab:blue", alpha=0.25, linewidth=0)
        ax.legend(fontsize=8)
    ax.set_xlabel("episode")
    ax.set_ylabel(f"episode return (window {window})")
    ax.grid(alpha=0.3)
    return fig


def _fig_comparison(inputs, options):
    rows = read_rows(inputs[0], COMPARISON_COLUMNS)
    fig, ax = plt.subplots(figsize=(5.0, 3.6))
    algorithms = sorted({r["algorithm"] for r in rows})
    counts = sorted({int(r["gu_count"]) for r in rows})
    width = 0.8 / len(algorithms)
    for j, algo in enumerate(algorithms):
        sub = {int(r["gu_count"]): r for r in rows if r["algorithm"] == algo}
        xs, means, stds = [], [], []
        for i, count in enumerate(counts):
            if count not in sub:
                continue
            xs.append(i + (j - (len(algorithms) - 1) / 2.0) * width)
            means.append(float(sub[count]["mean_distance"]))
            stds.append(float_or_none(sub[count]["std_distance"]) or 0.0)
        ax.bar(xs, means, width=width, yerr=stds, capsize=3, label=algo)
    ax.set_xticks(range(len(counts)))
    ax.set_xticklabels([str(c) for c in counts])
    ax.set_xlabel("number of GUs")
    ax.set_ylabel("total flight distance (m)")
    ax.legend(fontsize=8)
    ax.grid(alpha=0.3, axis="y")
    return fig


_RENDERERS = {
    "sweep": _fig_sweep,
    "trajectory": _fig_trajectory,
    "convergence": _fig_convergence,
    "comparison": _fig_comparison,
}


def render(spec: FigureSpec):
    """Build the figure in memory; raises before any file is touched."""
    fig = _RENDERERS[spec.kind](spec.inputs, spec.options)
    fig.tight_layout()
    return fig


def _save_metadata(suffix: str):
    if suffix == ".svg":
        return {"Date": None}
    if suffix == ".pdf":
        return {"CreationDate": None}
    return None


def render_to_file(spec: FigureSpec) -> list[Path]:
    """Render and write the requested file, plus a PNG sibling for vector outputs."""
    fig = render(spec)
    out = Path(spec.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    written = []
    try:
        fig.savefig(out, dpi=200, metadata=_save_metadata(out.suffix))
        written.append(out)
        if out.suffix in (".svg", ".pdf"):
            raster = out.with_suffix(".png")
            fig.savefig(raster, dpi=200)
            written.append(raster)
    finally:
        plt.close(fig)
    return written
