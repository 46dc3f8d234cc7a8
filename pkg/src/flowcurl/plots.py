"""Figure rendering for run artifacts. Pure file output (SVG), no display.

Three views per run: metric trajectories over training, the online
per-bin loss-profile series colored by training progress, and the
realized timestep sampling densities per curriculum phase with the
analytic pdf overlaid.
"""

from __future__ import annotations

import csv
import math

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .errors import InputError
from .timesteps import Curriculum, TimestepDistribution, pdf

_METRICS = ("sw2", "energy_dist", "mmd")


def read_runlog(path) -> dict:
    """runlog.csv -> dict of column arrays (metric columns may hold NaN)."""
    cols: dict = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        rows = list(reader)
    if not rows:
        raise InputError(f"run log {path} has no rows")
    for key in rows[0]:
        vals = [(float(r[key]) if r[key] != "" else math.nan) for r in rows]
        cols[key] = np.array(vals)
    return cols


def read_profile_series(path) -> list:
    """loss_profile.csv -> [(eval_step, t, mean, count)], one tuple per window."""
    windows: dict = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        for r in reader:
            step = int(r["eval_step"])
            windows.setdefault(step, []).append(
                (float(r["t"]),
                 float(r["loss_mean"]) if r["loss_mean"] != "" else math.nan,
                 int(r["loss_count"])))
    out = []
    for step in sorted(windows):
        rows = sorted(windows[step])
        t = np.array([v[0] for v in rows])
        mean = np.array([v[1] for v in rows])
        count = np.array([v[2] for v in rows], dtype=np.int64)
        out.append((step, t, mean, count))
    if not out:
        raise InputError(f"loss profile {path} has no rows")
    return out


def plot_metrics(runlog_path, out_path) -> str:
    """Metric-vs-step line chart; x is the (monotone) step column."""
    cols = read_runlog(runlog_path)
    step = cols["step"]
    fig, ax = plt.subplots(figsize=(7, 4.5))
    plotted = 0
    for name in _METRICS:
        mask = np.isfinite(cols[name])
        if np.any(mask):
            ax.plot(step[mask], cols[name][mask], marker="o", ms=3, label=name)
            plotted += 1
    if plotted == 0:
        plt.close(fig)
        raise InputError(f"run log {runlog_path} has no evaluated metrics to plot")
    ax.set_xlabel("step")
    ax.set_ylabel("distance")
    ax.set_yscale("log")
    ax.legend()
    ax.set_title("evaluation metrics over training")
    fig.tight_layout()
    fig.savefig(out_path)
    plt.close(fig)
    return str(out_path)


def plot_loss_profiles(profile_path, out_path) -> str:
    """Per-window online loss means vs t, sequential color ramp by step."""
    series = [w for w in read_profile_series(profile_path) if np.any(w[3] > 0)]
    if not series:
        raise InputError(f"loss profile {profile_path} is empty")
    cmap = plt.get_cmap("viridis")
    fig, ax = plt.subplots(figsize=(7, 4.5))
    hi = max(step for step, _, _, _ in series)
    for step, t, mean, count in series:
        mask = count > 0
        ax.plot(t[mask], mean[mask], color=cmap(step / hi), lw=1.2)
    sm = plt.cm.ScalarMappable(cmap=cmap, norm=plt.Normalize(0, hi))
    fig.colorbar(sm, ax=ax, label="training step")
    ax.set_xlabel("t")
    ax.set_ylabel("mean per-sample loss")
    ax.set_title("online loss profile over training windows")
    fig.tight_layout()
    fig.savefig(out_path)
    plt.close(fig)
    return str(out_path)


def plot_sampling_density(profile_path, sampler: TimestepDistribution,
                          out_path) -> str:
    """Realized t-draw histogram per phase with the analytic pdf overlaid.

    Curriculum schedules get two panels (phase 1, phase 2); static
    schedules get one.
    """
    series = read_profile_series(profile_path)
    if isinstance(sampler, Curriculum):
        switch = sampler.switch_step
        phases = [("phase 1", sampler.phase1,
                   [w for w in series if w[0] <= switch]),
                  ("phase 2", sampler.phase2,
                   [w for w in series if w[0] > switch])]
    else:
        phases = [("all steps", sampler, series)]

    fig, axes = plt.subplots(1, len(phases), figsize=(6 * len(phases), 4.2),
                             squeeze=False)
    drew = 0
    for ax, (title, dist, windows) in zip(axes[0], phases):
        counts = None
        centers = None
        for _, t, _, count in windows:
            counts = count.copy() if counts is None else counts + count
            centers = t
        if counts is None or counts.sum() == 0:
            ax.set_title(f"{title} (no draws)")
            continue
        drew += 1
        width = 1.0 / counts.size
        density = counts / (counts.sum() * width)
        ax.bar(centers, density, width=width, alpha=0.55, label="realized draws")
        grid = np.linspace(0.005, 0.995, 199)
        ax.plot(grid, [pdf(dist, g) for g in grid], "k-", lw=1.3, label="target pdf")
        ax.set_xlabel("t")
        ax.set_ylabel("density")
        ax.set_title(title)
        ax.legend()
    if drew == 0:
        plt.close(fig)
        raise InputError(f"loss profile {profile_path} records no draws")
    fig.tight_layout()
    fig.savefig(out_path)
    plt.close(fig)
    return str(out_path)


def plot_offline_profile(grid, losses, out_path, title="offline loss profile") -> str:
    """Single offline L(t) curve (the Figure-3-style U-shape view)."""
    grid = np.asarray(grid, dtype=np.float64)
    losses = np.asarray(losses, dtype=np.float64)
    if grid.size == 0:
        raise InputError("empty profile grid")
    fig, ax = plt.subplots(figsize=(7, 4.5))
    ax.plot(grid, losses, "o-", ms=3)
    ax.set_xlabel("t")
    ax.set_ylabel("L(t)")
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(out_path)
    plt.close(fig)
    return str(out_path)
