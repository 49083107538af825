"""Figure rendering for simulation reports and benchmark tables.

Figures are written next to the delimited output files; they are a
convenience view, never a data interface.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def render_event_timeline(reports, positions, out_path) -> None:
    """Cumulative event and edge-change counts over time, plus the final
    point layout for planar datasets."""
    planar = positions is not None and positions.shape[1] == 2
    fig, axes = plt.subplots(1, 2 if planar else 1, figsize=(9 if planar else 5.5, 3.6))
    ax0 = axes[0] if planar else axes
    if reports:
        times = [r.time for r in reports]
        swaps = np.cumsum([1 if r.kind == "swap" else 0 for r in reports])
        knn = np.cumsum([1 if r.kind == "knn" else 0 for r in reports])
        edges = np.cumsum([len(r.edges_added) + len(r.edges_removed) for r in reports])
        ax0.step(times, swaps, where="post", label="projection swaps")
        ax0.step(times, knn, where="post", label="length reorders")
        ax0.step(times, edges, where="post", label="edge changes")
        ax0.legend(fontsize=8)
    else:
        ax0.text(0.5, 0.5, "no events", ha="center", va="center", transform=ax0.transAxes)
    ax0.set_xlabel("time")
    ax0.set_ylabel("cumulative count")
    ax0.set_title("event timeline")
    if planar:
        ax1 = axes[1]
        ax1.scatter(positions[:, 0], positions[:, 1], s=12)
        ax1.set_title("final positions")
        ax1.set_aspect("equal", adjustable="datalim")
    fig.tight_layout()
    fig.savefig(out_path, dpi=120)
    plt.close(fig)


def render_bench_table(rows, out_path) -> None:
    """Bar chart of the timed benchmark phases."""
    timings = [(f"{phase}:{metric}", value) for phase, metric, value in rows
               if metric.endswith("seconds")]
    fig, ax = plt.subplots(figsize=(6.5, 3.2))
    if timings:
        labels, values = zip(*timings)
        ax.barh(range(len(values)), values)
        ax.set_yticks(range(len(values)), labels, fontsize=8)
        ax.set_xlabel("seconds")
    else:
        ax.text(0.5, 0.5, "no timed phases", ha="center", va="center", transform=ax.transAxes)
    ax.set_title("benchmark phases")
    fig.tight_layout()
    fig.savefig(out_path, dpi=120)
    plt.close(fig)
