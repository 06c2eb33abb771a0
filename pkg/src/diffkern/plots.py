"""Figure rendering for run reports.

Every CLI report writes its figures next to the CSV output: learning
curves in dB, side-by-side true/reconstructed field contours, the
update-count/error trade-off over the slab width, and per-algorithm
cost bars.  Rendering always goes through the Agg backend so reports
work headless.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def plot_nmse(curves: dict, path) -> None:
    """Learning curves (NMSE in dB over iterations), one line per label."""
    fig, ax = plt.subplots(figsize=(7, 4))
    for label, curve in curves.items():
        ax.plot(curve.iterations, curve.nmse_db, label=label, linewidth=1.2)
    ax.set_xlabel("iteration")
    ax.set_ylabel("NMSE [dB]")
    ax.grid(True, alpha=0.4)
    if len(curves) > 1:
        ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_field_contour(
    points, true_values, estimates, path, positions=None, centers=None
) -> None:
    """Side-by-side contour plots of the true field and its reconstruction.

    Optionally overlays node positions (open circles) and the dictionary
    centers chosen among them (filled circles).
    """
    resolution = int(round(np.sqrt(len(points))))
    x1 = points[:, 0].reshape(resolution, resolution)
    x2 = points[:, 1].reshape(resolution, resolution)
    true_grid = np.asarray(true_values).reshape(resolution, resolution)
    est_grid = np.asarray(estimates).reshape(resolution, resolution)
    levels = np.linspace(
        min(true_grid.min(), est_grid.min()), max(true_grid.max(), est_grid.max()), 15
    )
    fig, axes = plt.subplots(1, 2, figsize=(10, 4), sharey=True)
    for ax, grid, title in zip(axes, (true_grid, est_grid), ("true field", "reconstruction")):
        cs = ax.contourf(x1, x2, grid, levels=levels, cmap="viridis")
        if positions is not None:
            ax.plot(positions[:, 0], positions[:, 1], "o", mfc="none", mec="limegreen",
                    ms=4, linestyle="none")
        if centers is not None:
            ax.plot(centers[:, 0], centers[:, 1], "o", color="limegreen", ms=4,
                    linestyle="none")
        ax.set_title(title)
        ax.set_xlabel("x1")
        ax.set_aspect("equal")
    axes[0].set_ylabel("x2")
    fig.colorbar(cs, ax=axes, shrink=0.9)
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_sweep(points, path) -> None:
    """Update counts (log scale) and steady NMSE against the slab width."""
    eps = [p.epsilon for p in points]
    updates = [p.mean_updates for p in points]
    nmse_db = [p.steady_nmse_db for p in points]
    fig, ax1 = plt.subplots(figsize=(7, 4))
    ax1.semilogy(eps, updates, "o-", color="tab:blue")
    ax1.set_xlabel("slab half-width")
    ax1.set_ylabel("updates per node", color="tab:blue")
    ax1.tick_params(axis="y", labelcolor="tab:blue")
    ax1.grid(True, alpha=0.4)
    ax2 = ax1.twinx()
    ax2.plot(eps, nmse_db, "s--", color="tab:red")
    ax2.set_ylabel("steady-state NMSE [dB]", color="tab:red")
    ax2.tick_params(axis="y", labelcolor="tab:red")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_complexity(rows, path) -> None:
    """Grouped log-scale bars: multiplications and transmitted scalars."""
    labels = [r.algorithm for r in rows]
    mults = [r.multiplications for r in rows]
    overhead = [r.transmitted_scalars for r in rows]
    x = np.arange(len(labels))
    fig, ax = plt.subplots(figsize=(8, 4))
    ax.bar(x - 0.2, mults, width=0.4, label="multiplications")
    ax.bar(x + 0.2, overhead, width=0.4, label="transmitted scalars")
    ax.set_yscale("log")
    ax.set_xticks(x)
    ax.set_xticklabels(labels, rotation=20, ha="right")
    ax.set_ylabel("count per network iteration")
    ax.grid(True, axis="y", alpha=0.4)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
