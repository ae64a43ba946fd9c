"""Figures rendered next to the delimited run outputs they mirror.

Rendering is file-only (Agg) and reproducible: fixed canvas geometry and
no software/date stamps in the PNG, so re-running a pipeline stage with
identical inputs rewrites identical figure bytes.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

__all__ = [
    "save_coverage_figure",
    "save_score_figure",
    "save_heatmap_figure",
]

_DPI = 110


def _save(fig, path: str, metadata: dict | None = None) -> None:
    meta = {"Software": None}
    if metadata:
        meta.update(metadata)
    fig.savefig(path, dpi=_DPI, metadata=meta)
    plt.close(fig)


def save_coverage_figure(generations, path: str,
                         metadata: dict | None = None) -> None:
    """Archive growth over a run: coverage and fitness against the
    evaluation counter."""
    evals = [g.evaluations for g in generations]
    fig, (top, bottom) = plt.subplots(
        2, 1, figsize=(6.4, 6.0), sharex=True,
        gridspec_kw={"hspace": 0.08})
    top.plot(evals, [g.coverage for g in generations],
             color="#2a6f97", lw=1.8)
    top.set_ylabel("coverage")
    top.set_ylim(bottom=0.0)
    top.grid(alpha=0.3)
    bottom.plot(evals, [g.best_fitness for g in generations],
                color="#c1121f", lw=1.8, label="best fitness")
    bottom.plot(evals, [g.mean_fitness for g in generations],
                color="#e8985e", lw=1.4, label="mean fitness")
    bottom.set_xlabel("evaluations")
    bottom.set_ylabel("fitness")
    bottom.grid(alpha=0.3)
    bottom.legend(loc="lower right", frameon=False)
    fig.suptitle("Repertoire growth")
    _save(fig, path, metadata)


def save_score_figure(scored, path: str,
                      metadata: dict | None = None) -> None:
    """Ranked elite scores with their two robustness components."""
    ranks = np.arange(1, len(scored) + 1)
    fig, ax = plt.subplots(figsize=(7.0, 4.2))
    ax.plot(ranks, [s.fitness for s in scored], color="#343a40",
            lw=1.8, label="fitness")
    ax.scatter(ranks, [s.quality.robustness for s in scored],
               s=14, color="#2a6f97", label="robustness (object pose)")
    ax.scatter(ranks, [s.quality.robustness_noise_joint for s in scored],
               s=14, color="#c1121f", marker="^",
               label="robustness (joints)")
    ax.set_xlabel("rank")
    ax.set_ylabel("score")
    ax.set_ylim(-0.05, 1.05)
    ax.grid(alpha=0.3)
    ax.legend(loc="lower left", frameon=False)
    ax.set_title("Ranked repertoire")
    _save(fig, path, metadata)


def save_heatmap_figure(result, path: str,
                        metadata: dict | None = None) -> None:
    """Per-orientation x-y maps of adapted-grasp feasibility, averaged
    over grid height."""
    nx, ny, nz = result.spec.divisions
    n_orient = len(result.spec.orientations)
    grid = result.feasible.reshape(nx, ny, nz, n_orient)
    cols = min(3, n_orient)
    rows = (n_orient + cols - 1) // cols
    fig, axes = plt.subplots(rows, cols,
                             figsize=(3.0 * cols + 1.2, 2.8 * rows),
                             squeeze=False)
    extent = (result.spec.box_min[0], result.spec.box_max[0],
              result.spec.box_min[1], result.spec.box_max[1])
    image = None
    for oi in range(rows * cols):
        ax = axes[oi // cols][oi % cols]
        if oi >= n_orient:
            ax.axis("off")
            continue
        plane = grid[:, :, :, oi].mean(axis=2)
        image = ax.imshow(plane.T, origin="lower", extent=extent,
                          vmin=0.0, vmax=float(result.n_sampled),
                          cmap="viridis", aspect="equal")
        ax.set_title(f"orientation {oi}", fontsize=9)
        if oi // cols == rows - 1:
            ax.set_xlabel("x [m]", fontsize=8)
        if oi % cols == 0:
            ax.set_ylabel("y [m]", fontsize=8)
        ax.tick_params(labelsize=7)
    if image is not None:
        fig.colorbar(image, ax=[a for row in axes for a in row],
                     shrink=0.85, label="feasible trajectories")
    fig.suptitle("Workspace feasibility")
    _save(fig, path, metadata)
