"""Static figures of runs and benchmark tables.

Every drawn element carries a ``gid`` so the SVG output can be inspected
structurally: ``obstacle-<i>``, ``reference-<r>``, ``trajectory-<r>``,
``start-<r>``, ``goal-<r>`` and ``footprint-<r>-<t>``.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from matplotlib.patches import Circle, Polygon  # noqa: E402
from scipy.spatial import ConvexHull  # noqa: E402

from ..dynamics import make_model  # noqa: E402
from ..geometry import Pose, pose_to_world  # noqa: E402

COLORS = ["tab:blue", "tab:green", "tab:purple", "tab:brown"]


def _hull(points):
    pts = np.asarray(points, dtype=float)
    if len(pts) < 3:
        return pts
    try:
        return pts[ConvexHull(pts).vertices]
    except Exception:
        return pts


def _views(dim):
    return [("top", (0, 1))] if dim == 2 else [("top", (0, 1)), ("side", (0, 2))]


def plot_run(record, cfg, path, footprint_every=10):
    """Write a figure of the obstacles, reference paths and closed-loop trajectories."""
    model = make_model(cfg.dimension, cfg.mpc.dt)
    views = _views(cfg.dimension)
    fig, axes = plt.subplots(len(views), 1, figsize=(7, 5.5 * len(views)), squeeze=False)
    for ax, (label, (a, b)) in zip(axes[:, 0], views):
        for i, obs in enumerate(cfg.obstacles):
            ax.add_patch(Polygon(_hull(obs.vertices[:, [a, b]]), closed=True, facecolor="0.55",
                                 edgecolor="0.2", lw=0.5, gid=f"obstacle-{i}"))
        for r, (track, spec) in enumerate(zip(record.tracks, cfg.robots)):
            color = COLORS[r % len(COLORS)]
            if track.reference_path is not None:
                ref = np.asarray(track.reference_path)
                ax.plot(ref[:, a], ref[:, b], color="tab:orange", lw=1.0, ls="--", gid=f"reference-{r}")
            X = np.asarray(track.states)
            ax.plot(X[:, a], X[:, b], color=color, lw=1.5, gid=f"trajectory-{r}")
            ax.add_patch(Circle((X[0, a], X[0, b]), 0.02, color="tab:green", gid=f"start-{r}"))
            ax.plot([spec.goal[a]], [spec.goal[b]], marker="p", color="tab:red", ms=12, ls="none",
                    gid=f"goal-{r}")
            for t in range(0, len(X), max(1, footprint_every)):
                pose = Pose(X[t, list(model.position_indices)], X[t, list(model.angle_indices)])
                for piece in pose_to_world(spec.shape, pose):
                    ax.add_patch(Polygon(_hull(piece.vertices[:, [a, b]]), closed=True, fill=False,
                                         edgecolor=color, lw=0.4, alpha=0.6, gid=f"footprint-{r}-{t}"))
        ax.set_xlim(cfg.lower[a] - 0.05, cfg.upper[a] + 0.05)
        ax.set_ylim(cfg.lower[b] - 0.05, cfg.upper[b] + 0.05)
        ax.set_aspect("equal")
        ax.set_xlabel("xyz"[a] + " [m]")
        ax.set_ylabel("xyz"[b] + " [m]")
        ax.set_title(f"{cfg.name} ({label} view): {record.outcome}")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path


def plot_benchmark(table, path):
    """Mean per-step time against horizon, one line per decay rate."""
    fig, ax = plt.subplots(figsize=(5, 3.5))
    gammas = sorted({row["gamma"] for row in table})
    for g in gammas:
        rows = sorted((r for r in table if r["gamma"] == g), key=lambda r: r["horizon"])
        ax.errorbar([r["horizon"] for r in rows], [r["mean_ms"] for r in rows],
                    yerr=[r["std_ms"] for r in rows], marker="o", capsize=3, label=f"gamma = {g:g}",
                    gid=f"bench-{g:g}")
    ax.set_xlabel("horizon N")
    ax.set_ylabel("time per step [ms]")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path
