"""Report figures, rendered off-screen to PNG files."""
from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

RC = {
    "font.size": 9,
    "axes.labelsize": 9,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "svg.hashsalt": "demosplit",
}


def _save(fig, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    # no Software/date metadata, so reruns write identical bytes
    fig.savefig(path, dpi=120, metadata={"Software": None})
    plt.close(fig)
    return path


def speed_profile(profile, change_points: Sequence[float], path, truth: Sequence[float] | None = None):
    with plt.rc_context(RC):
        fig, ax = plt.subplots(figsize=(7, 2.6), layout="constrained")
        ax.plot(profile.t, profile.speed, color="0.2", lw=1.0, label=f"speed (window {profile.window})")
        for k, t in enumerate(change_points):
            ax.axvline(t, color="tab:red", lw=0.8, ls="--", label="detected" if k == 0 else None)
        for k, t in enumerate(truth or ()):
            ax.axvline(t, color="tab:blue", lw=0.8, alpha=0.5, label="true" if k == 0 else None)
        ax.set_xlabel("time [s]")
        ax.set_ylabel("hand speed [m/s]")
        ax.legend(loc="upper right", frameon=False)
        return _save(fig, path)


def distance_matrix(dist: np.ndarray, descriptions: Sequence[str], instructions: Sequence[str], ranges, path):
    """Heatmap of description-to-instruction distances with the chosen runs outlined."""
    m, n = dist.shape
    with plt.rc_context(RC):
        fig, ax = plt.subplots(figsize=(2.0 + 1.1 * n, 1.2 + 0.35 * m), layout="constrained")
        im = ax.imshow(dist, cmap="viridis_r", aspect="auto")
        mid = 0.5 * (dist.min() + dist.max())
        for i in range(m):
            for j in range(n):
                color = "w" if dist[i, j] > mid else "k"
                ax.text(j, i, f"{dist[i, j]:.2f}", ha="center", va="center", fontsize=7, color=color)
        for j, (a, b) in enumerate(ranges):
            ax.add_patch(plt.Rectangle((j - 0.5, a - 0.5), 1, b - a, fill=False, ec="tab:red", lw=2))
        ax.set_xticks(range(n), instructions, rotation=30, ha="right")
        ax.set_yticks(range(m), [f"{i}: {d}" for i, d in enumerate(descriptions)])
        fig.colorbar(im, ax=ax, label="distance")
        return _save(fig, path)


def recall_vs_fpr(sweep: Sequence[dict], path):
    with plt.rc_context(RC):
        fig, ax = plt.subplots(figsize=(3.6, 3.2), layout="constrained")
        for method, marker in (("velocity", "o"), ("uniform", "s")):
            pts = sorted(
                (p["mean_false_positive_rate"], p["mean_recall"], p["parameter"])
                for p in sweep
                if p["method"] == method
            )
            if not pts:
                continue
            x, y, _ = zip(*pts)
            ax.plot(x, y, marker=marker, ms=4, lw=1, label=method)
            for xi, yi, li in pts:
                ax.annotate(f"{li:g}", (xi, yi), textcoords="offset points", xytext=(3, 3), fontsize=6)
        ax.set_xlim(0, 1)
        ax.set_ylim(0, 1.02)
        ax.set_xlabel("false positive rate")
        ax.set_ylabel("recall")
        ax.legend(frameon=False, loc="center left")
        return _save(fig, path)


def ap_bars(report: dict, path):
    methods = [m for m in ("velocity", "uniform") if m in report]
    thresholds = list(report[methods[0]]["mean_ap_at"])
    x = np.arange(len(thresholds))
    width = 0.8 / len(methods)
    with plt.rc_context(RC):
        fig, ax = plt.subplots(figsize=(3.6, 2.8), layout="constrained")
        for k, m in enumerate(methods):
            vals = [report[m]["mean_ap_at"][t] for t in thresholds]
            ax.bar(x + (k - (len(methods) - 1) / 2) * width, vals, width, label=m)
        ax.set_xticks(x, [f"IoU {t}" for t in thresholds])
        ax.set_ylim(0, 1)
        ax.set_ylabel("AP")
        ax.legend(frameon=False)
        return _save(fig, path)


def articulation(points: np.ndarray, model, path):
    """Hand path with the fitted line or circle, in 3-D."""
    with plt.rc_context(RC):
        fig = plt.figure(figsize=(4, 4), layout="constrained")
        ax = fig.add_subplot(projection="3d")
        ax.plot(*points.T, ".", ms=2, color="0.3", label="hand")
        if model.kind == "prismatic":
            c = points.mean(axis=0)
            proj = (points - c) @ model.direction
            seg = c + np.outer([proj.min(), proj.max()], model.direction)
            ax.plot(*seg.T, color="tab:red", lw=1.5, label="line fit")
        else:
            u = points[0] - model.center
            u = u - (u @ model.axis) * model.axis
            u /= np.linalg.norm(u)
            v = np.cross(model.axis, u)
            th = np.linspace(0, model.swept_angle, 100)
            arc = model.center + model.radius * (np.outer(np.cos(th), u) + np.outer(np.sin(th), v))
            ax.plot(*arc.T, color="tab:red", lw=1.5, label="circle fit")
            ax.plot(*model.center, "x", color="tab:red")
        ax.set_xlabel("x [m]")
        ax.set_ylabel("y [m]")
        ax.set_zlabel("z [m]")
        ax.legend(frameon=False)
        return _save(fig, path)
