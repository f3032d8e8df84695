"""Figure rendering for the report paths (headless, file output only)."""

from __future__ import annotations

from pathlib import Path

import matplotlib
import numpy as np

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  backend must be set first

from .spectral import HullReport

DPI = 120


def render_loss_curve(trace: list[tuple[float, float, float]], path: str | Path) -> Path:
    """Continuous, discrete and total loss per Adam iteration."""
    arr = np.asarray(trace, dtype=np.float64).reshape(-1, 3)
    it = np.arange(arr.shape[0])
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.plot(it, arr[:, 0], label="loss_C", lw=1.0)
    if np.any(arr[:, 1] > 0):
        ax.plot(it, arr[:, 1], label="loss_D", lw=1.0)
    ax.plot(it, arr[:, 2], label="total", lw=1.2, color="black", alpha=0.7)
    ax.set_xlabel("iteration")
    ax.set_ylabel("loss")
    ax.set_title("training loss")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=DPI)
    plt.close(fig)
    return Path(path)


def render_score_series(
    scores: np.ndarray,
    flags: np.ndarray,
    threshold_value: float,
    first_timestep: int,
    path: str | Path,
    labels: np.ndarray | None = None,
) -> Path:
    """Forecast scores with the calibrated threshold, flags and label spans."""
    t = first_timestep + np.arange(scores.shape[0])
    fig, ax = plt.subplots(figsize=(9, 4))
    if labels is not None:
        run_start = None
        for i, v in enumerate(labels):
            if v == 1 and run_start is None:
                run_start = i
            elif v == 0 and run_start is not None:
                ax.axvspan(run_start, i, color="orange", alpha=0.2, lw=0)
                run_start = None
        if run_start is not None:
            ax.axvspan(run_start, len(labels), color="orange", alpha=0.2, lw=0)
    ax.plot(t, scores, lw=0.8, label="forecast score")
    ax.axhline(threshold_value, color="red", ls="--", lw=1.0, label="threshold")
    flagged = np.flatnonzero(flags)
    if flagged.size:
        ax.scatter(t[flagged], scores[flagged], color="red", s=12, zorder=3, label="flagged")
    ax.set_xlabel("timestep")
    ax.set_ylabel("score")
    ax.set_title("proactive detection")
    ax.legend(loc="best")
    fig.tight_layout()
    fig.savefig(path, dpi=DPI)
    plt.close(fig)
    return Path(path)


def _hull2d(points: np.ndarray) -> np.ndarray:
    """Andrew's monotone chain; returns hull vertices in order (closed use)."""
    pts = np.unique(points, axis=0)
    if pts.shape[0] <= 2:
        return pts

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower = []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper = []
    for p in pts[::-1]:
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return np.array(lower[:-1] + upper[:-1])


def render_hull_scatter(
    report: HullReport,
    train_magnitudes: dict[str, np.ndarray],
    path: str | Path,
) -> Path:
    """Per-feature scatter of the first two magnitude coordinates.

    The outline is the 2-D hull of the projected training points; anomaly
    samples are colored by the full-dimensional membership verdict.
    """
    n = len(report.features)
    ncols = min(n, 3)
    nrows = (n + ncols - 1) // ncols
    fig, axes = plt.subplots(nrows, ncols, figsize=(4.2 * ncols, 3.6 * nrows), squeeze=False)
    for k, feat in enumerate(report.features):
        ax = axes[k // ncols][k % ncols]
        train = np.asarray(train_magnitudes[feat.feature])[:, :2]
        ax.scatter(train[:, 0], train[:, 1], s=6, alpha=0.35, label="train")
        hull = _hull2d(train)
        if hull.shape[0] >= 2:
            closed = np.vstack([hull, hull[:1]])
            ax.plot(closed[:, 0], closed[:, 1], color="tab:blue", lw=1.0, alpha=0.8)
        inside = np.array([s.magnitudes[:2] for s in feat.samples if s.inside])
        outside = np.array([s.magnitudes[:2] for s in feat.samples if not s.inside])
        if inside.size:
            ax.scatter(inside[:, 0], inside[:, 1], s=16, color="green", label="anomaly inside")
        if outside.size:
            ax.scatter(outside[:, 0], outside[:, 1], s=16, color="red", label="anomaly outside")
        ax.set_title(f"{feat.feature} (outside {feat.outside_fraction:.1%})")
        ax.set_xlabel("|X0|")
        ax.set_ylabel("|X1|")
        if k == 0:
            ax.legend(fontsize=8)
    for k in range(n, nrows * ncols):
        axes[k // ncols][k % ncols].axis("off")
    fig.tight_layout()
    fig.savefig(path, dpi=DPI)
    plt.close(fig)
    return Path(path)
