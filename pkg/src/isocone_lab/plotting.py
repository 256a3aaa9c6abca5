"""Static SVG figures for CLI reports.

Figures are written with a fixed SVG hash salt and without date metadata
so identical inputs give byte-identical files.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

matplotlib.rcParams.update(
    {
        "svg.hashsalt": "isocone-lab",
        "svg.fonttype": "none",
        "font.size": 9,
        "axes.spines.top": False,
        "axes.spines.right": False,
    }
)

_METADATA = {"Date": None, "Creator": None}


def _save(fig, path: Path) -> Path:
    path = Path(path)
    fig.savefig(path, format="svg", metadata=_METADATA)
    plt.close(fig)
    return path


def order_scatter(points: np.ndarray, levels: np.ndarray, path, title: str = "") -> Path:
    """Points in the (x1, t) plane coloured by chain height in the order."""
    fig, ax = plt.subplots(figsize=(5, 4.5))
    x = points[:, 1] if points.shape[1] > 1 else np.zeros(points.shape[0])
    sc = ax.scatter(x, points[:, 0], c=levels, s=4, cmap="viridis", linewidths=0)
    fig.colorbar(sc, ax=ax, label="longest chain below")
    ax.set_xlabel("x1")
    ax.set_ylabel("t")
    ax.set_aspect("equal")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    return _save(fig, path)


def epsilon_histogram(balls: np.ndarray, lam: float, path, title: str = "") -> Path:
    """Histogram of per-point incomparability radii with the cutoff marked."""
    fig, ax = plt.subplots(figsize=(5, 3.2))
    finite = balls[np.isfinite(balls)]
    if finite.size:
        ax.hist(finite, bins=40, color="0.4")
    ax.axvline(lam, color="C3", lw=1, label=f"Λ = {lam:g}")
    ax.set_xlabel("distance to nearest comparable point")
    ax.set_ylabel("points")
    ax.legend(frameon=False)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    return _save(fig, path)


def cap_map_plot(xs: np.ndarray, radii_deg: np.ndarray, path, witness: int | None = None, title: str = "") -> Path:
    fig, ax = plt.subplots(figsize=(5, 3))
    ax.step(xs, radii_deg, where="mid", color="0.2")
    if witness is not None:
        ax.axvline(xs[witness], color="C3", lw=1, ls="--", label="l.h.c. witness")
        ax.legend(frameon=False)
    ax.set_xlabel("base point")
    ax.set_ylabel("cap angular radius (deg)")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    return _save(fig, path)
