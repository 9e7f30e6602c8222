"""Matplotlib renderers for the report path.

Every CLI report writes a PNG next to its delimited output. Categorical
colors are keyed by a stable hash of the category name so palettes survive
reruns and match across figures.
"""
from __future__ import annotations

import hashlib
from pathlib import Path
from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

_PALETTE = plt.get_cmap("tab10").colors


def color_for_category(name: str):
    """Stable palette assignment from the md5 of the category name."""
    digest = hashlib.md5(name.encode("utf-8")).digest()
    return _PALETTE[digest[0] % len(_PALETTE)]


def scatter_projection(
    coords: np.ndarray,
    categories: Sequence[str],
    path: str | Path,
    title: str = "projection",
) -> None:
    """2-d scatter colored by category, one legend entry per category."""
    coords = np.asarray(coords, dtype=np.float64)
    fig, ax = plt.subplots(figsize=(7, 6))
    seen: list[str] = []
    for cat in categories:
        if cat not in seen:
            seen.append(cat)
    cats = np.asarray(categories)
    for cat in seen:
        mask = cats == cat
        ax.scatter(
            coords[mask, 0], coords[mask, 1],
            s=8, alpha=0.7, label=cat, color=color_for_category(cat),
        )
    ax.set_title(title)
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    ax.legend(markerscale=2, fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def interval_plot(
    names: Sequence[str],
    points: Sequence[float],
    intervals: Sequence[tuple[float, float]],
    path: str | Path,
    ylabel: str,
    title: str,
) -> None:
    """Point estimates with CI whiskers, one column per name."""
    xs = np.arange(len(names))
    pts = np.asarray(points, dtype=np.float64)
    los = np.array([iv[0] for iv in intervals])
    his = np.array([iv[1] for iv in intervals])
    fig, ax = plt.subplots(figsize=(1.4 * max(len(names), 3) + 2, 4))
    ax.errorbar(
        xs, pts, yerr=np.vstack([pts - los, his - pts]),
        fmt="o", capsize=5, color="#1f4e79",
    )
    ax.set_xticks(xs)
    ax.set_xticklabels(names, rotation=20, ha="right")
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.grid(True, axis="y", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def scatter_xy(
    x: np.ndarray,
    y: np.ndarray,
    path: str | Path,
    xlabel: str,
    ylabel: str,
    title: str,
) -> None:
    """Plain scatter with the identity line for prediction-vs-actual views."""
    fig, ax = plt.subplots(figsize=(5, 5))
    ax.scatter(x, y, s=8, alpha=0.5, color="#1f4e79")
    lo = min(float(np.min(x)), float(np.min(y)))
    hi = max(float(np.max(x)), float(np.max(y)))
    ax.plot([lo, hi], [lo, hi], color="gray", lw=1, ls="--")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def accuracy_comparison(
    labels: Sequence[str],
    reports: Mapping[str, tuple[float, float, float]],
    path: str | Path,
    title: str = "accuracy",
) -> None:
    """Bars with CI whiskers for (point, lo, hi) accuracy triples."""
    xs = np.arange(len(labels))
    pts = np.array([reports[k][0] for k in labels])
    los = np.array([reports[k][1] for k in labels])
    his = np.array([reports[k][2] for k in labels])
    fig, ax = plt.subplots(figsize=(1.6 * max(len(labels), 2) + 2, 4))
    ax.bar(xs, pts, width=0.6, color=[color_for_category(k) for k in labels], alpha=0.8)
    ax.errorbar(
        xs, pts, yerr=np.vstack([pts - los, his - pts]),
        fmt="none", capsize=5, ecolor="black",
    )
    ax.set_xticks(xs)
    ax.set_xticklabels(labels, rotation=15, ha="right")
    ax.set_ylim(0, 1.05)
    ax.set_ylabel("accuracy")
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
