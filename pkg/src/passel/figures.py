"""Figure rendering for the report CSVs.

Each stats artifact gets a matplotlib rendering saved next to the
delimited output: the box/point IoU scatter, per-label point-IoU
histograms, and the label-crossing heatmap.  Rendering is optional
and kept out of the aggregation code; matplotlib is imported lazily
with the Agg backend so headless runs just work.
"""

from __future__ import annotations

from collections.abc import Sequence
from pathlib import Path

from .stats import CrossingMatrix, Histogram, ScatterRecord

_LABEL_COLORS = {"positive": "tab:red", "negative": "tab:blue", "ignored": "tab:gray"}
_KIND_ORDER = ("positive", "negative", "ignored")


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def save_scatter_figure(
    records: Sequence[ScatterRecord],
    path: str | Path,
    t_pos: float | None = None,
    t_neg: float | None = None,
) -> None:
    """Box IoU vs point IoU, one marker per anchor, colored by legacy label."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 5))
    for kind in _KIND_ORDER:
        xs = [r.iou_box for r in records if r.legacy_label.value == kind]
        ys = [r.iou_point for r in records if r.legacy_label.value == kind]
        if xs:
            ax.scatter(xs, ys, s=9, alpha=0.6, label=kind, color=_LABEL_COLORS[kind])
    if t_pos is not None:
        ax.axvline(t_pos, color="tab:red", linestyle=":", linewidth=1)
    if t_neg is not None:
        ax.axvline(t_neg, color="tab:orange", linestyle=":", linewidth=1)
    ax.set_xlim(0, 1)
    ax.set_ylim(0, 1)
    ax.set_xlabel("box IoU")
    ax.set_ylabel("point IoU")
    ax.legend(loc="upper left", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_histogram_figure(hist: Histogram, path: str | Path) -> None:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 4))
    lefts = hist.bin_edges[:-1]
    widths = [hi - lo for lo, hi in zip(hist.bin_edges[:-1], hist.bin_edges[1:])]
    ax.bar(lefts, hist.counts, width=widths, align="edge",
           color=_LABEL_COLORS[hist.label_filter.value], edgecolor="white")
    ax.set_xlabel("point IoU")
    ax.set_ylabel("anchors")
    ax.set_title(f"{hist.label_filter.value} samples (n={hist.total})", fontsize=10)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_crossing_figure(matrix: CrossingMatrix, path: str | Path) -> None:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(5, 4.5))
    grid = [[matrix.counts[i][j] for j in range(3)] for i in range(3)]
    im = ax.imshow(grid, cmap="Blues")
    for i in range(3):
        for j in range(3):
            ax.text(j, i, str(grid[i][j]), ha="center", va="center", fontsize=9)
    ax.set_xticks(range(3), _KIND_ORDER)
    ax.set_yticks(range(3), _KIND_ORDER)
    ax.set_xlabel("point-assisted label")
    ax.set_ylabel("threshold-only label")
    fig.colorbar(im, ax=ax, shrink=0.8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
