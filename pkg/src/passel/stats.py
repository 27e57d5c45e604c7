"""Assignment diagnostics: scatter records, point-IoU histograms,
label-crossing matrices, and their CSV serializations.

These artifacts quantify how often box overlap and point overlap
disagree, and how many anchors change label under the point-assisted
scheme.  Aggregations are plain tallies, so partial results from
parallel scene workers merge deterministically.

CSV schemas (header row, UTF-8, ratios with 6 decimals):

* assignment: frame_id,class,anchor_index,best_gt,iou_box,iou_point,
  score,adjusted_score,legacy_label,pass_label
* scatter:    frame_id,anchor_index,gt_index,iou_box,iou_point,
  legacy_label,pass_label
* histogram:  bin_lo,bin_hi,count
* crossing:   legacy,pass,count
"""

from __future__ import annotations

import csv
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .assignment import AssignmentResult, SampleLabel

_KINDS = (SampleLabel.POSITIVE, SampleLabel.NEGATIVE, SampleLabel.IGNORED)
_KIND_POS = {kind: i for i, kind in enumerate(_KINDS)}


@dataclass(frozen=True)
class ScatterRecord:
    """One anchor's matched-pair measurements, for distribution plots."""

    frame_id: str
    anchor_index: int
    gt_index: int
    iou_box: float
    iou_point: float
    legacy_label: SampleLabel
    pass_label: SampleLabel


@dataclass(frozen=True)
class Histogram:
    bin_edges: tuple[float, ...]
    counts: tuple[int, ...]
    label_filter: SampleLabel

    @property
    def total(self) -> int:
        return sum(self.counts)


@dataclass(frozen=True)
class CrossingMatrix:
    """Counts of (legacy label, pass label) transitions.

    Rows and columns are ordered positive, negative, ignored.  The
    negative-to-positive and positive-to-negative corners are provably
    zero for any equal-weight assignment output.
    """

    counts: tuple[tuple[int, int, int], ...]

    @property
    def total(self) -> int:
        return sum(sum(row) for row in self.counts)

    def count(self, legacy: SampleLabel, pass_: SampleLabel) -> int:
        return self.counts[_KIND_POS[legacy]][_KIND_POS[pass_]]


def collect_scatter(
    results: Iterable[AssignmentResult], near_gt_only: bool = True
) -> list[ScatterRecord]:
    """One record per anchor from its matched pair.

    ``near_gt_only`` keeps anchors whose matched pair has positive box
    IoU.  Matched anchors missing point data raise: run the assignment
    with ``record_point_iou=True`` before collecting.  Unmatched
    anchors (kept only with ``near_gt_only=False``) are recorded with
    gt_index -1 and zero overlaps.
    """
    records: list[ScatterRecord] = []
    for res in results:
        if near_gt_only and res.iou_box <= 0.0:
            continue
        if res.best_gt is None:
            point = 0.0
            gt_index = -1
        else:
            if res.iou_point is None:
                raise ValueError(
                    "assignment results lack point IoU; rerun with record_point_iou=True"
                )
            point = res.iou_point
            gt_index = res.best_gt
        records.append(
            ScatterRecord(
                frame_id=res.frame_id or "",
                anchor_index=res.anchor_index,
                gt_index=gt_index,
                iou_box=res.iou_box,
                iou_point=point,
                legacy_label=res.legacy_label,
                pass_label=res.pass_label,
            )
        )
    return records


def histogram_iou_point(
    records: Iterable[ScatterRecord],
    label_kind: SampleLabel,
    bin_edges: Sequence[float],
) -> Histogram:
    """Histogram of point IoU among records with the given legacy label.

    Values landing on an interior edge count toward the higher bin;
    1.0 lands in the last bin.  Edges must ascend and cover [0, 1].
    """
    edges = np.asarray(bin_edges, dtype=np.float64)
    if len(edges) < 2 or np.any(np.diff(edges) <= 0):
        raise ValueError("bin edges must be strictly ascending")
    if edges[0] > 0.0 or edges[-1] < 1.0:
        raise ValueError("bin edges must cover [0, 1]")
    values = [r.iou_point for r in records if r.legacy_label is label_kind]
    counts, _ = np.histogram(np.asarray(values, dtype=np.float64), bins=edges)
    return Histogram(
        bin_edges=tuple(float(e) for e in edges),
        counts=tuple(int(c) for c in counts),
        label_filter=label_kind,
    )


def uniform_bins(n: int = 20) -> tuple[float, ...]:
    """n equal-width bin edges over [0, 1]."""
    return tuple(np.linspace(0.0, 1.0, n + 1))


def crossing_matrix(records: Iterable) -> CrossingMatrix:
    """Tally legacy-to-pass label transitions over any record stream."""
    counts = [[0, 0, 0], [0, 0, 0], [0, 0, 0]]
    for rec in records:
        counts[_KIND_POS[rec.legacy_label]][_KIND_POS[rec.pass_label]] += 1
    return CrossingMatrix(tuple(tuple(row) for row in counts))


def subsample_records(
    records: Sequence[ScatterRecord], limit: int, seed: int = 0
) -> list[ScatterRecord]:
    """Seeded sample without replacement, original order preserved."""
    if limit >= len(records):
        return list(records)
    rng = np.random.default_rng(seed)
    keep = np.sort(rng.choice(len(records), size=limit, replace=False))
    return [records[i] for i in keep]


def _ratio(value: float) -> str:
    return f"{value:.6f}"


def _open_writer(path: str | Path):
    f = open(path, "w", newline="", encoding="utf-8")
    return f, csv.writer(f, lineterminator="\n")


def write_scatter_csv(records: Iterable[ScatterRecord], path: str | Path) -> None:
    f, writer = _open_writer(path)
    with f:
        writer.writerow(
            ["frame_id", "anchor_index", "gt_index", "iou_box", "iou_point",
             "legacy_label", "pass_label"]
        )
        for r in records:
            writer.writerow(
                [r.frame_id, r.anchor_index, r.gt_index, _ratio(r.iou_box),
                 _ratio(r.iou_point), r.legacy_label.value, r.pass_label.value]
            )


def read_scatter_csv(path: str | Path) -> list[ScatterRecord]:
    with open(path, newline="", encoding="utf-8") as f:
        rows = list(csv.DictReader(f))
    return [
        ScatterRecord(
            frame_id=row["frame_id"],
            anchor_index=int(row["anchor_index"]),
            gt_index=int(row["gt_index"]),
            iou_box=float(row["iou_box"]),
            iou_point=float(row["iou_point"]),
            legacy_label=SampleLabel(row["legacy_label"]),
            pass_label=SampleLabel(row["pass_label"]),
        )
        for row in rows
    ]


def write_histogram_csv(hist: Histogram, path: str | Path) -> None:
    f, writer = _open_writer(path)
    with f:
        writer.writerow(["bin_lo", "bin_hi", "count"])
        for i, count in enumerate(hist.counts):
            writer.writerow(
                [_ratio(hist.bin_edges[i]), _ratio(hist.bin_edges[i + 1]), count]
            )


def read_histogram_csv(path: str | Path, label_filter: SampleLabel) -> Histogram:
    edges: list[float] = []
    counts: list[int] = []
    with open(path, newline="", encoding="utf-8") as f:
        for row in csv.DictReader(f):
            if not edges:
                edges.append(float(row["bin_lo"]))
            edges.append(float(row["bin_hi"]))
            counts.append(int(row["count"]))
    return Histogram(tuple(edges), tuple(counts), label_filter)


def write_crossing_csv(matrix: CrossingMatrix, path: str | Path) -> None:
    f, writer = _open_writer(path)
    with f:
        writer.writerow(["legacy", "pass", "count"])
        for legacy in _KINDS:
            for pass_ in _KINDS:
                writer.writerow([legacy.value, pass_.value, matrix.count(legacy, pass_)])


def read_crossing_csv(path: str | Path) -> CrossingMatrix:
    counts = [[0, 0, 0], [0, 0, 0], [0, 0, 0]]
    with open(path, newline="", encoding="utf-8") as f:
        for row in csv.DictReader(f):
            legacy = SampleLabel(row["legacy"])
            pass_ = SampleLabel(row["pass"])
            counts[_KIND_POS[legacy]][_KIND_POS[pass_]] = int(row["count"])
    return CrossingMatrix(tuple(tuple(row) for row in counts))


def write_assignment_csv(results: Iterable[AssignmentResult], path: str | Path) -> None:
    f, writer = _open_writer(path)
    with f:
        writer.writerow(
            ["frame_id", "class", "anchor_index", "best_gt", "iou_box", "iou_point",
             "score", "adjusted_score", "legacy_label", "pass_label"]
        )
        for r in results:
            writer.writerow(
                [
                    r.frame_id or "",
                    r.class_name,
                    r.anchor_index,
                    "" if r.best_gt is None else r.best_gt,
                    _ratio(r.iou_box),
                    "" if r.iou_point is None else _ratio(r.iou_point),
                    _ratio(r.score),
                    _ratio(r.adjusted_score),
                    r.legacy_label.value,
                    r.pass_label.value,
                ]
            )


def read_assignment_csv(path: str | Path) -> list[AssignmentResult]:
    with open(path, newline="", encoding="utf-8") as f:
        rows = list(csv.DictReader(f))
    return [
        AssignmentResult(
            frame_id=row["frame_id"] or None,
            class_name=row["class"],
            anchor_index=int(row["anchor_index"]),
            best_gt=int(row["best_gt"]) if row["best_gt"] != "" else None,
            iou_box=float(row["iou_box"]),
            iou_point=float(row["iou_point"]) if row["iou_point"] != "" else None,
            score=float(row["score"]),
            adjusted_score=float(row["adjusted_score"]),
            legacy_label=SampleLabel(row["legacy_label"]),
            pass_label=SampleLabel(row["pass_label"]),
        )
        for row in rows
    ]
