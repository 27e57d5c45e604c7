"""Training-sample selection: box-IoU thresholding plus the
point-assisted adjustment applied inside a dynamic score band.

The legacy scheme labels an anchor by comparing its best box IoU
against per-class thresholds.  The point-assisted scheme keeps that
score everywhere except inside the band [lower, upper] spanning the
thresholds, where the score is blended with a point-overlap term:

    adjusted = alpha * score + beta * (p * upper + (1 - p) * lower)

with p the point IoU of the pair and alpha + beta = 1.  With equal
weights the adjustment provably cannot move a negative sample into
the positive set or vice versa; scores that start inside the band
stay within it.  Out-of-band pairs keep their score bit for bit and
never trigger a point computation.
"""

from __future__ import annotations

import enum
import math
from collections.abc import Callable, Mapping, Sequence
from dataclasses import dataclass

import numpy as np

from .anchors import ClassAnchorSpec
from .batchgeom import bev_aabb, boxes_to_array, iou_one_to_many
from .cloud import BevGridIndex, EmptyUnionPolicy, PointCloud, points_in_box
from .geom import Box3D

_WEIGHT_TOL = 1e-12


class SampleLabel(enum.Enum):
    POSITIVE = "positive"
    NEGATIVE = "negative"
    IGNORED = "ignored"


@dataclass(frozen=True)
class SelectionParams:
    """Hyperparameters of the point-assisted selection.

    ``k`` controls the band width (larger k, narrower band) and must
    be >= 1: the no-crossing guarantees derive from that bound.
    """

    k: float = 5.0
    alpha: float = 0.5
    beta: float = 0.5
    empty_union_policy: EmptyUnionPolicy = EmptyUnionPolicy.ZERO

    def __post_init__(self) -> None:
        if not (math.isfinite(self.k) and self.k >= 1.0):
            raise ValueError(f"k must be >= 1, got {self.k}")
        if self.alpha < 0 or self.beta < 0:
            raise ValueError("alpha and beta must be non-negative")
        if abs(self.alpha + self.beta - 1.0) > _WEIGHT_TOL:
            raise ValueError(f"alpha + beta must equal 1, got {self.alpha + self.beta}")


@dataclass(frozen=True)
class Bounds:
    """Adjustment band around the selection thresholds."""

    upper: float
    lower: float


def compute_bounds(t_pos: float, t_neg: float, k: float) -> Bounds:
    """Band edges: thresholds pushed apart by (t_pos - t_neg) / k."""
    if not 0.0 < t_neg < t_pos < 1.0:
        raise ValueError(f"need 0 < t_neg < t_pos < 1, got t_pos={t_pos} t_neg={t_neg}")
    if not (math.isfinite(k) and k >= 1.0):
        raise ValueError(f"k must be >= 1, got {k}")
    margin = (t_pos - t_neg) / k
    return Bounds(upper=t_pos + margin, lower=t_neg - margin)


def legacy_assign(score: float, t_pos: float, t_neg: float) -> SampleLabel:
    """Threshold labeling; scores exactly on a threshold are ignored."""
    if score > t_pos:
        return SampleLabel.POSITIVE
    if score < t_neg:
        return SampleLabel.NEGATIVE
    return SampleLabel.IGNORED


def point_assisted_score(
    score: float, point_iou: float, bounds: Bounds, alpha: float, beta: float
) -> float:
    """Blend the box score with a point-overlap term mapped onto the band."""
    return alpha * score + beta * (point_iou * bounds.upper + (1.0 - point_iou) * bounds.lower)


def gated_pair_score(
    score: float,
    point_iou_provider: Callable[[], float | None],
    bounds: Bounds,
    params: SelectionParams,
) -> tuple[float, float | None]:
    """Adjust one pair score if it falls inside the band.

    The provider is only invoked in-band, so out-of-band pairs skip
    the (comparatively expensive) point computation entirely and keep
    their score unchanged.  A provider returning ``None`` (empty point
    union under the skip policy) also leaves the score untouched.
    Returns ``(adjusted_score, point_iou_or_None)``.
    """
    if not bounds.lower <= score <= bounds.upper:
        return score, None
    point_iou = point_iou_provider()
    if point_iou is None:
        return score, None
    return point_assisted_score(score, point_iou, bounds, params.alpha, params.beta), point_iou


@dataclass(frozen=True)
class AssignmentResult:
    """Per-anchor outcome of scene assignment.

    ``score`` is the box IoU of the matched pair (so it always equals
    ``iou_box``); ``adjusted_score`` equals ``score`` whenever the
    band gate skipped the pair.  ``anchor_index`` runs over the
    scene's anchors in iteration order, across classes.
    """

    frame_id: str | None
    class_name: str
    anchor_index: int
    best_gt: int | None
    iou_box: float
    iou_point: float | None
    score: float
    adjusted_score: float
    legacy_label: SampleLabel
    pass_label: SampleLabel


_LABELS = (SampleLabel.POSITIVE, SampleLabel.NEGATIVE, SampleLabel.IGNORED)


def _label_codes(values: np.ndarray, t_pos: float, t_neg: float) -> np.ndarray:
    codes = np.full(len(values), 2, dtype=np.int8)
    codes[values > t_pos] = 0
    codes[values < t_neg] = 1
    return codes


class _PointOverlap:
    """Cached point-membership queries for one scene and class."""

    def __init__(self, cloud: PointCloud, index: BevGridIndex | None):
        self.cloud = cloud
        self.index = index
        self.gt_masks: dict[int, tuple[int, np.ndarray]] = {}
        self.anchor_sets: dict[int, tuple[int, np.ndarray]] = {}

    def gt_membership(self, row: int, box: Box3D) -> tuple[int, np.ndarray]:
        hit = self.gt_masks.get(row)
        if hit is None:
            count, idx = points_in_box(self.cloud, self.index, box)
            mask = np.zeros(len(self.cloud), dtype=bool)
            mask[idx] = True
            hit = (count, mask)
            self.gt_masks[row] = hit
        return hit

    def anchor_indices(self, col: int, box: Box3D) -> tuple[int, np.ndarray]:
        hit = self.anchor_sets.get(col)
        if hit is None:
            count, idx = points_in_box(self.cloud, self.index, box)
            hit = (count, idx)
            self.anchor_sets[col] = hit
        return hit

    def pair_iou(
        self, row: int, gt_box: Box3D, col: int, anchor_box: Box3D
    ) -> tuple[int, int]:
        """(shared, union) point counts for one ground-truth/anchor pair."""
        n_gt, gt_mask = self.gt_membership(row, gt_box)
        n_anchor, anchor_idx = self.anchor_indices(col, anchor_box)
        shared = int(gt_mask[anchor_idx].sum()) if n_anchor else 0
        return shared, n_gt + n_anchor - shared


def assign_scene(
    cloud: PointCloud,
    gts: Sequence[tuple[Box3D, str]],
    anchors_by_class: Mapping[str, Sequence[Box3D]],
    specs: Mapping[str, ClassAnchorSpec],
    params: SelectionParams,
    index: BevGridIndex | None = None,
    point_assist: bool = True,
    record_point_iou: bool = False,
    force_match: bool = False,
    frame_id: str | None = None,
) -> list[AssignmentResult]:
    """Label every anchor of a scene against its same-class ground truths.

    The cloud is expected to be ground-removed already (the CLI wires
    that step).  For each anchor the box IoU against every same-class
    ground truth is computed (an AABB prefilter skips pairs whose
    footprints cannot overlap); pairs whose score falls inside the
    band get the point-assisted adjustment.  The anchor is matched to
    the ground truth with the highest adjusted score, ties to the
    lowest index; the legacy label thresholds the highest raw score,
    the pass label the highest adjusted one.  Anchors of a class with
    no ground truths are negative with zero scores.

    ``point_assist=False`` short-circuits to pure threshold labeling
    (both labels equal).  ``record_point_iou`` fills ``iou_point`` for
    every matched anchor even out of band, for diagnostics.
    ``force_match`` additionally marks each ground truth's
    highest-overlap anchor positive (a detector-replication heuristic,
    off by default).
    """
    for _, cls in gts:
        if cls not in specs:
            raise ValueError(f"unknown ground-truth class {cls!r}")
    for cls in anchors_by_class:
        if cls not in specs:
            raise ValueError(f"unknown anchor class {cls!r}")

    results: list[AssignmentResult] = []
    next_index = 0
    for cls, anchor_boxes in anchors_by_class.items():
        spec = specs[cls]
        rows = [(gi, box) for gi, (box, gcls) in enumerate(gts) if gcls == cls]
        results.extend(
            _assign_class(
                cloud,
                _PointOverlap(cloud, index),  # caches are class-local
                rows,
                list(anchor_boxes),
                spec,
                params,
                point_assist,
                record_point_iou,
                force_match,
                frame_id,
                cls,
                next_index,
            )
        )
        next_index += len(anchor_boxes)
    return results


def _assign_class(
    cloud: PointCloud,
    overlap: _PointOverlap,
    rows: list[tuple[int, Box3D]],
    anchor_boxes: list[Box3D],
    spec: ClassAnchorSpec,
    params: SelectionParams,
    point_assist: bool,
    record_point_iou: bool,
    force_match: bool,
    frame_id: str | None,
    cls: str,
    base_index: int,
) -> list[AssignmentResult]:
    na = len(anchor_boxes)
    if na == 0:
        return []
    if not rows:
        return [
            AssignmentResult(
                frame_id=frame_id,
                class_name=cls,
                anchor_index=base_index + a,
                best_gt=None,
                iou_box=0.0,
                iou_point=None,
                score=0.0,
                adjusted_score=0.0,
                legacy_label=SampleLabel.NEGATIVE,
                pass_label=SampleLabel.NEGATIVE,
            )
            for a in range(na)
        ]

    a7 = boxes_to_array(anchor_boxes)
    anchor_aabb = bev_aabb(a7)
    anchor_zlo = a7[:, 2] - a7[:, 5] / 2.0
    anchor_zhi = a7[:, 2] + a7[:, 5] / 2.0

    ng = len(rows)
    scores = np.zeros((ng, na), dtype=np.float64)
    g7 = boxes_to_array([box for _, box in rows])
    gt_aabb = bev_aabb(g7)
    for r in range(ng):
        cand = np.flatnonzero(
            (anchor_aabb[:, 0] <= gt_aabb[r, 2])
            & (anchor_aabb[:, 2] >= gt_aabb[r, 0])
            & (anchor_aabb[:, 1] <= gt_aabb[r, 3])
            & (anchor_aabb[:, 3] >= gt_aabb[r, 1])
            & (anchor_zlo <= g7[r, 2] + g7[r, 5] / 2.0)
            & (anchor_zhi >= g7[r, 2] - g7[r, 5] / 2.0)
        )
        if len(cand):
            scores[r, cand] = iou_one_to_many(g7[r], a7[cand])

    bounds = compute_bounds(spec.t_pos, spec.t_neg, params.k)
    adjusted = scores.copy()
    point_rec = np.full((ng, na), np.nan)

    if point_assist:
        band_r, band_c = np.nonzero((scores >= bounds.lower) & (scores <= bounds.upper))
        for r, a in zip(band_r.tolist(), band_c.tolist()):
            shared, union = overlap.pair_iou(r, rows[r][1], a, anchor_boxes[a])
            if union == 0:
                if params.empty_union_policy is EmptyUnionPolicy.SKIP:
                    continue  # leave the box score in place
                p = 0.0
            else:
                p = shared / union
            point_rec[r, a] = p
            adjusted[r, a] = point_assisted_score(
                scores[r, a], p, bounds, params.alpha, params.beta
            )

    cols = np.arange(na)
    legacy_raw = scores.max(axis=0)
    best_rows = np.argmax(adjusted, axis=0)  # first max: lowest gt index wins ties
    score_pair = scores[best_rows, cols]
    adj_pair = adjusted[best_rows, cols]
    point_pair = point_rec[best_rows, cols]
    matched = ((scores > 0.0) | (adjusted != scores)).any(axis=0)

    score_out = np.where(matched, score_pair, 0.0)
    adj_out = np.where(matched, adj_pair, 0.0)
    legacy_codes = _label_codes(legacy_raw, spec.t_pos, spec.t_neg)
    pass_codes = _label_codes(adj_out, spec.t_pos, spec.t_neg)

    best_out: list[int | None] = [
        rows[best_rows[a]][0] if matched[a] else None for a in range(na)
    ]
    point_out: list[float | None] = [
        float(point_pair[a]) if matched[a] and not math.isnan(point_pair[a]) else None
        for a in range(na)
    ]

    if force_match:
        forced: dict[int, int] = {}
        for r in range(ng):
            a_star = int(np.argmax(scores[r]))
            if scores[r, a_star] <= 0.0:
                continue
            prev = forced.get(a_star)
            if prev is None or scores[r, a_star] > scores[prev, a_star]:
                forced[a_star] = r
        for a_star, r in forced.items():
            legacy_codes[a_star] = 0
            pass_codes[a_star] = 0
            best_out[a_star] = rows[r][0]
            score_out[a_star] = scores[r, a_star]
            adj_out[a_star] = adjusted[r, a_star]
            point_out[a_star] = (
                float(point_rec[r, a_star]) if not math.isnan(point_rec[r, a_star]) else None
            )

    if record_point_iou:
        for a in range(na):
            if best_out[a] is None or point_out[a] is not None:
                continue
            r = int(best_rows[a])
            shared, union = overlap.pair_iou(r, rows[r][1], a, anchor_boxes[a])
            point_out[a] = shared / union if union else 0.0

    return [
        AssignmentResult(
            frame_id=frame_id,
            class_name=cls,
            anchor_index=base_index + a,
            best_gt=best_out[a],
            iou_box=float(score_out[a]),
            iou_point=point_out[a],
            score=float(score_out[a]),
            adjusted_score=float(adj_out[a]),
            legacy_label=_LABELS[legacy_codes[a]],
            pass_label=_LABELS[pass_codes[a]],
        )
        for a in range(na)
    ]
