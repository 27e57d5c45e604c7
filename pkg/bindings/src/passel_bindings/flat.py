"""Flat-array entry points.

Boxes travel as row-major float32 arrays with 7 values per row
``[x, y, z, l, w, h, yaw]``; points as 4 values per row
``(x, y, z, intensity)``.  Arrays may be passed flat (1-D) or already
shaped ``(n, 7)`` / ``(n, 4)``.  The float32 boundary is one-way: any
wider input is narrowed to float32 first, then widened to float64 for
the core computation, so results match the core bit for bit at 32-bit
output precision.

Labels are encoded as int8: +1 positive, -1 negative, 0 ignored.
Unmatched anchors carry ``best_gt = -1`` and ``iou_point = NaN``.
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

from passel.anchors import ClassAnchorSpec
from passel.assignment import SampleLabel, SelectionParams, assign_scene
from passel.cloud import EmptyUnionPolicy, PointCloud, build_index
from passel.geom import Box3D
from passel.ground import GroundRemovalParams, ransac_plane

LABEL_POSITIVE = 1
LABEL_NEGATIVE = -1
LABEL_IGNORED = 0

_LABEL_CODE = {
    SampleLabel.POSITIVE: LABEL_POSITIVE,
    SampleLabel.NEGATIVE: LABEL_NEGATIVE,
    SampleLabel.IGNORED: LABEL_IGNORED,
}


def _as_rows(array, width: int, name: str) -> np.ndarray:
    arr = np.asarray(array, dtype=np.float32)
    if arr.ndim == 1:
        if arr.size % width != 0:
            raise ValueError(
                f"{name} length must be divisible by {width}, got {arr.size}"
            )
        arr = arr.reshape(-1, width)
    elif arr.ndim != 2 or arr.shape[1] != width:
        raise ValueError(f"{name} must be flat or (n, {width}), got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr.astype(np.float64)


def _boxes(rows: np.ndarray) -> list[Box3D]:
    return [Box3D(*row) for row in rows]


def iou_box_matrix(gts, anchors) -> np.ndarray:
    """Pairwise volume IoU, shape (n_gts, n_anchors), float32."""
    from passel.batchgeom import iou_one_to_many

    g = _as_rows(gts, 7, "gts")
    a = _as_rows(anchors, 7, "anchors")
    out = np.zeros((len(g), len(a)), dtype=np.float32)
    for i in range(len(g)):
        out[i] = iou_one_to_many(g[i], a).astype(np.float32)
    return out


class AssignmentArrays(NamedTuple):
    """Parallel per-anchor outputs, in input anchor order."""

    legacy_label: np.ndarray   # int8 codes
    pass_label: np.ndarray     # int8 codes
    score: np.ndarray          # float32
    adjusted_score: np.ndarray  # float32
    best_gt: np.ndarray        # int32, -1 when unmatched
    iou_point: np.ndarray      # float32, NaN when not computed


def assign_scene_flat(
    points,
    gts,
    anchors,
    gt_classes,
    anchor_classes,
    class_thresholds,
    k: float = 5.0,
    alpha: float = 0.5,
    beta: float = 0.5,
    empty_union_policy: str = "zero",
    cell_size: float = 1.0,
    point_assist: bool = True,
) -> AssignmentArrays:
    """Scene assignment over flat arrays; equals the core result.

    ``class_thresholds`` is one ``(t_pos, t_neg)`` row per class id;
    ``gt_classes`` / ``anchor_classes`` hold row-parallel ids into it.
    """
    pts = _as_rows(points, 4, "points")
    g_rows = _as_rows(gts, 7, "gts")
    a_rows = _as_rows(anchors, 7, "anchors")
    g_cls = np.asarray(gt_classes, dtype=np.int64).reshape(-1)
    a_cls = np.asarray(anchor_classes, dtype=np.int64).reshape(-1)
    thresholds = np.asarray(class_thresholds, dtype=np.float64).reshape(-1, 2)
    if len(g_cls) != len(g_rows):
        raise ValueError(
            f"gt_classes has {len(g_cls)} entries for {len(g_rows)} boxes"
        )
    if len(a_cls) != len(a_rows):
        raise ValueError(
            f"anchor_classes has {len(a_cls)} entries for {len(a_rows)} boxes"
        )
    n_classes = len(thresholds)
    for name, ids in (("gt_classes", g_cls), ("anchor_classes", a_cls)):
        if len(ids) and (ids.min() < 0 or ids.max() >= n_classes):
            raise ValueError(f"{name} contains ids outside [0, {n_classes})")

    specs = {
        _class_name(c): ClassAnchorSpec(
            class_name=_class_name(c), l=1.0, w=1.0, h=1.0, z_center=0.0,
            rotations=(0.0,), t_pos=float(t_pos), t_neg=float(t_neg),
        )
        for c, (t_pos, t_neg) in enumerate(thresholds)
    }
    gt_list = [(box, _class_name(c)) for box, c in zip(_boxes(g_rows), g_cls)]

    anchors_by_class: dict[str, list[Box3D]] = {name: [] for name in specs}
    positions: dict[str, list[int]] = {name: [] for name in specs}
    for pos, (box, c) in enumerate(zip(_boxes(a_rows), a_cls)):
        anchors_by_class[_class_name(c)].append(box)
        positions[_class_name(c)].append(pos)

    cloud = PointCloud(pts[:, :3], pts[:, 3])
    index = build_index(cloud, cell_size) if len(cloud) else None
    params = SelectionParams(
        k=k, alpha=alpha, beta=beta,
        empty_union_policy=EmptyUnionPolicy(empty_union_policy),
    )
    results = assign_scene(
        cloud, gt_list, anchors_by_class, specs, params,
        index=index, point_assist=point_assist,
    )

    n = len(a_rows)
    out = AssignmentArrays(
        legacy_label=np.zeros(n, dtype=np.int8),
        pass_label=np.zeros(n, dtype=np.int8),
        score=np.zeros(n, dtype=np.float32),
        adjusted_score=np.zeros(n, dtype=np.float32),
        best_gt=np.full(n, -1, dtype=np.int32),
        iou_point=np.full(n, np.nan, dtype=np.float32),
    )
    flat_positions = [pos for name in specs for pos in positions[name]]
    for res, pos in zip(results, flat_positions):
        out.legacy_label[pos] = _LABEL_CODE[res.legacy_label]
        out.pass_label[pos] = _LABEL_CODE[res.pass_label]
        out.score[pos] = res.score
        out.adjusted_score[pos] = res.adjusted_score
        out.best_gt[pos] = -1 if res.best_gt is None else res.best_gt
        if res.iou_point is not None:
            out.iou_point[pos] = res.iou_point
    return out


def _class_name(class_id: int) -> str:
    return f"class_{int(class_id)}"


def remove_ground_flat(
    points,
    dist_thresh: float = 0.2,
    iterations: int = 100,
    max_normal_tilt: float = math.radians(30.0),
    seed: int = 0,
    min_inlier_fraction: float = 0.2,
) -> tuple[np.ndarray, np.ndarray]:
    """Ground segmentation over flat points.

    Returns ``(kept_mask, plane)`` with ``kept_mask`` parallel to the
    input rows (True = keep) and ``plane`` the float32 coefficient
    4-vector; when no dominant plane is found the mask is all-True and
    the plane all-NaN.
    """
    pts = _as_rows(points, 4, "points")
    cloud = PointCloud(pts[:, :3], pts[:, 3])
    params = GroundRemovalParams(
        dist_thresh=dist_thresh,
        iterations=iterations,
        max_normal_tilt=max_normal_tilt,
        seed=seed,
        min_inlier_fraction=min_inlier_fraction,
    )
    fit = ransac_plane(cloud, params)
    if fit is None:
        return np.ones(len(pts), dtype=bool), np.full(4, np.nan, dtype=np.float32)
    plane = np.array([fit.plane.a, fit.plane.b, fit.plane.c, fit.plane.d],
                     dtype=np.float32)
    return ~fit.inlier_mask, plane
