"""Vectorized cuboid IoU over arrays of box pairs.

The scalar kernels in :mod:`passel.geom` clip one polygon pair at a
time, which is too slow for dense anchor grids (tens of thousands of
pairs per scene).  This module computes the same quantities with numpy
over ``(N, 7)`` arrays of ``[cx, cy, cz, l, w, h, yaw]`` rows.

The BEV intersection is found by the dual of clipping: collect every
candidate vertex of the intersection polygon (corners of either
rectangle inside the other, plus edge-edge crossing points), order
them by angle around their centroid, and apply the shoelace formula.
For convex footprints this is exact, and it vectorizes cleanly.
"""

from __future__ import annotations

from collections.abc import Sequence

import numpy as np

from .geom import Box3D

# Candidate vertices within this distance of a boundary still count as
# inside; keeps corner-on-edge contacts from dropping true vertices.
_INSIDE_EPS = 1e-9
_PARAM_EPS = 1e-9
_DENOM_EPS = 1e-12


def boxes_to_array(boxes: Sequence[Box3D]) -> np.ndarray:
    """Pack boxes into an (N, 7) float64 array, row order preserved."""
    out = np.empty((len(boxes), 7), dtype=np.float64)
    for i, b in enumerate(boxes):
        out[i, 0] = b.cx
        out[i, 1] = b.cy
        out[i, 2] = b.cz
        out[i, 3] = b.l
        out[i, 4] = b.w
        out[i, 5] = b.h
        out[i, 6] = b.yaw
    return out


def corners_bev(boxes: np.ndarray) -> np.ndarray:
    """BEV footprint corners, CCW, shape (N, 4, 2)."""
    c = np.cos(boxes[:, 6])
    s = np.sin(boxes[:, 6])
    hl = boxes[:, 3] / 2.0
    hw = boxes[:, 4] / 2.0
    # Local CCW order: (+l,+w), (-l,+w), (-l,-w), (+l,-w).
    lx = np.stack([hl, -hl, -hl, hl], axis=1)
    ly = np.stack([hw, hw, -hw, -hw], axis=1)
    x = boxes[:, 0:1] + c[:, None] * lx - s[:, None] * ly
    y = boxes[:, 1:2] + s[:, None] * lx + c[:, None] * ly
    return np.stack([x, y], axis=2)


def bev_aabb(boxes: np.ndarray) -> np.ndarray:
    """Tight axis-aligned bounds of each footprint: (N, 4) [xmin, ymin, xmax, ymax]."""
    half_x = 0.5 * (
        np.abs(boxes[:, 3] * np.cos(boxes[:, 6])) + np.abs(boxes[:, 4] * np.sin(boxes[:, 6]))
    )
    half_y = 0.5 * (
        np.abs(boxes[:, 3] * np.sin(boxes[:, 6])) + np.abs(boxes[:, 4] * np.cos(boxes[:, 6]))
    )
    return np.stack(
        [
            boxes[:, 0] - half_x,
            boxes[:, 1] - half_y,
            boxes[:, 0] + half_x,
            boxes[:, 1] + half_y,
        ],
        axis=1,
    )


def _corners_inside(corners: np.ndarray, boxes: np.ndarray) -> np.ndarray:
    """Which of ``corners[i]`` (4 per row) lie in footprint ``boxes[i]``."""
    c = np.cos(boxes[:, 6])[:, None]
    s = np.sin(boxes[:, 6])[:, None]
    dx = corners[:, :, 0] - boxes[:, 0:1]
    dy = corners[:, :, 1] - boxes[:, 1:2]
    local_x = c * dx + s * dy
    local_y = -s * dx + c * dy
    return (np.abs(local_x) <= boxes[:, 3:4] / 2.0 + _INSIDE_EPS) & (
        np.abs(local_y) <= boxes[:, 4:5] / 2.0 + _INSIDE_EPS
    )


def bev_intersection_areas(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pairwise footprint intersection areas for rows of ``a`` and ``b``."""
    n = a.shape[0]
    if n == 0:
        return np.zeros(0, dtype=np.float64)
    ca = corners_bev(a)
    cb = corners_bev(b)

    inside_ab = _corners_inside(ca, b)
    inside_ba = _corners_inside(cb, a)

    # Segment-segment crossings between the 4 edges of each footprint.
    pa = ca[:, :, None, :]                              # (N,4,1,2)
    ra = (np.roll(ca, -1, axis=1) - ca)[:, :, None, :]
    qb = cb[:, None, :, :]                              # (N,1,4,2)
    sb = (np.roll(cb, -1, axis=1) - cb)[:, None, :, :]
    denom = ra[..., 0] * sb[..., 1] - ra[..., 1] * sb[..., 0]
    not_parallel = np.abs(denom) > _DENOM_EPS
    safe_denom = np.where(not_parallel, denom, 1.0)
    qmp = qb - pa
    t = (qmp[..., 0] * sb[..., 1] - qmp[..., 1] * sb[..., 0]) / safe_denom
    u = (qmp[..., 0] * ra[..., 1] - qmp[..., 1] * ra[..., 0]) / safe_denom
    cross_ok = (
        not_parallel
        & (t >= -_PARAM_EPS)
        & (t <= 1.0 + _PARAM_EPS)
        & (u >= -_PARAM_EPS)
        & (u <= 1.0 + _PARAM_EPS)
    )
    crossings = pa + t[..., None] * ra                  # (N,4,4,2)

    pts = np.concatenate([ca, cb, crossings.reshape(n, 16, 2)], axis=1)
    valid = np.concatenate([inside_ab, inside_ba, cross_ok.reshape(n, 16)], axis=1)
    pts = np.where(valid[:, :, None], pts, 0.0)

    count = valid.sum(axis=1)
    safe = np.maximum(count, 1)
    centroid = pts.sum(axis=1) / safe[:, None]

    angles = np.where(
        valid,
        np.arctan2(pts[:, :, 1] - centroid[:, 1:2], pts[:, :, 0] - centroid[:, 0:1]),
        np.inf,
    )
    order = np.argsort(angles, axis=1)
    pts = np.take_along_axis(pts, order[:, :, None], axis=1)

    # Pad unused slots with the first vertex so the shoelace chain
    # closes and padded terms cancel to zero.
    slot = np.arange(pts.shape[1])[None, :]
    pad = slot >= count[:, None]
    pts = np.where(pad[:, :, None], pts[:, 0:1, :], pts)

    nxt = np.roll(pts, -1, axis=1)
    area = 0.5 * np.abs(
        np.sum(pts[:, :, 0] * nxt[:, :, 1] - nxt[:, :, 0] * pts[:, :, 1], axis=1)
    )
    return np.where(count >= 3, area, 0.0)


def iou_boxes(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pairwise volume IoU for rows of ``a`` against rows of ``b``."""
    if a.shape[0] == 0:
        return np.zeros(0, dtype=np.float64)
    z_lo = np.maximum(a[:, 2] - a[:, 5] / 2.0, b[:, 2] - b[:, 5] / 2.0)
    z_hi = np.minimum(a[:, 2] + a[:, 5] / 2.0, b[:, 2] + b[:, 5] / 2.0)
    dz = np.maximum(z_hi - z_lo, 0.0)
    inter = bev_intersection_areas(a, b) * dz
    vol_a = a[:, 3] * a[:, 4] * a[:, 5]
    vol_b = b[:, 3] * b[:, 4] * b[:, 5]
    union = vol_a + vol_b - inter
    with np.errstate(divide="ignore", invalid="ignore"):
        iou = np.where(inter > 0.0, inter / union, 0.0)
    return np.clip(iou, 0.0, 1.0)


def iou_one_to_many(box: np.ndarray, many: np.ndarray) -> np.ndarray:
    """IoU of a single (7,) box row against every row of ``many``."""
    if many.shape[0] == 0:
        return np.zeros(0, dtype=np.float64)
    return iou_boxes(np.broadcast_to(box, (many.shape[0], 7)), many)
