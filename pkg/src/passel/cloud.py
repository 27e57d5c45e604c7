"""Point clouds, the BEV grid index, and point-count IoU.

A :class:`PointCloud` stores coordinates in float64 (inputs read from
32-bit files are widened once, on ingest).  Point order is stable:
indices into the cloud identify points across filtering steps via
explicit kept-index masks, which keeps per-anchor diagnostics
reproducible.

The grid index buckets points by BEV cell so box queries touch only a
handful of cells instead of the whole cloud; query results are
guaranteed identical to a linear scan.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .geom import Box3D
from .batchgeom import bev_aabb, boxes_to_array


@dataclass(frozen=True)
class Point:
    """One LiDAR return: position in meters plus unit-scaled intensity."""

    x: float
    y: float
    z: float
    intensity: float = 0.0

    def __post_init__(self) -> None:
        if not (math.isfinite(self.x) and math.isfinite(self.y) and math.isfinite(self.z)):
            raise ValueError("Point coordinates must be finite")


class PointCloud:
    """Immutable cloud of points with stable 0-based indices."""

    __slots__ = ("xyz", "intensity", "frame_id")

    def __init__(
        self,
        xyz: np.ndarray,
        intensity: np.ndarray | None = None,
        frame_id: str | None = None,
    ) -> None:
        xyz = np.asarray(xyz, dtype=np.float64).reshape(-1, 3)
        if not np.all(np.isfinite(xyz)):
            raise ValueError("point coordinates must be finite")
        if intensity is None:
            intensity = np.zeros(len(xyz), dtype=np.float64)
        else:
            intensity = np.asarray(intensity, dtype=np.float64).reshape(-1)
            if len(intensity) != len(xyz):
                raise ValueError("intensity length must match point count")
        self.xyz = xyz
        self.intensity = intensity
        self.frame_id = frame_id
        self.xyz.setflags(write=False)
        self.intensity.setflags(write=False)

    @classmethod
    def from_points(cls, points, frame_id: str | None = None) -> "PointCloud":
        pts = list(points)
        xyz = np.array([[p.x, p.y, p.z] for p in pts], dtype=np.float64).reshape(-1, 3)
        inten = np.array([p.intensity for p in pts], dtype=np.float64)
        return cls(xyz, inten, frame_id)

    def __len__(self) -> int:
        return len(self.xyz)

    def __getitem__(self, i: int) -> Point:
        return Point(
            float(self.xyz[i, 0]),
            float(self.xyz[i, 1]),
            float(self.xyz[i, 2]),
            float(self.intensity[i]),
        )

    def select(self, indices: np.ndarray) -> "PointCloud":
        """New cloud holding ``indices`` in the given order."""
        return PointCloud(self.xyz[indices], self.intensity[indices], self.frame_id)


@dataclass(frozen=True)
class BevGridIndex:
    """Uniform BEV grid over a cloud; immutable after construction.

    ``buckets`` maps a cell ``(i, j)`` to the ascending indices of the
    points whose BEV position falls in that cell; every point appears
    in exactly one bucket.
    """

    cell_size: float
    origin: tuple[float, float]
    buckets: dict[tuple[int, int], np.ndarray]
    n_points: int = field(default=0)

    def candidates(self, xmin: float, ymin: float, xmax: float, ymax: float) -> np.ndarray:
        """Indices of all points whose cell touches the given AABB."""
        ox, oy = self.origin
        i0 = math.floor((xmin - ox) / self.cell_size)
        i1 = math.floor((xmax - ox) / self.cell_size)
        j0 = math.floor((ymin - oy) / self.cell_size)
        j1 = math.floor((ymax - oy) / self.cell_size)
        hits = [
            bucket
            for i in range(i0, i1 + 1)
            for j in range(j0, j1 + 1)
            if (bucket := self.buckets.get((i, j))) is not None
        ]
        if not hits:
            return np.zeros(0, dtype=np.int64)
        return np.concatenate(hits)


def build_index(cloud: PointCloud, cell_size: float = 1.0) -> BevGridIndex:
    """Bucket the cloud's points by BEV cell.

    Raises ``ValueError`` for a non-positive cell size.  The origin is
    anchored at the cloud's minimum BEV corner so cell ids stay small.
    """
    if cell_size <= 0:
        raise ValueError(f"cell_size must be positive, got {cell_size}")
    n = len(cloud)
    if n == 0:
        return BevGridIndex(cell_size, (0.0, 0.0), {}, 0)
    origin = (float(cloud.xyz[:, 0].min()), float(cloud.xyz[:, 1].min()))
    ij = np.floor((cloud.xyz[:, :2] - np.array(origin)) / cell_size).astype(np.int64)
    order = np.lexsort((ij[:, 1], ij[:, 0]))
    ij_sorted = ij[order]
    change = np.flatnonzero(np.any(ij_sorted[1:] != ij_sorted[:-1], axis=1)) + 1
    starts = np.concatenate([[0], change, [n]])
    buckets: dict[tuple[int, int], np.ndarray] = {}
    for k in range(len(starts) - 1):
        seg = order[starts[k] : starts[k + 1]]
        cell = (int(ij_sorted[starts[k], 0]), int(ij_sorted[starts[k], 1]))
        buckets[cell] = np.sort(seg)
    return BevGridIndex(cell_size, origin, buckets, n)


def _contained_mask(xyz: np.ndarray, box: Box3D) -> np.ndarray:
    """Boundary-inclusive containment of rows of ``xyz`` in ``box``.

    Mirrors :func:`passel.geom.contains_point` operation for
    operation so scalar and vector paths agree bit for bit.
    """
    dx = xyz[:, 0] - box.cx
    dy = xyz[:, 1] - box.cy
    dz = xyz[:, 2] - box.cz
    c = math.cos(box.yaw)
    s = math.sin(box.yaw)
    local_x = c * dx + s * dy
    local_y = -s * dx + c * dy
    return (
        (np.abs(local_x) <= box.l / 2.0)
        & (np.abs(local_y) <= box.w / 2.0)
        & (np.abs(dz) <= box.h / 2.0)
    )


def points_in_box(
    cloud: PointCloud, index: BevGridIndex | None, box: Box3D
) -> tuple[int, np.ndarray]:
    """(count, ascending indices) of the cloud's points inside ``box``.

    With an index, only points in cells touching the footprint's AABB
    are tested; the result is identical to a linear scan.  Passing an
    index built over a different cloud raises ``ValueError``.
    """
    if len(cloud) == 0:
        return 0, np.zeros(0, dtype=np.int64)
    if index is None:
        mask = _contained_mask(cloud.xyz, box)
        hits = np.flatnonzero(mask)
        return len(hits), hits
    if index.n_points != len(cloud):
        raise ValueError(
            f"index was built over {index.n_points} points but cloud has {len(cloud)}"
        )
    aabb = bev_aabb(boxes_to_array([box]))[0]
    cand = index.candidates(aabb[0], aabb[1], aabb[2], aabb[3])
    if len(cand) == 0:
        return 0, cand
    mask = _contained_mask(cloud.xyz[cand], box)
    hits = np.sort(cand[mask])
    return len(hits), hits


class EmptyUnionPolicy(enum.Enum):
    """What point IoU reports when neither box contains a point.

    ``ZERO`` treats absent evidence as zero overlap; ``SKIP`` tells the
    selection layer to leave the box score unadjusted.
    """

    ZERO = "zero"
    SKIP = "skip"


def iou_point(
    cloud: PointCloud,
    index: BevGridIndex | None,
    gt: Box3D,
    anchor: Box3D,
    empty_union_policy: EmptyUnionPolicy = EmptyUnionPolicy.ZERO,
) -> tuple[float | None, int]:
    """Point-count IoU of two boxes: shared points over points in either.

    Because both boxes are convex, a point lies in their geometric
    intersection exactly when it lies in both, so the numerator is a
    set intersection of the two membership lists.  Returns
    ``(ratio, union_count)``; with an empty union the ratio is 0.0
    under ``ZERO`` and ``None`` under ``SKIP``.
    """
    n_gt, idx_gt = points_in_box(cloud, index, gt)
    n_anchor, idx_anchor = points_in_box(cloud, index, anchor)
    if n_gt == 0 and n_anchor == 0:
        if empty_union_policy is EmptyUnionPolicy.SKIP:
            return None, 0
        return 0.0, 0
    shared = np.intersect1d(idx_gt, idx_anchor, assume_unique=True)
    union = n_gt + n_anchor - len(shared)
    return len(shared) / union, union
