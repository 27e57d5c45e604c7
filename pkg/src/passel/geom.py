"""Exact geometry kernels for yaw-rotated cuboids.

Boxes are z-axis prisms: a rectangle footprint in the bird's-eye-view
(BEV) plane, extruded along z.  Volume overlap therefore factors into
a BEV polygon intersection times a z-interval overlap, which this
module computes exactly with convex polygon clipping.

All arithmetic is float64 regardless of how the inputs were stored;
clipping is sensitive to cancellation at float32 precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

# Tolerance used when deduplicating clipped vertices.  Edge-touching
# footprints collapse to fewer than 3 distinct vertices and count as a
# zero-area (lower-dimensional) intersection.
_DEDUP_EPS = 1e-9


@dataclass(frozen=True)
class Vec3:
    """A point in the LiDAR frame, meters."""

    x: float
    y: float
    z: float

    def __post_init__(self) -> None:
        for name in ("x", "y", "z"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"Vec3.{name} must be finite")


@dataclass(frozen=True)
class Box3D:
    """Yaw-rotated cuboid: center, extents, rotation about +z.

    ``yaw`` is not normalized; any finite value is legal (coordinate
    conversions routinely produce angles outside [-pi, pi]).
    """

    cx: float
    cy: float
    cz: float
    l: float
    w: float
    h: float
    yaw: float

    def __post_init__(self) -> None:
        for name in ("cx", "cy", "cz", "l", "w", "h", "yaw"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"Box3D.{name} must be finite")
        if self.l <= 0 or self.w <= 0 or self.h <= 0:
            raise ValueError(
                f"Box3D extents must be positive, got l={self.l} w={self.w} h={self.h}"
            )

    @property
    def volume(self) -> float:
        return self.l * self.w * self.h


@dataclass(frozen=True)
class BevPolygon:
    """Convex BEV polygon, vertices counter-clockwise; may be empty."""

    vertices: tuple[tuple[float, float], ...]

    def __len__(self) -> int:
        return len(self.vertices)

    def area(self) -> float:
        """Shoelace area; 0 for degenerate (< 3 vertices) polygons."""
        verts = self.vertices
        n = len(verts)
        if n < 3:
            return 0.0
        acc = 0.0
        for i in range(n):
            x0, y0 = verts[i]
            x1, y1 = verts[(i + 1) % n]
            acc += x0 * y1 - x1 * y0
        return 0.5 * abs(acc)


EMPTY_POLYGON = BevPolygon(())


def box_corners_bev(box: Box3D) -> BevPolygon:
    """Four BEV footprint corners of ``box``, counter-clockwise.

    The axis-aligned rectangle (+-l/2, +-w/2) is rotated by yaw and
    translated to the box center; rotation preserves orientation, so
    the corner order stays CCW for any yaw.
    """
    c = math.cos(box.yaw)
    s = math.sin(box.yaw)
    hl = box.l / 2.0
    hw = box.w / 2.0
    local = ((hl, hw), (-hl, hw), (-hl, -hw), (hl, -hw))
    return BevPolygon(
        tuple((box.cx + c * lx - s * ly, box.cy + s * lx + c * ly) for lx, ly in local)
    )


def contains_point(box: Box3D, p: Vec3) -> bool:
    """Boundary-inclusive containment test in the box frame.

    The point is translated by -center and rotated by -yaw; it is
    inside iff every local coordinate is within the half-extent.
    Comparisons are exact (no epsilon) so point counts are
    deterministic.
    """
    dx = p.x - box.cx
    dy = p.y - box.cy
    dz = p.z - box.cz
    c = math.cos(box.yaw)
    s = math.sin(box.yaw)
    local_x = c * dx + s * dy
    local_y = -s * dx + c * dy
    return (
        abs(local_x) <= box.l / 2.0
        and abs(local_y) <= box.w / 2.0
        and abs(dz) <= box.h / 2.0
    )


def clip_convex(subject: BevPolygon, window: BevPolygon) -> BevPolygon:
    """Clip convex ``subject`` against convex CCW ``window``.

    Sutherland-Hodgman: the subject is clipped against the half-plane
    left of each directed window edge.  Output vertices closer than
    ``_DEDUP_EPS`` are merged; results with fewer than 3 distinct
    vertices are reported empty (lower-dimensional contact).
    """
    if len(subject) < 3 or len(window) < 3:
        return EMPTY_POLYGON

    output = list(subject.vertices)
    wverts = window.vertices
    for i in range(len(wverts)):
        if not output:
            return EMPTY_POLYGON
        ax, ay = wverts[i]
        bx, by = wverts[(i + 1) % len(wverts)]
        ex = bx - ax
        ey = by - ay

        polygon = output
        output = []
        px, py = polygon[-1]
        prev_inside = ex * (py - ay) - ey * (px - ax) >= 0.0
        for qx, qy in polygon:
            cur_inside = ex * (qy - ay) - ey * (qx - ax) >= 0.0
            if cur_inside != prev_inside:
                # Edge crosses the clip line: parametric intersection.
                dx = qx - px
                dy = qy - py
                denom = ex * dy - ey * dx
                if denom != 0.0:
                    t = (ex * (ay - py) - ey * (ax - px)) / denom
                    output.append((px + t * dx, py + t * dy))
            if cur_inside:
                output.append((qx, qy))
            px, py = qx, qy
            prev_inside = cur_inside

    deduped: list[tuple[float, float]] = []
    for v in output:
        if not deduped or (
            abs(v[0] - deduped[-1][0]) > _DEDUP_EPS
            or abs(v[1] - deduped[-1][1]) > _DEDUP_EPS
        ):
            deduped.append(v)
    while len(deduped) > 1 and (
        abs(deduped[0][0] - deduped[-1][0]) <= _DEDUP_EPS
        and abs(deduped[0][1] - deduped[-1][1]) <= _DEDUP_EPS
    ):
        deduped.pop()
    if len(deduped) < 3:
        return EMPTY_POLYGON
    return BevPolygon(tuple(deduped))


def bev_intersection_area(a: Box3D, b: Box3D) -> float:
    """Area of the intersection of the two BEV footprints, m^2."""
    return clip_convex(box_corners_bev(a), box_corners_bev(b)).area()


def _overlap_z(a: Box3D, b: Box3D) -> float:
    lo = max(a.cz - a.h / 2.0, b.cz - b.h / 2.0)
    hi = min(a.cz + a.h / 2.0, b.cz + b.h / 2.0)
    return max(0.0, hi - lo)


def iou_box(a: Box3D, b: Box3D) -> float:
    """Volume intersection-over-union of two cuboids, in [0, 1].

    Both boxes are prisms along z, so the intersection volume is the
    BEV intersection area times the z-interval overlap.
    """
    dz = _overlap_z(a, b)
    if dz == 0.0:
        return 0.0
    inter = bev_intersection_area(a, b) * dz
    if inter == 0.0:
        return 0.0
    union = a.volume + b.volume - inter
    return min(inter / union, 1.0)
