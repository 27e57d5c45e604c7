"""RANSAC plane fitting and ground-point removal.

Ground returns inside object boxes distort point-count overlap, so the
dominant near-horizontal plane is segmented and dropped before any
point IoU is computed.  The fit is a plain RANSAC over random 3-point
samples with a tilt gate that rejects walls and facades; all
randomness comes from an explicit seed, never the wall clock, so runs
are reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .cloud import PointCloud

_UNIT_TOL = 1e-9


@dataclass(frozen=True)
class Plane:
    """Plane a*x + b*y + c*z + d = 0 with unit normal (a, b, c)."""

    a: float
    b: float
    c: float
    d: float

    def __post_init__(self) -> None:
        norm = math.sqrt(self.a * self.a + self.b * self.b + self.c * self.c)
        if abs(norm - 1.0) > _UNIT_TOL:
            raise ValueError(f"plane normal must be unit length, |n|={norm}")

    def signed_distance(self, xyz: np.ndarray) -> np.ndarray:
        return xyz @ np.array([self.a, self.b, self.c]) + self.d


@dataclass(frozen=True)
class GroundRemovalParams:
    dist_thresh: float = 0.2
    iterations: int = 100
    max_normal_tilt: float = math.radians(30.0)
    seed: int = 0
    min_inlier_fraction: float = 0.2

    def __post_init__(self) -> None:
        if self.dist_thresh <= 0:
            raise ValueError("dist_thresh must be positive")
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if not 0.0 <= self.max_normal_tilt <= math.pi / 2.0:
            raise ValueError("max_normal_tilt must be in [0, pi/2]")


@dataclass(frozen=True)
class PlaneFit:
    plane: Plane
    inlier_mask: np.ndarray  # bool, parallel to the cloud

    @property
    def inlier_count(self) -> int:
        return int(self.inlier_mask.sum())


def ransac_plane(cloud: PointCloud, params: GroundRemovalParams) -> PlaneFit | None:
    """Best near-horizontal plane over seeded 3-point samples.

    Candidates are scored by inlier count (|signed distance| within
    ``dist_thresh``); samples whose normal tilts more than
    ``max_normal_tilt`` from +z, or that are collinear, are skipped.
    Returns ``None`` when no candidate reaches ``min_inlier_fraction``.
    Raises ``ValueError`` for clouds with fewer than 3 points.
    """
    n = len(cloud)
    if n < 3:
        raise ValueError(f"plane fitting needs >= 3 points, got {n}")
    xyz = cloud.xyz
    rng = np.random.default_rng(params.seed)
    min_cos = math.cos(params.max_normal_tilt)

    best_count = 0
    best_normal: np.ndarray | None = None
    best_d = 0.0
    for _ in range(params.iterations):
        i, j, k = rng.choice(n, size=3, replace=False)
        p0 = xyz[i]
        normal = np.cross(xyz[j] - p0, xyz[k] - p0)
        norm = np.linalg.norm(normal)
        if norm < 1e-12:
            continue  # collinear sample
        normal = normal / norm
        if normal[2] < 0:
            normal = -normal
        if normal[2] < min_cos:
            continue  # tilted beyond the gate
        d = -float(normal @ p0)
        count = int((np.abs(xyz @ normal + d) <= params.dist_thresh).sum())
        if count > best_count:
            best_count = count
            best_normal = normal
            best_d = d

    if best_normal is None or best_count / n < params.min_inlier_fraction:
        return None
    plane = Plane(float(best_normal[0]), float(best_normal[1]), float(best_normal[2]), best_d)
    mask = np.abs(plane.signed_distance(xyz)) <= params.dist_thresh
    return PlaneFit(plane, mask)


@dataclass(frozen=True)
class GroundRemovalResult:
    cloud: PointCloud
    kept_indices: np.ndarray  # maps filtered positions to original indices
    plane: Plane | None
    plane_found: bool


def remove_ground(cloud: PointCloud, params: GroundRemovalParams) -> GroundRemovalResult:
    """Drop the fitted plane's inliers; pass the cloud through on a miss.

    When no plane reaches the inlier fraction the cloud is returned
    unchanged with ``plane_found`` False so callers can warn rather
    than fail.
    """
    fit = ransac_plane(cloud, params)
    if fit is None:
        return GroundRemovalResult(cloud, np.arange(len(cloud), dtype=np.int64), None, False)
    kept = np.flatnonzero(~fit.inlier_mask)
    return GroundRemovalResult(cloud.select(kept), kept, fit.plane, True)
