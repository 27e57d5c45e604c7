"""Dense prior-anchor generation per class.

Anchors of a class share one size and height; they tile the BEV
detection range on a uniform grid, one anchor per (cell, rotation).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .geom import Box3D

# Absorbs binary rounding of metric strides (e.g. 80 / 0.4 evaluating
# just below an integer) so grid counts match exact arithmetic.
_COUNT_EPS = 1e-9


@dataclass(frozen=True)
class ClassAnchorSpec:
    """Fixed anchor shape and selection thresholds for one class."""

    class_name: str
    l: float
    w: float
    h: float
    z_center: float
    rotations: tuple[float, ...]
    t_pos: float
    t_neg: float

    def __post_init__(self) -> None:
        if self.l <= 0 or self.w <= 0 or self.h <= 0:
            raise ValueError(f"anchor extents must be positive for {self.class_name!r}")
        if not self.rotations:
            raise ValueError(f"anchor rotations must be non-empty for {self.class_name!r}")
        if not 0.0 < self.t_neg < self.t_pos < 1.0:
            raise ValueError(
                f"need 0 < t_neg < t_pos < 1 for {self.class_name!r}, "
                f"got t_pos={self.t_pos} t_neg={self.t_neg}"
            )


@dataclass(frozen=True)
class BevRange:
    """BEV extent covered by the anchor grid, plus the cell stride."""

    x_min: float
    x_max: float
    y_min: float
    y_max: float
    stride: float

    def __post_init__(self) -> None:
        if self.x_max <= self.x_min or self.y_max <= self.y_min:
            raise ValueError("BEV range must have positive extent")
        if self.stride <= 0:
            raise ValueError("stride must be positive")

    @property
    def nx(self) -> int:
        return int(math.floor((self.x_max - self.x_min) / self.stride + _COUNT_EPS))

    @property
    def ny(self) -> int:
        return int(math.floor((self.y_max - self.y_min) / self.stride + _COUNT_EPS))


def generate_anchors(spec: ClassAnchorSpec, bev_range: BevRange) -> list[Box3D]:
    """One anchor per (grid cell center, rotation), fully inside the range.

    Cell centers sit at ``min + (i + 0.5) * stride``.  Ordering is
    deterministic: row-major over (y, x), rotations innermost.  An
    empty grid (stride larger than the extent) raises ``ValueError``.
    """
    nx, ny = bev_range.nx, bev_range.ny
    if nx == 0 or ny == 0:
        raise ValueError(
            f"stride {bev_range.stride} leaves no grid cells in "
            f"[{bev_range.x_min}, {bev_range.x_max}] x [{bev_range.y_min}, {bev_range.y_max}]"
        )
    anchors: list[Box3D] = []
    for j in range(ny):
        cy = bev_range.y_min + (j + 0.5) * bev_range.stride
        for i in range(nx):
            cx = bev_range.x_min + (i + 0.5) * bev_range.stride
            for yaw in spec.rotations:
                anchors.append(
                    Box3D(cx, cy, spec.z_center, spec.l, spec.w, spec.h, yaw)
                )
    return anchors
