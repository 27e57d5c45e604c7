"""Seeded synthetic scenes for benchmarks and randomized testing.

Scenes mimic the structure the selection pipeline cares about: a
near-horizontal ground sheet, per-object point clusters that actually
sit inside their boxes, and background clutter.  Everything is driven
by an explicit seed so runs are reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .anchors import ClassAnchorSpec
from .cloud import PointCloud
from .geom import Box3D


@dataclass(frozen=True)
class SyntheticScene:
    cloud: PointCloud
    gts: list[tuple[Box3D, str]]


def _points_in_box_frame(rng: np.random.Generator, box: Box3D, n: int) -> np.ndarray:
    local = rng.uniform(-0.5, 0.5, size=(n, 3)) * np.array([box.l, box.w, box.h])
    c, s = np.cos(box.yaw), np.sin(box.yaw)
    x = c * local[:, 0] - s * local[:, 1] + box.cx
    y = s * local[:, 0] + c * local[:, 1] + box.cy
    z = local[:, 2] + box.cz
    return np.stack([x, y, z], axis=1)


def random_box(
    rng: np.random.Generator,
    spec: ClassAnchorSpec,
    x_range: tuple[float, float],
    y_range: tuple[float, float],
    size_jitter: float = 0.15,
    z_jitter: float = 0.3,
) -> Box3D:
    """A plausible object box: the class shape, jittered, anywhere in range."""
    scale = rng.uniform(1.0 - size_jitter, 1.0 + size_jitter, size=3)
    return Box3D(
        cx=rng.uniform(*x_range),
        cy=rng.uniform(*y_range),
        cz=spec.z_center + rng.uniform(-z_jitter, z_jitter),
        l=spec.l * scale[0],
        w=spec.w * scale[1],
        h=spec.h * scale[2],
        yaw=rng.uniform(-np.pi, np.pi),
    )


def make_scene(
    seed: int,
    specs: dict[str, ClassAnchorSpec],
    n_gts: int,
    n_points: int,
    x_range: tuple[float, float] = (0.0, 70.4),
    y_range: tuple[float, float] = (-40.0, 40.0),
    ground_z: float = -1.9,
    ground_fraction: float = 0.5,
    object_fraction: float = 0.3,
    frame_id: str | None = None,
) -> SyntheticScene:
    """Ground sheet + in-box object clusters + uniform clutter.

    Point budget splits into ground (on a flat plane with 2 cm noise),
    object points (uniform inside each ground-truth box), and clutter
    floating through the detection range.
    """
    rng = np.random.default_rng(seed)
    class_names = sorted(specs)
    gts: list[tuple[Box3D, str]] = []
    for _ in range(n_gts):
        cls = class_names[rng.integers(len(class_names))]
        gts.append((random_box(rng, specs[cls], x_range, y_range), cls))

    chunks: list[np.ndarray] = []
    n_ground = int(n_points * ground_fraction)
    n_object = int(n_points * object_fraction) if gts else 0
    n_clutter = n_points - n_ground - n_object
    if n_ground:
        gx = rng.uniform(*x_range, size=n_ground)
        gy = rng.uniform(*y_range, size=n_ground)
        gz = ground_z + rng.normal(0.0, 0.02, size=n_ground)
        chunks.append(np.stack([gx, gy, gz], axis=1))
    if n_object:
        per = np.full(len(gts), n_object // len(gts))
        per[: n_object % len(gts)] += 1
        for (box, _), count in zip(gts, per):
            if count:
                chunks.append(_points_in_box_frame(rng, box, int(count)))
    if n_clutter > 0:
        cx = rng.uniform(*x_range, size=n_clutter)
        cy = rng.uniform(*y_range, size=n_clutter)
        cz = rng.uniform(ground_z + 0.3, ground_z + 3.5, size=n_clutter)
        chunks.append(np.stack([cx, cy, cz], axis=1))

    if chunks:
        xyz = np.concatenate(chunks, axis=0)
    else:
        xyz = np.zeros((0, 3))
    intensity = rng.uniform(0.0, 1.0, size=len(xyz))
    return SyntheticScene(
        cloud=PointCloud(xyz, intensity, frame_id=frame_id), gts=gts
    )


def jittered_anchors(
    rng: np.random.Generator,
    gts: list[tuple[Box3D, str]],
    specs: dict[str, ClassAnchorSpec],
    per_gt: int = 8,
    extra_random: int = 10,
    x_range: tuple[float, float] = (0.0, 70.4),
    y_range: tuple[float, float] = (-40.0, 40.0),
) -> dict[str, list[Box3D]]:
    """Anchor sets concentrated around the ground truths.

    Jittered copies of each ground truth produce a rich spread of box
    IoU values (including plenty inside the adjustment band), which a
    coarse grid would rarely hit in a small test scene.
    """
    anchors: dict[str, list[Box3D]] = {cls: [] for cls in specs}
    for box, cls in gts:
        spec = specs[cls]
        for _ in range(per_gt):
            anchors[cls].append(
                Box3D(
                    cx=box.cx + rng.normal(0.0, 0.35 * spec.l),
                    cy=box.cy + rng.normal(0.0, 0.35 * spec.w),
                    cz=spec.z_center,
                    l=spec.l,
                    w=spec.w,
                    h=spec.h,
                    yaw=rng.choice([0.0, np.pi / 2]) + rng.normal(0.0, 0.1),
                )
            )
    for cls, spec in specs.items():
        for _ in range(extra_random):
            anchors[cls].append(
                Box3D(
                    cx=rng.uniform(*x_range),
                    cy=rng.uniform(*y_range),
                    cz=spec.z_center,
                    l=spec.l,
                    w=spec.w,
                    h=spec.h,
                    yaw=float(rng.choice([0.0, np.pi / 2])),
                )
            )
    return anchors
