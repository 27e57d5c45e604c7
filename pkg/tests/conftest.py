"""Shared fixtures: class specs, random boxes, and the hand-built
four-case scene whose selection outcomes are known in closed form."""

from __future__ import annotations

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from passel.anchors import ClassAnchorSpec
from passel.cloud import PointCloud
from passel.geom import Box3D

CAR = ClassAnchorSpec(
    class_name="Car", l=3.9, w=1.6, h=1.56, z_center=-1.0,
    rotations=(0.0, np.pi / 2), t_pos=0.6, t_neg=0.45,
)
PEDESTRIAN = ClassAnchorSpec(
    class_name="Pedestrian", l=0.8, w=0.6, h=1.73, z_center=-0.6,
    rotations=(0.0, np.pi / 2), t_pos=0.5, t_neg=0.35,
)


@pytest.fixture
def specs():
    return {"Car": CAR, "Pedestrian": PEDESTRIAN}


def random_box(rng: np.random.Generator, span: float = 4.0) -> Box3D:
    return Box3D(
        cx=float(rng.uniform(-span, span)),
        cy=float(rng.uniform(-span, span)),
        cz=float(rng.uniform(-span / 2, span / 2)),
        l=float(rng.uniform(0.4, 4.0)),
        w=float(rng.uniform(0.4, 4.0)),
        h=float(rng.uniform(0.4, 4.0)),
        yaw=float(rng.uniform(-2 * np.pi, 2 * np.pi)),
    )


def overlapping_box(rng: np.random.Generator, base: Box3D) -> Box3D:
    """A box jittered off ``base`` so the pair usually overlaps."""
    return Box3D(
        cx=base.cx + float(rng.uniform(-0.6, 0.6)) * base.l,
        cy=base.cy + float(rng.uniform(-0.6, 0.6)) * base.w,
        cz=base.cz + float(rng.uniform(-0.5, 0.5)) * base.h,
        l=base.l * float(rng.uniform(0.6, 1.5)),
        w=base.w * float(rng.uniform(0.6, 1.5)),
        h=base.h * float(rng.uniform(0.6, 1.5)),
        yaw=float(rng.uniform(-2 * np.pi, 2 * np.pi)),
    )


def _offset_for(target_iou: float) -> float:
    # Axis-aligned unit cubes shifted by dx along x overlap with
    # IoU = (1 - dx) / (1 + dx), so dx = (1 - s) / (1 + s).
    return (1.0 - target_iou) / (1.0 + target_iou)


FOUR_CASES = (
    # (name, target box IoU, point IoU, expected legacy, expected pass, expected adjusted)
    ("promoted", 0.58, 1.0, "ignored", "positive", 0.605),
    ("demoted", 0.62, 0.1, "positive", "ignored", 0.5305),
    ("negative", 0.46, 0.0, "ignored", "negative", 0.44),
    ("kept", 0.90, 1.0, "positive", "positive", 0.90),
)


def build_four_case_scene():
    """Four well-separated unit-cube GT/anchor pairs.

    Box IoU values are engineered by axis-aligned offsets, and point
    placements pin the point IoU of each pair:

    * promoted: in-band score 0.58, all points shared -> adjusted 0.605
    * demoted: in-band 0.62, 1 shared of union 10 -> adjusted 0.5305
    * negative: in-band 0.46, nothing shared -> adjusted 0.44
    * kept: 0.90 sits above the band, untouched by the gate
    """
    gts: list[tuple[Box3D, str]] = []
    anchors: list[Box3D] = []
    points: list[tuple[float, float, float]] = []

    for i, (name, s, _ip, _legacy, _pass, _adj) in enumerate(FOUR_CASES):
        x0 = 50.0 * i
        dx = _offset_for(s)
        gts.append((Box3D(x0, 0.0, 0.0, 1.0, 1.0, 1.0, 0.0), "Car"))
        anchors.append(Box3D(x0 + dx, 0.0, 0.0, 1.0, 1.0, 1.0, 0.0))
        if name == "promoted":
            # Every point in either box lies in the intersection.
            points += [(x0 + 0.4, y, 0.0) for y in (-0.2, 0.0, 0.2)]
        elif name == "demoted":
            # 1 shared, 5 only-in-gt, 4 only-in-anchor: 1 / 10.
            points.append((x0 + 0.25, 0.0, 0.0))
            points += [(x0 - 0.45, y, 0.0) for y in (-0.4, -0.2, 0.0, 0.2, 0.4)]
            points += [(x0 + dx + 0.45, y, 0.0) for y in (-0.3, -0.1, 0.1, 0.3)]
        elif name == "negative":
            # All points belong to the gt only: 0 / 5.
            points += [(x0 - 0.45, y, 0.0) for y in (-0.4, -0.2, 0.0, 0.2, 0.4)]
        else:  # kept
            points += [(x0 + 0.4, y, 0.0) for y in (-0.1, 0.1)]

    cloud = PointCloud(np.array(points), frame_id="four-case")
    return cloud, gts, {"Car": anchors}, FOUR_CASES


@pytest.fixture
def four_case_scene():
    return build_four_case_scene()
