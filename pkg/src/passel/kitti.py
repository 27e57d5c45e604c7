"""KITTI-format scene ingestion.

Reads velodyne binary point clouds, object label files, and
calibration files, and converts camera-rectified-frame object labels
into LiDAR-frame boxes.

Label files store dimensions as (h, w, l) while :class:`Box3D` stores
(l, w, h); the reorder happens exactly once, in this module.  Label
locations sit on the bottom face of the box; the lift to the geometric
center (+h/2 along LiDAR up) and the yaw convention are covered by a
round-trip test rather than trusted.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .cloud import PointCloud
from .errors import FormatError
from .geom import Box3D

log = logging.getLogger(__name__)

_ORTHO_TOL = 1e-4
_LABEL_FIELDS = 15
_POINT_BYTES = 16  # 4 little-endian float32 per point


@dataclass(frozen=True)
class LabelRecord:
    """One object annotation line; 2D fields are carried but unused."""

    class_name: str
    truncation: float
    occlusion: float
    observation_angle: float
    bbox2d: tuple[float, float, float, float]
    h: float
    w: float
    l: float
    x: float
    y: float
    z: float
    ry: float

    @property
    def is_dont_care(self) -> bool:
        return self.class_name == "DontCare"


@dataclass(frozen=True)
class Calibration:
    """Rectifying rotation and the rigid LiDAR-to-camera transform."""

    rect_rotation: np.ndarray  # (3, 3)
    velo_to_cam: np.ndarray  # (3, 4)

    def __post_init__(self) -> None:
        rect = np.asarray(self.rect_rotation, dtype=np.float64)
        velo = np.asarray(self.velo_to_cam, dtype=np.float64)
        if rect.shape != (3, 3):
            raise FormatError(f"rect_rotation must be 3x3, got {rect.shape}")
        if velo.shape != (3, 4):
            raise FormatError(f"velo_to_cam must be 3x4, got {velo.shape}")
        for name, rot in (("rect_rotation", rect), ("velo_to_cam rotation", velo[:, :3])):
            err = np.abs(rot @ rot.T - np.eye(3)).max()
            if err > _ORTHO_TOL:
                raise FormatError(f"{name} is not orthonormal (deviation {err:.2e})")
        object.__setattr__(self, "rect_rotation", rect)
        object.__setattr__(self, "velo_to_cam", velo)

    @classmethod
    def identity(cls) -> "Calibration":
        return cls(np.eye(3), np.hstack([np.eye(3), np.zeros((3, 1))]))


@dataclass(frozen=True)
class SceneFrame:
    cloud: PointCloud
    gts: list[tuple[Box3D, str]]
    frame_id: str


def read_velodyne_bin(path: str | Path) -> PointCloud:
    """Parse packed little-endian (x, y, z, intensity) float32 quadruples.

    File lengths not divisible by 16 raise ``FormatError`` with the
    offending byte offset.  Rows with non-finite coordinates are
    dropped and the count logged.
    """
    path = Path(path)
    data = path.read_bytes()
    if len(data) % _POINT_BYTES != 0:
        raise FormatError(
            f"{path}: truncated velodyne file, {len(data)} bytes is not a multiple "
            f"of {_POINT_BYTES} (stray data starts at byte {len(data) - len(data) % _POINT_BYTES})"
        )
    raw = np.frombuffer(data, dtype="<f4").reshape(-1, 4).astype(np.float64)
    finite = np.isfinite(raw[:, :3]).all(axis=1)
    dropped = int(len(raw) - finite.sum())
    if dropped:
        log.warning("%s: dropped %d points with non-finite coordinates", path, dropped)
        raw = raw[finite]
    return PointCloud(raw[:, :3], raw[:, 3], frame_id=path.stem)


def write_velodyne_bin(cloud: PointCloud, path: str | Path) -> None:
    """Write the cloud back out in velodyne binary layout (float32)."""
    rows = np.hstack([cloud.xyz, cloud.intensity[:, None]]).astype("<f4")
    Path(path).write_bytes(rows.tobytes())


def parse_label_file(path: str | Path) -> list[LabelRecord]:
    """One record per 15-field line; malformed lines name their number."""
    path = Path(path)
    records: list[LabelRecord] = []
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        if not line.strip():
            continue
        fields = line.split()
        if len(fields) != _LABEL_FIELDS:
            raise FormatError(
                f"{path}:{lineno}: expected {_LABEL_FIELDS} fields, got {len(fields)}"
            )
        try:
            values = [float(v) for v in fields[1:]]
        except ValueError as exc:
            raise FormatError(f"{path}:{lineno}: non-numeric field ({exc})") from None
        records.append(
            LabelRecord(
                class_name=fields[0],
                truncation=values[0],
                occlusion=values[1],
                observation_angle=values[2],
                bbox2d=(values[3], values[4], values[5], values[6]),
                h=values[7],
                w=values[8],
                l=values[9],
                x=values[10],
                y=values[11],
                z=values[12],
                ry=values[13],
            )
        )
    return records


def format_label_line(record: LabelRecord) -> str:
    """Serialize a record back to the 15-field line layout."""
    values = (
        record.truncation,
        record.occlusion,
        record.observation_angle,
        *record.bbox2d,
        record.h,
        record.w,
        record.l,
        record.x,
        record.y,
        record.z,
        record.ry,
    )
    return " ".join([record.class_name] + [f"{v:.8f}" for v in values])


def parse_calib_file(path: str | Path) -> Calibration:
    """Parse "KEY: v1 v2 ..." lines; other keys are ignored."""
    path = Path(path)
    entries: dict[str, list[float]] = {}
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        if ":" not in line:
            continue
        key, _, rest = line.partition(":")
        try:
            entries[key.strip()] = [float(v) for v in rest.split()]
        except ValueError as exc:
            raise FormatError(f"{path}:{lineno}: non-numeric calibration value ({exc})") from None
    for key, count in (("R0_rect", 9), ("Tr_velo_to_cam", 12)):
        if key not in entries:
            raise FormatError(f"{path}: missing required calibration key {key!r}")
        if len(entries[key]) != count:
            raise FormatError(
                f"{path}: key {key!r} needs {count} values, got {len(entries[key])}"
            )
    return Calibration(
        rect_rotation=np.array(entries["R0_rect"]).reshape(3, 3),
        velo_to_cam=np.array(entries["Tr_velo_to_cam"]).reshape(3, 4),
    )


def _rect_to_lidar(calib: Calibration, xyz_rect: np.ndarray) -> np.ndarray:
    rot = calib.velo_to_cam[:, :3]
    trans = calib.velo_to_cam[:, 3]
    cam = calib.rect_rotation.T @ xyz_rect
    return rot.T @ (cam - trans)


def _lidar_to_rect(calib: Calibration, xyz_lidar: np.ndarray) -> np.ndarray:
    rot = calib.velo_to_cam[:, :3]
    trans = calib.velo_to_cam[:, 3]
    return calib.rect_rotation @ (rot @ xyz_lidar + trans)


def label_to_lidar_box(record: LabelRecord, calib: Calibration) -> Box3D:
    """Camera-rectified label to LiDAR-frame box.

    The label location (a bottom-face point) is carried through the
    inverse rectification and rigid transform, lifted by +h/2 along
    LiDAR z, and the yaw mapped as ``-ry - pi/2``.
    """
    bottom = _rect_to_lidar(calib, np.array([record.x, record.y, record.z]))
    return Box3D(
        cx=float(bottom[0]),
        cy=float(bottom[1]),
        cz=float(bottom[2]) + record.h / 2.0,
        l=record.l,
        w=record.w,
        h=record.h,
        yaw=-record.ry - math.pi / 2.0,
    )


def lidar_box_to_label(box: Box3D, class_name: str, calib: Calibration) -> LabelRecord:
    """Exact inverse of :func:`label_to_lidar_box` (synthetic labels)."""
    bottom = _lidar_to_rect(calib, np.array([box.cx, box.cy, box.cz - box.h / 2.0]))
    ry = -box.yaw - math.pi / 2.0
    return LabelRecord(
        class_name=class_name,
        truncation=0.0,
        occlusion=0.0,
        observation_angle=ry,
        bbox2d=(0.0, 0.0, 0.0, 0.0),
        h=box.h,
        w=box.w,
        l=box.l,
        x=float(bottom[0]),
        y=float(bottom[1]),
        z=float(bottom[2]),
        ry=ry,
    )


def load_scene(
    cloud_path: str | Path,
    label_path: str | Path,
    calib_path: str | Path,
    frame_id: str | None = None,
) -> SceneFrame:
    """Compose the three parsers into one frame; DontCare is dropped.

    Parse failures are re-raised with the frame id prefixed; missing
    files surface as the underlying I/O error (which names the path).
    """
    fid = frame_id if frame_id is not None else Path(cloud_path).stem
    try:
        cloud = read_velodyne_bin(cloud_path)
        labels = parse_label_file(label_path)
        calib = parse_calib_file(calib_path)
        gts = [
            (label_to_lidar_box(rec, calib), rec.class_name)
            for rec in labels
            if not rec.is_dont_care
        ]
    except FormatError as exc:
        raise FormatError(f"frame {fid}: {exc}") from exc
    return SceneFrame(cloud=cloud, gts=gts, frame_id=fid)
