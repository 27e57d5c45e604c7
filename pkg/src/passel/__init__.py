"""Point-assisted training-sample selection for anchor-based LiDAR
3D object detection.

Box IoU alone is an ambiguous anchor-quality measure on sparse LiDAR
returns; this package scores anchors with an exact rotated-cuboid IoU,
a point-count IoU, and a bounded hybrid of the two applied inside a
dynamic band around the selection thresholds, plus the statistical
tooling to quantify how the two measures disagree.
"""

from .anchors import BevRange, ClassAnchorSpec, generate_anchors
from .assignment import (
    AssignmentResult,
    Bounds,
    SampleLabel,
    SelectionParams,
    assign_scene,
    compute_bounds,
    gated_pair_score,
    legacy_assign,
    point_assisted_score,
)
from .cloud import (
    BevGridIndex,
    EmptyUnionPolicy,
    Point,
    PointCloud,
    build_index,
    iou_point,
    points_in_box,
)
from .errors import ConfigError, FormatError
from .geom import (
    BevPolygon,
    Box3D,
    Vec3,
    bev_intersection_area,
    box_corners_bev,
    clip_convex,
    contains_point,
    iou_box,
)
from .ground import (
    GroundRemovalParams,
    GroundRemovalResult,
    Plane,
    PlaneFit,
    ransac_plane,
    remove_ground,
)
from .kitti import (
    Calibration,
    LabelRecord,
    SceneFrame,
    label_to_lidar_box,
    lidar_box_to_label,
    load_scene,
    parse_calib_file,
    parse_label_file,
    read_velodyne_bin,
    write_velodyne_bin,
)

__version__ = "0.1.0"

__all__ = [
    "AssignmentResult",
    "BevGridIndex",
    "BevPolygon",
    "BevRange",
    "Bounds",
    "Box3D",
    "Calibration",
    "ClassAnchorSpec",
    "ConfigError",
    "EmptyUnionPolicy",
    "FormatError",
    "GroundRemovalParams",
    "GroundRemovalResult",
    "LabelRecord",
    "Plane",
    "PlaneFit",
    "Point",
    "PointCloud",
    "SampleLabel",
    "SceneFrame",
    "SelectionParams",
    "Vec3",
    "assign_scene",
    "bev_intersection_area",
    "box_corners_bev",
    "build_index",
    "clip_convex",
    "compute_bounds",
    "contains_point",
    "gated_pair_score",
    "generate_anchors",
    "iou_box",
    "iou_point",
    "label_to_lidar_box",
    "legacy_assign",
    "lidar_box_to_label",
    "load_scene",
    "parse_calib_file",
    "parse_label_file",
    "point_assisted_score",
    "points_in_box",
    "ransac_plane",
    "read_velodyne_bin",
    "remove_ground",
    "write_velodyne_bin",
]
