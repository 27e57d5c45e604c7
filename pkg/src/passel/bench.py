"""Assignment throughput benchmark on seeded synthetic scenes.

Times the pure threshold path against the point-assisted path on the
same scene and reports the wall-clock overhead ratio.  The point path
includes building the BEV grid index, since a real pipeline pays that
cost per scene.  Identical seeds produce identical assignments;
timings naturally vary.
"""

from __future__ import annotations

import hashlib
import time
from dataclasses import dataclass

from .anchors import generate_anchors
from .assignment import AssignmentResult, assign_scene
from .cloud import build_index
from .config import RunConfig
from .synth import make_scene


@dataclass(frozen=True)
class BenchReport:
    n_anchors: int
    n_gts: int
    n_points: int
    legacy_seconds: float
    pass_seconds: float
    checksum: str

    @property
    def overhead_ratio(self) -> float:
        if self.legacy_seconds == 0.0:
            return float("inf")
        return self.pass_seconds / self.legacy_seconds

    def anchors_per_second(self, seconds: float) -> float:
        return self.n_anchors / seconds if seconds > 0 else float("inf")


def _digest(results: list[AssignmentResult]) -> str:
    h = hashlib.sha256()
    for r in results:
        h.update(
            f"{r.class_name},{r.anchor_index},{r.best_gt},{r.score:.9f},"
            f"{r.adjusted_score:.9f},{r.legacy_label.value},{r.pass_label.value};".encode()
        )
    return h.hexdigest()[:16]


def run_bench(config: RunConfig, n_gts: int, n_points: int, seed: int = 0) -> BenchReport:
    """Generate one scene and time both assignment paths over it."""
    specs = config.specs
    scene = make_scene(
        seed,
        specs,
        n_gts=n_gts,
        n_points=n_points,
        x_range=(config.bev_range.x_min, config.bev_range.x_max),
        y_range=(config.bev_range.y_min, config.bev_range.y_max),
        frame_id=f"bench-{seed}",
    )
    anchors = {cls: generate_anchors(spec, config.bev_range) for cls, spec in specs.items()}
    n_anchors = sum(len(a) for a in anchors.values())

    t0 = time.perf_counter()
    legacy = assign_scene(
        scene.cloud, scene.gts, anchors, specs, config.selection, point_assist=False
    )
    legacy_seconds = time.perf_counter() - t0

    t0 = time.perf_counter()
    index = build_index(scene.cloud, config.cell_size)
    adjusted = assign_scene(
        scene.cloud, scene.gts, anchors, specs, config.selection,
        index=index, point_assist=True,
    )
    pass_seconds = time.perf_counter() - t0

    return BenchReport(
        n_anchors=n_anchors,
        n_gts=n_gts,
        n_points=n_points,
        legacy_seconds=legacy_seconds,
        pass_seconds=pass_seconds,
        checksum=_digest(legacy) + "/" + _digest(adjusted),
    )
