"""Run configuration: one JSON document drives a whole pipeline run.

Unknown keys are rejected so typos fail loudly instead of silently
falling back to defaults.  Command-line flags override config fields,
which override the built-in defaults.

The shipped class defaults mirror common public detector settings
(sizes and anchor heights are conventional values, configurable and
never used as test oracles); the car thresholds are {0.6, 0.45} and
the pedestrian/cyclist thresholds {0.5, 0.35}.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from .anchors import BevRange, ClassAnchorSpec
from .assignment import SelectionParams
from .cloud import EmptyUnionPolicy
from .errors import ConfigError
from .ground import GroundRemovalParams

DEFAULT_CLASSES = (
    ClassAnchorSpec(
        class_name="Car", l=3.9, w=1.6, h=1.56, z_center=-1.0,
        rotations=(0.0, math.pi / 2.0), t_pos=0.6, t_neg=0.45,
    ),
    ClassAnchorSpec(
        class_name="Pedestrian", l=0.8, w=0.6, h=1.73, z_center=-0.6,
        rotations=(0.0, math.pi / 2.0), t_pos=0.5, t_neg=0.35,
    ),
    ClassAnchorSpec(
        class_name="Cyclist", l=1.76, w=0.6, h=1.73, z_center=-0.6,
        rotations=(0.0, math.pi / 2.0), t_pos=0.5, t_neg=0.35,
    ),
)

DEFAULT_RANGE = BevRange(x_min=0.0, x_max=70.4, y_min=-40.0, y_max=40.0, stride=0.4)


@dataclass(frozen=True)
class RunConfig:
    classes: tuple[ClassAnchorSpec, ...] = DEFAULT_CLASSES
    bev_range: BevRange = DEFAULT_RANGE
    selection: SelectionParams = field(default_factory=SelectionParams)
    ground: GroundRemovalParams = field(default_factory=GroundRemovalParams)
    ground_removal: bool = True
    cell_size: float = 1.0
    force_match: bool = False
    subsample_seed: int = 0
    subsample_limit: int | None = None

    def __post_init__(self) -> None:
        if self.cell_size <= 0:
            raise ConfigError(f"cell_size must be positive, got {self.cell_size}")
        if not self.classes:
            raise ConfigError("at least one class spec is required")
        names = [c.class_name for c in self.classes]
        if len(set(names)) != len(names):
            raise ConfigError(f"duplicate class names in config: {names}")

    @property
    def specs(self) -> dict[str, ClassAnchorSpec]:
        return {c.class_name: c for c in self.classes}


def _require_keys(mapping: dict, allowed: set[str], context: str) -> None:
    unknown = set(mapping) - allowed
    if unknown:
        raise ConfigError(f"unknown key {sorted(unknown)[0]!r} in {context}")


def _class_spec(entry: dict, i: int) -> ClassAnchorSpec:
    context = f"classes[{i}]"
    _require_keys(
        entry, {"name", "size", "z_center", "rotations", "t_pos", "t_neg"}, context
    )
    try:
        size = entry["size"]
        if len(size) != 3:
            raise ConfigError(f"{context}.size must be [l, w, h]")
        return ClassAnchorSpec(
            class_name=str(entry["name"]),
            l=float(size[0]),
            w=float(size[1]),
            h=float(size[2]),
            z_center=float(entry.get("z_center", -1.0)),
            rotations=tuple(float(r) for r in entry.get("rotations", (0.0, math.pi / 2))),
            t_pos=float(entry["t_pos"]),
            t_neg=float(entry["t_neg"]),
        )
    except KeyError as exc:
        raise ConfigError(f"{context} is missing required key {exc.args[0]!r}") from None
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{context}: {exc}") from None


def from_dict(doc: dict) -> RunConfig:
    _require_keys(
        doc,
        {"classes", "bev_range", "selection", "ground", "ground_removal",
         "cell_size", "force_match", "subsample"},
        "config",
    )
    kwargs: dict = {}
    try:
        if "classes" in doc:
            kwargs["classes"] = tuple(
                _class_spec(entry, i) for i, entry in enumerate(doc["classes"])
            )
        if "bev_range" in doc:
            rng = doc["bev_range"]
            _require_keys(rng, {"x_min", "x_max", "y_min", "y_max", "stride"}, "bev_range")
            kwargs["bev_range"] = BevRange(**{k: float(v) for k, v in rng.items()})
        if "selection" in doc:
            sel = doc["selection"]
            _require_keys(sel, {"k", "alpha", "beta", "empty_union_policy"}, "selection")
            policy = EmptyUnionPolicy(sel.get("empty_union_policy", "zero"))
            alpha = float(sel.get("alpha", 0.5))
            kwargs["selection"] = SelectionParams(
                k=float(sel.get("k", 5.0)),
                alpha=alpha,
                beta=float(sel.get("beta", 1.0 - alpha)),
                empty_union_policy=policy,
            )
        if "ground" in doc:
            grd = doc["ground"]
            _require_keys(
                grd,
                {"dist_thresh", "iterations", "max_normal_tilt_deg", "seed",
                 "min_inlier_fraction"},
                "ground",
            )
            kwargs["ground"] = GroundRemovalParams(
                dist_thresh=float(grd.get("dist_thresh", 0.2)),
                iterations=int(grd.get("iterations", 100)),
                max_normal_tilt=math.radians(float(grd.get("max_normal_tilt_deg", 30.0))),
                seed=int(grd.get("seed", 0)),
                min_inlier_fraction=float(grd.get("min_inlier_fraction", 0.2)),
            )
        if "ground_removal" in doc:
            kwargs["ground_removal"] = bool(doc["ground_removal"])
        if "cell_size" in doc:
            kwargs["cell_size"] = float(doc["cell_size"])
        if "force_match" in doc:
            kwargs["force_match"] = bool(doc["force_match"])
        if "subsample" in doc:
            sub = doc["subsample"]
            _require_keys(sub, {"seed", "limit"}, "subsample")
            kwargs["subsample_seed"] = int(sub.get("seed", 0))
            limit = sub.get("limit")
            kwargs["subsample_limit"] = None if limit is None else int(limit)
        return RunConfig(**kwargs)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def load_config(path: str | Path | None) -> RunConfig:
    """Load a config file; a missing path yields the defaults."""
    if path is None:
        return RunConfig()
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: config root must be a JSON object")
    return from_dict(doc)
