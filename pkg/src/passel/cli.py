"""Command-line pipeline: ingest scenes, remove ground, generate
anchors, assign training samples, and report statistics.

Subcommands
===========

assign   KITTI-layout directory -> per-anchor assignment CSV + summary
stats    assignment CSV -> scatter / histogram / crossing CSV + figure
ground   velodyne .bin -> ground-filtered .bin + plane report line
bench    seeded synthetic scene -> threshold vs point-assisted timings

Exit codes: 0 success, 1 configuration error, 2 data error.  Partially
written outputs are removed on failure.  Flag precedence is
flags > config file > built-in defaults.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

from . import stats as stats_mod
from .anchors import generate_anchors
from .assignment import SampleLabel, assign_scene
from .bench import run_bench
from .cloud import build_index
from .config import RunConfig, load_config
from .errors import ConfigError, FormatError
from .ground import remove_ground
from .kitti import load_scene, read_velodyne_bin, write_velodyne_bin

JOBS_ENV = "PASS_ASSIGN_JOBS"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="passel",
        description="Point-assisted training-sample selection for LiDAR detection",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_assign = sub.add_parser("assign", help="assign anchors for every scene in a directory")
    p_assign.add_argument("data_dir", help="KITTI-layout root (velodyne/, label_2/, calib/)")
    p_assign.add_argument("--config", default=None, help="JSON run configuration")
    p_assign.add_argument("--out", required=True, help="assignment CSV output path")
    p_assign.add_argument("--mode", choices=("legacy", "pass", "both"), default="both")
    p_assign.add_argument("--no-ground", action="store_true",
                          help="skip ground removal (ablation)")
    p_assign.add_argument("--k", type=float, default=None, help="band-width hyperparameter")
    p_assign.add_argument("--alpha", type=float, default=None,
                          help="box-score weight (point weight becomes 1 - alpha)")
    p_assign.add_argument("--seed", type=int, default=None, help="ground-removal RNG seed")
    p_assign.add_argument("--jobs", type=int, default=None,
                          help=f"scene workers (default ${JOBS_ENV} or 1)")
    p_assign.add_argument("--limit", type=int, default=None, help="process at most N scenes")
    p_assign.set_defaults(func=cmd_assign)

    p_stats = sub.add_parser("stats", help="summarize an assignment CSV")
    p_stats.add_argument("assignment_csv")
    p_stats.add_argument("--kind", choices=("scatter", "hist", "crossing"), required=True)
    p_stats.add_argument("--out", required=True, help="report CSV output path")
    p_stats.add_argument("--label-kind", choices=("positive", "negative", "ignored"),
                         default="ignored", help="legacy label filtered by --kind hist")
    p_stats.add_argument("--bins", type=int, default=20, help="uniform histogram bins")
    p_stats.add_argument("--limit", type=int, default=None,
                         help="seeded subsample of records")
    p_stats.add_argument("--seed", type=int, default=0, help="subsample seed")
    p_stats.add_argument("--all-anchors", action="store_true",
                         help="keep anchors with no ground-truth overlap")
    p_stats.add_argument("--t-pos", type=float, default=None,
                         help="draw the positive threshold on the scatter figure")
    p_stats.add_argument("--t-neg", type=float, default=None,
                         help="draw the negative threshold on the scatter figure")
    p_stats.add_argument("--no-fig", action="store_true",
                         help="skip the figure next to the CSV")
    p_stats.set_defaults(func=cmd_stats)

    p_ground = sub.add_parser("ground", help="remove the ground plane from a velodyne file")
    p_ground.add_argument("cloud_bin")
    p_ground.add_argument("--out", required=True, help="filtered velodyne output path")
    p_ground.add_argument("--dist-thresh", type=float, default=0.2)
    p_ground.add_argument("--iterations", type=int, default=100)
    p_ground.add_argument("--max-tilt-deg", type=float, default=30.0)
    p_ground.add_argument("--min-inlier-frac", type=float, default=0.2)
    p_ground.add_argument("--seed", type=int, default=0)
    p_ground.set_defaults(func=cmd_ground)

    p_bench = sub.add_parser("bench", help="time assignment on a synthetic scene")
    p_bench.add_argument("--config", default=None)
    p_bench.add_argument("--gts", type=int, default=20)
    p_bench.add_argument("--points", type=int, default=120_000)
    p_bench.add_argument("--seed", type=int, default=0)
    p_bench.set_defaults(func=cmd_bench)

    return parser


def _apply_overrides(config: RunConfig, args: argparse.Namespace) -> RunConfig:
    selection = config.selection
    if args.k is not None:
        selection = replace(selection, k=args.k)
    if args.alpha is not None:
        selection = replace(selection, alpha=args.alpha, beta=1.0 - args.alpha)
    ground = config.ground
    if args.seed is not None:
        ground = replace(ground, seed=args.seed)
    ground_removal = config.ground_removal and not args.no_ground
    return replace(
        config, selection=selection, ground=ground, ground_removal=ground_removal
    )


def _frame_paths(root: Path, limit: int | None) -> list[tuple[str, Path, Path, Path]]:
    if not root.is_dir():
        raise FormatError(f"scene directory not found: {root}")
    velo_dir = root / "velodyne"
    bins = sorted(velo_dir.glob("*.bin")) if velo_dir.is_dir() else []
    if limit is not None:
        bins = bins[:limit]
    return [
        (p.stem, p, root / "label_2" / f"{p.stem}.txt", root / "calib" / f"{p.stem}.txt")
        for p in bins
    ]


_POOL_CONFIG: dict = {}


def _pool_init(config: RunConfig, mode: str) -> None:
    _POOL_CONFIG["config"] = config
    _POOL_CONFIG["mode"] = mode
    _POOL_CONFIG["anchors"] = None


def _process_frame(task: tuple[str, Path, Path, Path]) -> tuple[list, bool]:
    config: RunConfig = _POOL_CONFIG["config"]
    mode: str = _POOL_CONFIG["mode"]
    if _POOL_CONFIG["anchors"] is None:
        _POOL_CONFIG["anchors"] = {
            cls: generate_anchors(spec, config.bev_range)
            for cls, spec in config.specs.items()
        }
    anchors = _POOL_CONFIG["anchors"]

    frame_id, cloud_path, label_path, calib_path = task
    scene = load_scene(cloud_path, label_path, calib_path, frame_id=frame_id)
    cloud = scene.cloud
    plane_missing = False
    if config.ground_removal and len(cloud) >= 3:
        removal = remove_ground(cloud, config.ground)
        cloud = removal.cloud
        plane_missing = not removal.plane_found
    index = build_index(cloud, config.cell_size) if len(cloud) else None
    results = assign_scene(
        cloud,
        scene.gts,
        anchors,
        config.specs,
        config.selection,
        index=index,
        point_assist=(mode != "legacy"),
        record_point_iou=True,
        force_match=config.force_match,
        frame_id=frame_id,
    )
    return results, plane_missing


def cmd_assign(args: argparse.Namespace) -> int:
    config = _apply_overrides(load_config(args.config), args)
    if args.jobs is not None:
        jobs = args.jobs
    else:
        jobs = int(os.environ.get(JOBS_ENV, "1"))
    if jobs < 1:
        raise ConfigError(f"--jobs must be >= 1, got {jobs}")

    tasks = _frame_paths(Path(args.data_dir), args.limit)
    out_path = Path(args.out)
    label_counts: dict[str, Counter] = {"legacy": Counter(), "pass": Counter()}
    crossings: Counter = Counter()
    n_frames = 0
    missing_planes = 0

    try:
        with open(out_path, "w", newline="", encoding="utf-8") as f:
            import csv as _csv

            writer = _csv.writer(f, lineterminator="\n")
            writer.writerow(
                ["frame_id", "class", "anchor_index", "best_gt", "iou_box", "iou_point",
                 "score", "adjusted_score", "legacy_label", "pass_label"]
            )

            def emit(results, plane_missing):
                nonlocal n_frames, missing_planes
                n_frames += 1
                missing_planes += int(plane_missing)
                for r in results:
                    writer.writerow(
                        [
                            r.frame_id or "",
                            r.class_name,
                            r.anchor_index,
                            "" if r.best_gt is None else r.best_gt,
                            f"{r.iou_box:.6f}",
                            "" if r.iou_point is None else f"{r.iou_point:.6f}",
                            f"{r.score:.6f}",
                            f"{r.adjusted_score:.6f}",
                            r.legacy_label.value,
                            r.pass_label.value,
                        ]
                    )
                    label_counts["legacy"][r.legacy_label] += 1
                    label_counts["pass"][r.pass_label] += 1
                    if r.legacy_label is not r.pass_label:
                        crossings[(r.legacy_label.value, r.pass_label.value)] += 1

            if jobs == 1 or len(tasks) <= 1:
                _pool_init(config, args.mode)
                for task in tasks:
                    emit(*_process_frame(task))
            else:
                with ProcessPoolExecutor(
                    max_workers=jobs, initializer=_pool_init, initargs=(config, args.mode)
                ) as pool:
                    for results, plane_missing in pool.map(_process_frame, tasks):
                        emit(results, plane_missing)
    except BaseException:
        out_path.unlink(missing_ok=True)
        raise

    print(f"frames: {n_frames}")
    if missing_planes:
        print(f"warning: no dominant ground plane in {missing_planes} frame(s)", file=sys.stderr)
    for scheme in ("legacy", "pass"):
        counts = label_counts[scheme]
        print(
            f"{scheme}: positive={counts[SampleLabel.POSITIVE]} "
            f"negative={counts[SampleLabel.NEGATIVE]} "
            f"ignored={counts[SampleLabel.IGNORED]}"
        )
    total_changed = sum(crossings.values())
    print(f"crossings: {total_changed}")
    for (src, dst), count in sorted(crossings.items()):
        print(f"  {src} -> {dst}: {count}")
    return 0


def cmd_stats(args: argparse.Namespace) -> int:
    results = stats_mod.read_assignment_csv(args.assignment_csv)
    out_path = Path(args.out)
    fig_path = out_path.with_suffix(".png")
    try:
        if args.kind == "crossing":
            matrix = stats_mod.crossing_matrix(results)
            stats_mod.write_crossing_csv(matrix, out_path)
            if not args.no_fig:
                from .figures import save_crossing_figure

                save_crossing_figure(matrix, fig_path)
        else:
            records = stats_mod.collect_scatter(results, near_gt_only=not args.all_anchors)
            if args.limit is not None:
                records = stats_mod.subsample_records(records, args.limit, args.seed)
            if args.kind == "scatter":
                stats_mod.write_scatter_csv(records, out_path)
                if not args.no_fig:
                    from .figures import save_scatter_figure

                    save_scatter_figure(records, fig_path, t_pos=args.t_pos, t_neg=args.t_neg)
            else:
                hist = stats_mod.histogram_iou_point(
                    records,
                    SampleLabel(args.label_kind),
                    stats_mod.uniform_bins(args.bins),
                )
                stats_mod.write_histogram_csv(hist, out_path)
                if not args.no_fig:
                    from .figures import save_histogram_figure

                    save_histogram_figure(hist, fig_path)
    except BaseException:
        out_path.unlink(missing_ok=True)
        fig_path.unlink(missing_ok=True)
        raise
    print(f"records: {len(results)} -> {out_path}")
    return 0


def cmd_ground(args: argparse.Namespace) -> int:
    from .ground import GroundRemovalParams

    cloud = read_velodyne_bin(args.cloud_bin)
    params = GroundRemovalParams(
        dist_thresh=args.dist_thresh,
        iterations=args.iterations,
        max_normal_tilt=math.radians(args.max_tilt_deg),
        seed=args.seed,
        min_inlier_fraction=args.min_inlier_frac,
    )
    result = remove_ground(cloud, params)  # <3 points raises, mapping to exit 2
    out_path = Path(args.out)
    try:
        write_velodyne_bin(result.cloud, out_path)
    except BaseException:
        out_path.unlink(missing_ok=True)
        raise
    if result.plane_found:
        p = result.plane
        removed = len(cloud) - len(result.cloud)
        print(f"{p.a:.6f} {p.b:.6f} {p.c:.6f} {p.d:.6f} {removed}")
    else:
        print("warning: no dominant plane found; cloud copied unchanged", file=sys.stderr)
    return 0


def cmd_bench(args: argparse.Namespace) -> int:
    if args.gts <= 0 and args.points <= 0:
        print("nothing to benchmark")
        return 0
    config = load_config(args.config)
    report = run_bench(config, n_gts=args.gts, n_points=args.points, seed=args.seed)
    print(f"anchors={report.n_anchors} gts={report.n_gts} points={report.n_points}")
    print(
        f"legacy: {report.legacy_seconds:.3f} s "
        f"({report.anchors_per_second(report.legacy_seconds):,.0f} anchors/s)"
    )
    print(
        f"pass:   {report.pass_seconds:.3f} s "
        f"({report.anchors_per_second(report.pass_seconds):,.0f} anchors/s)"
    )
    print(f"overhead ratio: {report.overhead_ratio:.2f}x")
    print(f"checksum: {report.checksum}")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except (FormatError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
