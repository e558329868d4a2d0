"""Command-line pipeline: align, label, measure, pipeline, synth, eval.

Every subcommand reads a JSON config (``--config``) plus flag overrides
(flags win) and writes its artifacts into the config's ``out_dir``.  Exit
codes: 0 success, 1 I/O failure, 2 validation failure.  Failures emit a
machine-readable ``{"error": ..., "message": ...}`` object on stderr.

Stage wiring (defaults, all overridable via config keys):

* ``align``    reads ``recon_trajectory``, ``reference_trajectory``,
  ``point_cloud``; writes ``scaled_points.ply``, ``scaled_trajectory.json``,
  ``alignment_report.json``.
* ``label``    reads ``scaled_point_cloud`` (default: align's output),
  ``views_trajectory`` (default: align's output), ``mask_dir``,
  ``intrinsics``; writes ``voted_points.ply``, ``island_points.ply``,
  ``label_report.json``.
* ``measure``  reads ``island_point_cloud`` (default: label's output);
  writes ``measurement.json``, ``footprint.png``, ``height_map.png``.
* ``pipeline`` runs the three stages in sequence.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import backproject, footprint, synth
from .errors import IslandMetricsError, ParseError, ValidationError
from .geometry import (
    alignment_rmse,
    align_trajectories,
    apply_sim3_to_points,
    apply_sim3_to_trajectory,
    quaternion_from_rotation,
)
from .io import (
    GEODETIC,
    geodetic_to_local,
    read_intrinsics,
    read_mask,
    read_point_cloud,
    read_trajectory,
    trajectory_to_document,
    write_grayscale,
    write_point_cloud,
    write_trajectory,
)

EXIT_OK = 0
EXIT_IO = 1
EXIT_VALIDATION = 2


def _write_json(payload: dict, path: Path) -> None:
    path.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


def _load_config(args) -> dict:
    config = {}
    if getattr(args, "config", None):
        try:
            config = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ParseError(f"config is not valid JSON: {exc}") from None
        if not isinstance(config, dict):
            raise ValidationError("config must be a JSON object")
    labeling = dict(config.get("labeling", {}))
    if getattr(args, "min_votes", None) is not None:
        labeling["min_votes"] = args.min_votes
    if getattr(args, "depth_tolerance", None) is not None:
        labeling["depth_tolerance"] = args.depth_tolerance
    config["labeling"] = labeling
    if getattr(args, "cell_size", None) is not None:
        config["cell_size"] = args.cell_size
    if getattr(args, "out", None) is not None:
        config["out_dir"] = args.out
    return config


def _require_key(config: dict, key: str) -> str:
    if key not in config or config[key] in (None, ""):
        raise ValidationError(f"missing config key: {key}")
    return config[key]


def _out_dir(config: dict) -> Path:
    out = Path(_require_key(config, "out_dir"))
    out.mkdir(parents=True, exist_ok=True)
    return out


def _labeling_config(config: dict) -> backproject.LabelingConfig:
    raw = config.get("labeling", {})
    tolerance = raw.get("depth_tolerance", 2.0)
    try:
        if isinstance(tolerance, str):  # allow "inf" in config files
            tolerance = float(tolerance)
        return backproject.LabelingConfig(
            min_votes=int(raw.get("min_votes", 3)),
            depth_tolerance=tolerance,
            near_plane=float(raw.get("near_plane", backproject.DEFAULT_NEAR_PLANE)),
        )
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ValidationError):
            raise
        raise ValidationError(f"bad labeling config: {exc}") from None


def _load_reference_local(config: dict):
    doc = read_trajectory(_require_key(config, "reference_trajectory"))
    if doc.coordinate_frame == GEODETIC:
        origin = config.get("enu_origin")
        doc = geodetic_to_local(doc, origin=origin)
    return doc


def _run_align(config: dict) -> dict:
    out = _out_dir(config)
    recon_doc = read_trajectory(_require_key(config, "recon_trajectory"))
    reference_doc = _load_reference_local(config)
    cloud = read_point_cloud(_require_key(config, "point_cloud"))

    source = recon_doc.to_trajectory()
    target = reference_doc.to_trajectory()
    transform = align_trajectories(source, target)
    rmse = alignment_rmse(source, target, transform)

    scaled_cloud = apply_sim3_to_points(cloud, transform)
    scaled_trajectory = apply_sim3_to_trajectory(source, transform)
    write_point_cloud(scaled_cloud, out / "scaled_points.ply")
    write_trajectory(trajectory_to_document(scaled_trajectory), out / "scaled_trajectory.json")

    report = {
        "scale": transform.scale,
        "rotation": [float(v) for v in quaternion_from_rotation(transform.rotation)],
        "translation": [float(v) for v in transform.translation],
        "rmse_m": rmse,
        "n_frames": len(source),
        "rank_deficient": transform.rank_deficient,
    }
    _write_json(report, out / "alignment_report.json")
    return report


def _build_views(config: dict, out: Path):
    views_path = config.get("views_trajectory") or out / "scaled_trajectory.json"
    doc = read_trajectory(views_path)
    trajectory = doc.to_trajectory()
    for i, frame in enumerate(doc.frames):
        if frame.orientation is None:
            raise ValidationError(f"frames[{i}].orientation is required to build views")

    intrinsics = read_intrinsics(_require_key(config, "intrinsics"))
    mask_dir = Path(_require_key(config, "mask_dir"))

    views = []
    for fid, pose in trajectory:
        record = intrinsics if not isinstance(intrinsics, dict) else intrinsics.get(fid)
        if record is None:
            raise ValidationError(f"no intrinsics record for frame {fid}")
        mask_path = None
        for ext in ("png", "pgm"):
            candidate = mask_dir / f"mask_{fid:06d}.{ext}"
            if candidate.exists():
                mask_path = candidate
                break
        if mask_path is None:
            raise ValidationError(f"mask file missing for frame {fid} in {mask_dir}")
        views.append(
            backproject.ViewFrame(fid, pose.inverse(), record, read_mask(mask_path))
        )
    return views


def _run_label(config: dict) -> dict:
    out = _out_dir(config)
    cloud_path = config.get("scaled_point_cloud") or out / "scaled_points.ply"
    cloud = read_point_cloud(cloud_path)
    views = _build_views(config, out)
    labeling = _labeling_config(config)

    if labeling.min_votes > len(views):
        print(
            f"warning: min_votes {labeling.min_votes} exceeds view count {len(views)}; "
            "island cloud will be empty",
            file=sys.stderr,
        )

    labeled, island_idx = backproject.label_points(cloud, views, labeling)
    island = backproject.select_island(labeled, labeling.min_votes)
    write_point_cloud(labeled, out / "voted_points.ply")
    write_point_cloud(island, out / "island_points.ply")

    report = {
        "n_points": len(labeled),
        "n_views": len(views),
        "min_votes": labeling.min_votes,
        "depth_tolerance_m": labeling.depth_tolerance,
        "near_plane_m": labeling.near_plane,
        "island_points": int(island_idx.size),
    }
    _write_json(report, out / "label_report.json")
    return report


def _run_measure(config: dict) -> dict:
    out = _out_dir(config)
    island_path = config.get("island_point_cloud") or out / "island_points.ply"
    island = read_point_cloud(island_path)
    points2d, heights = footprint.drop_to_2d(island)

    cell_size = config.get("cell_size")
    if cell_size is not None and not float(cell_size) > 0.0:
        raise ValidationError(f"cell_size override must be positive, got {cell_size}")
    report, grid = footprint.measure_footprint(points2d, heights, cell_size=cell_size)

    payload = report.to_dict()
    truth = config.get("ground_truth_area_m2")
    if truth is not None:
        payload["ground_truth_area_m2"] = float(truth)
        payload["relative_error_percent"] = footprint.relative_error(report.area_m2, truth)

    _write_json(payload, out / "measurement.json")
    write_grayscale(footprint.footprint_image(grid).pixels, out / "footprint.png")
    write_grayscale(footprint.height_map(grid), out / "height_map.png")
    return payload


def cmd_align(args) -> int:
    report = _run_align(_load_config(args))
    print(json.dumps(report))
    return EXIT_OK


def cmd_label(args) -> int:
    report = _run_label(_load_config(args))
    print(json.dumps(report))
    return EXIT_OK


def cmd_measure(args) -> int:
    report = _run_measure(_load_config(args))
    print(json.dumps(report))
    return EXIT_OK


def cmd_pipeline(args) -> int:
    config = _load_config(args)
    align_report = _run_align(config)
    label_report = _run_label(config)
    measure_report = _run_measure(config)
    print(json.dumps({"align": align_report, "label": label_report, "measure": measure_report}))
    return EXIT_OK


def cmd_synth(args) -> int:
    try:
        raw = json.loads(Path(args.spec).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(f"scene spec is not valid JSON: {exc}") from None
    if args.seed is not None:
        raw["distortion"] = {"random_seed": args.seed}
    spec = synth.scene_spec_from_dict(raw)
    scene = synth.generate_scene(spec)
    synth.write_scene(scene, args.out)
    print(json.dumps({
        "out_dir": str(args.out),
        "points": len(scene.truth_cloud),
        "island_points": scene.island_point_count,
        "frames": len(scene.truth_trajectory),
        "truth_area_m2": scene.truth_area_m2,
        "truth_perimeter_taxicab_m": scene.truth_perimeter_taxicab_m,
    }))
    return EXIT_OK


def cmd_eval(args) -> int:
    try:
        manifest = json.loads(Path(args.manifest).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(f"manifest is not valid JSON: {exc}") from None
    if not isinstance(manifest, list):
        raise ValidationError("manifest must be a JSON array of entries")
    results = []
    for i, entry in enumerate(manifest):
        if not isinstance(entry, dict) or "estimate_m2" not in entry or "truth_m2" not in entry:
            raise ValidationError(f"manifest[{i}] needs estimate_m2 and truth_m2")
        results.append(
            {
                "name": entry.get("name", f"entry_{i}"),
                "estimate_m2": float(entry["estimate_m2"]),
                "truth_m2": float(entry["truth_m2"]),
                "relative_error_percent": footprint.relative_error(
                    entry["estimate_m2"], entry["truth_m2"]
                ),
            }
        )
    text = json.dumps(results, indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    print(text)
    return EXIT_OK


def _add_common_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="pipeline config JSON")
    parser.add_argument("--min-votes", type=int, dest="min_votes", help="override labeling.min_votes")
    parser.add_argument(
        "--depth-tolerance", type=float, dest="depth_tolerance", help="override labeling.depth_tolerance (m)"
    )
    parser.add_argument("--cell-size", type=float, dest="cell_size", help="fixed grid cell size (m)")
    parser.add_argument("--out", help="override out_dir")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="islandmetrics",
        description="Scale-align monocular reconstructions and measure landmass footprints.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    for name, func, doc in (
        ("align", cmd_align, "recover metric scale by trajectory alignment"),
        ("label", cmd_label, "vote points against per-view masks"),
        ("measure", cmd_measure, "measure area/perimeter and emit images"),
        ("pipeline", cmd_pipeline, "align, label and measure in sequence"),
    ):
        p = sub.add_parser(name, help=doc)
        _add_common_flags(p)
        p.set_defaults(func=func)

    p = sub.add_parser("synth", help="generate a synthetic scene directory")
    p.add_argument("--spec", required=True, help="scene spec JSON")
    p.add_argument("--out", required=True, help="output scene directory")
    p.add_argument("--seed", type=int, help="override the random distortion seed")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("eval", help="relative error over an estimate/truth manifest")
    p.add_argument("--manifest", required=True, help="JSON array of {name, estimate_m2, truth_m2}")
    p.add_argument("--out", help="write results JSON here as well as stdout")
    p.set_defaults(func=cmd_eval)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except OSError as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return EXIT_IO
    except (IslandMetricsError, ValueError, TypeError) as exc:
        # ValueError/TypeError cover coercion of malformed config values
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
