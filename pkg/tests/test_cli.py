"""File-based subcommand behavior: wiring, exit codes, determinism."""

import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

import islandmetrics as im
from islandmetrics.cli import main

SPEC_JSON = {
    "island": {"shape": "rectangle", "width": 40, "height": 60},
    "height_profile": {"profile": "flat", "height": 0},
    "point_spacing": 1.0,
    "sea_ring": {"margin": 12, "spacing": 3.0},
    "orbit": {"radius": 120, "altitude": 150, "frame_count": 8},
    "intrinsics": {"fx": 300, "fy": 300, "cx": 160, "cy": 120, "width": 320, "height": 240},
    "distortion": {"random_seed": 11},
    "shore_inset": 1.0,
}


@pytest.fixture(scope="module")
def scene_dir(tmp_path_factory):
    root = tmp_path_factory.mktemp("scene")
    spec_path = root / "spec.json"
    spec_path.write_text(json.dumps(SPEC_JSON))
    assert main(["synth", "--spec", str(spec_path), "--out", str(root / "scene")]) == 0
    return root / "scene"


def write_config(path: Path, scene: Path, out: Path, **extra) -> Path:
    config = {
        "recon_trajectory": str(scene / "recon_trajectory.json"),
        "reference_trajectory": str(scene / "reference_trajectory.json"),
        "point_cloud": str(scene / "recon_points.ply"),
        "mask_dir": str(scene / "masks"),
        "intrinsics": str(scene / "intrinsics.json"),
        "out_dir": str(out),
        "labeling": {"min_votes": 3, "depth_tolerance": 2.0},
    }
    config.update(extra)
    path.write_text(json.dumps(config))
    return path


def read_json(path: Path) -> dict:
    return json.loads(path.read_text())


class TestSynth:
    def test_scene_directory_layout(self, scene_dir):
        for name in (
            "recon_points.ply",
            "truth_points.ply",
            "recon_trajectory.json",
            "reference_trajectory.json",
            "intrinsics.json",
            "truth.json",
        ):
            assert (scene_dir / name).exists(), name
        masks = sorted((scene_dir / "masks").iterdir())
        assert len(masks) == 8
        assert masks[0].name == "mask_000000.png"
        truth = read_json(scene_dir / "truth.json")
        assert truth["truth_area_m2"] == 2400.0
        assert truth["truth_perimeter_taxicab_m"] == 200.0

    def test_artifacts_parse_with_ingest_readers(self, scene_dir):
        cloud = im.read_point_cloud(scene_dir / "recon_points.ply")
        assert cloud.colors is not None
        doc = im.read_trajectory(scene_dir / "reference_trajectory.json")
        assert len(doc) == 8
        record = im.read_intrinsics(scene_dir / "intrinsics.json")
        mask = im.read_mask(scene_dir / "masks" / "mask_000003.png")
        assert (mask.width, mask.height) == (record.width, record.height)

    def test_invalid_spec_exits_2(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({"island": {"shape": "blob"}}))
        assert main(["synth", "--spec", str(bad), "--out", str(tmp_path / "x")]) == 2
        err = json.loads(capsys.readouterr().err)
        assert err["error"] == "SpecInvalidError"


class TestAlign:
    def test_recovers_distortion_scale(self, scene_dir, tmp_path):
        out = tmp_path / "out"
        config = write_config(tmp_path / "c.json", scene_dir, out)
        assert main(["align", "--config", str(config)]) == 0
        report = read_json(out / "alignment_report.json")
        truth = read_json(scene_dir / "truth.json")
        assert abs(report["scale"] - truth["distortion"]["scale"]) <= 1e-9 * truth["distortion"]["scale"]
        assert report["n_frames"] == 8
        assert report["rmse_m"] <= 1e-6
        assert (out / "scaled_points.ply").exists()
        assert (out / "scaled_trajectory.json").exists()

    def test_identity_scene_gives_unit_scale(self, tmp_path):
        spec = dict(SPEC_JSON)
        spec.pop("distortion")
        spec_path = tmp_path / "spec.json"
        spec_path.write_text(json.dumps(spec))
        assert main(["synth", "--spec", str(spec_path), "--out", str(tmp_path / "scene")]) == 0
        out = tmp_path / "out"
        config = write_config(tmp_path / "c.json", tmp_path / "scene", out)
        assert main(["align", "--config", str(config)]) == 0
        report = read_json(out / "alignment_report.json")
        assert report["scale"] == pytest.approx(1.0, abs=1e-12)
        assert report["rmse_m"] <= 1e-9

    def test_mismatched_frames_exit_2(self, scene_dir, tmp_path, capsys):
        truncated = tmp_path / "short.json"
        doc = read_json(scene_dir / "recon_trajectory.json")
        doc["frames"] = doc["frames"][:-1]
        truncated.write_text(json.dumps(doc))
        out = tmp_path / "out"
        config = write_config(
            tmp_path / "c.json", scene_dir, out, recon_trajectory=str(truncated)
        )
        assert main(["align", "--config", str(config)]) == 2
        err = json.loads(capsys.readouterr().err)
        assert err["error"] in ("LengthMismatchError", "FrameIdMismatchError")

    def test_geodetic_reference_converted(self, scene_dir, tmp_path):
        # a geodetic reference goes through the WGS84 -> ENU converter; with
        # the recon equal to that conversion the alignment is the identity
        geo = {
            "coordinate_frame": "geodetic",
            "frames": [
                {"frame_id": i, "position": [40.69 + 1e-4 * i, -74.04 + 5e-5 * i, 400.0 + i]}
                for i in range(5)
            ],
        }
        geo_path = tmp_path / "geo.json"
        geo_path.write_text(json.dumps(geo))
        local_doc = im.geodetic_to_local(im.read_trajectory(geo_path))
        local_path = tmp_path / "local.json"
        im.write_trajectory(local_doc, local_path)
        cloud_path = tmp_path / "cloud.ply"
        im.write_point_cloud(im.PointCloud(np.zeros((4, 3))), cloud_path)
        out = tmp_path / "out"
        config = write_config(
            tmp_path / "c.json",
            scene_dir,
            out,
            recon_trajectory=str(local_path),
            reference_trajectory=str(geo_path),
            point_cloud=str(cloud_path),
        )
        assert main(["align", "--config", str(config)]) == 0
        report = read_json(out / "alignment_report.json")
        assert report["scale"] == pytest.approx(1.0, rel=1e-9)
        assert report["rmse_m"] <= 1e-6

    def test_missing_config_key_exit_2(self, tmp_path, capsys):
        config = tmp_path / "c.json"
        config.write_text(json.dumps({"out_dir": str(tmp_path / "out")}))
        assert main(["align", "--config", str(config)]) == 2
        err = json.loads(capsys.readouterr().err)
        assert "recon_trajectory" in err["message"]

    def test_missing_file_exit_1(self, tmp_path, capsys):
        config = tmp_path / "c.json"
        config.write_text(
            json.dumps(
                {
                    "recon_trajectory": str(tmp_path / "absent.json"),
                    "reference_trajectory": str(tmp_path / "absent.json"),
                    "point_cloud": str(tmp_path / "absent.ply"),
                    "out_dir": str(tmp_path / "out"),
                }
            )
        )
        assert main(["align", "--config", str(config)]) == 1
        assert json.loads(capsys.readouterr().err)["error"] == "FileNotFoundError"


@pytest.fixture(scope="module")
def aligned(scene_dir, tmp_path_factory):
    out = tmp_path_factory.mktemp("aligned")
    config = write_config(out / "c.json", scene_dir, out)
    assert main(["align", "--config", str(config)]) == 0
    return out, config


class TestLabel:
    def test_min_votes_one_recovers_island_lattice(self, scene_dir, aligned):
        out, config = aligned
        assert main(["label", "--config", str(config), "--min-votes", "1"]) == 0
        island = im.read_point_cloud(out / "island_points.ply")
        truth = read_json(scene_dir / "truth.json")
        assert len(island) == truth["island_point_count"]
        truth_cloud = im.read_point_cloud(scene_dir / "truth_points.ply")
        expected = truth_cloud.positions[: len(island)]
        assert np.abs(island.positions - expected).max() <= 1e-6

    def test_default_votes_match_label_report(self, aligned):
        out, config = aligned
        assert main(["label", "--config", str(config)]) == 0
        report = read_json(out / "label_report.json")
        voted = im.read_point_cloud(out / "voted_points.ply")
        assert report["n_points"] == len(voted)
        assert report["island_points"] == int((voted.votes >= 3).sum())
        assert report["min_votes"] == 3

    def test_min_votes_above_view_count_warns_and_succeeds(self, aligned, capsys):
        out, config = aligned
        code = main(["label", "--config", str(config), "--min-votes", "99"])
        captured = capsys.readouterr()
        assert code == 0
        assert "min_votes 99 exceeds view count 8" in captured.err
        island = im.read_point_cloud(out / "island_points.ply")
        assert len(island) == 0

    def test_missing_mask_exit_2_names_frame(self, scene_dir, aligned, tmp_path, capsys):
        out, _ = aligned
        sparse_masks = tmp_path / "masks"
        sparse_masks.mkdir()
        for mask in (scene_dir / "masks").iterdir():
            if mask.name != "mask_000004.png":
                (sparse_masks / mask.name).write_bytes(mask.read_bytes())
        config = write_config(
            tmp_path / "c.json", scene_dir, out, mask_dir=str(sparse_masks)
        )
        assert main(["label", "--config", str(config)]) == 2
        err = json.loads(capsys.readouterr().err)
        assert "frame 4" in err["message"]


class TestMeasureAndPipeline:
    def test_pipeline_measures_area(self, scene_dir, tmp_path):
        out = tmp_path / "out"
        config = write_config(
            tmp_path / "c.json", scene_dir, out, ground_truth_area_m2=2400.0
        )
        assert main(["pipeline", "--config", str(config)]) == 0
        report = read_json(out / "measurement.json")
        assert abs(report["relative_error_percent"]) <= 5.0
        assert report["area_m2"] == report["cell_count"] * (
            report["cell_size_m"] * report["cell_size_m"]
        )
        assert (out / "footprint.png").exists()
        assert (out / "height_map.png").exists()

    def test_cell_size_override_lands_in_report(self, scene_dir, tmp_path):
        out = tmp_path / "out"
        config = write_config(tmp_path / "c.json", scene_dir, out)
        assert main(["pipeline", "--config", str(config), "--cell-size", "1.0"]) == 0
        assert read_json(out / "measurement.json")["cell_size_m"] == 1.0

    def test_pipeline_equals_stagewise_run(self, scene_dir, tmp_path):
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        config_a = write_config(tmp_path / "ca.json", scene_dir, out_a)
        config_b = write_config(tmp_path / "cb.json", scene_dir, out_b)
        assert main(["pipeline", "--config", str(config_a)]) == 0
        for stage in ("align", "label", "measure"):
            assert main([stage, "--config", str(config_b)]) == 0
        for name in (
            "scaled_points.ply",
            "scaled_trajectory.json",
            "alignment_report.json",
            "voted_points.ply",
            "island_points.ply",
            "measurement.json",
            "footprint.png",
            "height_map.png",
        ):
            assert (out_a / name).read_bytes() == (out_b / name).read_bytes(), name

    def test_rerun_is_byte_identical(self, scene_dir, tmp_path):
        out = tmp_path / "out"
        config = write_config(tmp_path / "c.json", scene_dir, out)
        assert main(["pipeline", "--config", str(config)]) == 0
        snapshot = {
            p.name: p.read_bytes() for p in out.iterdir() if p.is_file()
        }
        assert main(["pipeline", "--config", str(config)]) == 0
        for name, blob in snapshot.items():
            assert (out / name).read_bytes() == blob, name

    def test_empty_island_cloud_measure_exit_2(self, tmp_path, capsys):
        empty = tmp_path / "empty.ply"
        im.write_point_cloud(im.PointCloud(np.zeros((0, 3))), empty)
        config = tmp_path / "c.json"
        config.write_text(
            json.dumps({"out_dir": str(tmp_path / "out"), "island_point_cloud": str(empty)})
        )
        assert main(["measure", "--config", str(config)]) == 2
        assert json.loads(capsys.readouterr().err)["error"] == "EmptyCloudError"


class TestEval:
    def test_reported_island_manifest(self, tmp_path, capsys):
        manifest = tmp_path / "manifest.json"
        manifest.write_text(
            json.dumps(
                [
                    {"name": "liberty", "estimate_m2": 56685.68, "truth_m2": 59560.0},
                    {"name": "governors", "estimate_m2": 623323.31, "truth_m2": 696000.0},
                    {"name": "somes", "estimate_m2": 280875.98, "truth_m2": 249000.0},
                    {"name": "ellis", "estimate_m2": 119120.51, "truth_m2": 111000.0},
                ]
            )
        )
        out = tmp_path / "re.json"
        assert main(["eval", "--manifest", str(manifest), "--out", str(out)]) == 0
        results = read_json(out)
        errors = [r["relative_error_percent"] for r in results]
        expected = [-4.83, -10.44, 12.80, 7.32]
        assert all(abs(e - x) <= 0.01 for e, x in zip(errors, expected))

    def test_bad_manifest_exit_2(self, tmp_path, capsys):
        manifest = tmp_path / "m.json"
        manifest.write_text(json.dumps([{"name": "x"}]))
        assert main(["eval", "--manifest", str(manifest)]) == 2
        capsys.readouterr()


class TestProcessContract:
    def test_stderr_json_and_exit_code_in_subprocess(self, tmp_path):
        result = subprocess.run(
            [sys.executable, "-m", "islandmetrics.cli", "measure", "--config",
             str(tmp_path / "missing.json")],
            capture_output=True,
            text=True,
            cwd="/root/pkg",
            env={"PYTHONPATH": "src", "PATH": "/usr/bin:/bin"},
        )
        assert result.returncode == 1  # unreadable config file is an I/O failure
        payload = json.loads(result.stderr)
        assert payload["error"] == "FileNotFoundError"


class TestConfigVariants:
    def test_per_frame_intrinsics_array(self, scene_dir, aligned, tmp_path):
        out, _ = aligned
        shared = json.loads((scene_dir / "intrinsics.json").read_text())
        per_frame = [dict(shared, frame_id=i) for i in range(8)]
        intr_path = tmp_path / "per_frame.json"
        intr_path.write_text(json.dumps(per_frame))
        config = write_config(tmp_path / "c.json", scene_dir, out, intrinsics=str(intr_path))
        assert main(["label", "--config", str(config), "--min-votes", "1"]) == 0
        island = im.read_point_cloud(out / "island_points.ply")
        truth = json.loads((scene_dir / "truth.json").read_text())
        assert len(island) == truth["island_point_count"]

    def test_pgm_masks_bind_to_frames(self, scene_dir, aligned, tmp_path):
        out, _ = aligned
        pgm_dir = tmp_path / "masks_pgm"
        pgm_dir.mkdir()
        for mask_path in sorted((scene_dir / "masks").iterdir()):
            pixels = im.read_grayscale(mask_path)
            im.write_grayscale(pixels, pgm_dir / mask_path.name.replace(".png", ".pgm"))
        config = write_config(tmp_path / "c.json", scene_dir, out, mask_dir=str(pgm_dir))
        assert main(["label", "--config", str(config)]) == 0
        report = read_json(out / "label_report.json")
        truth = json.loads((scene_dir / "truth.json").read_text())
        assert report["island_points"] == truth["island_point_count"]

    def test_infinite_depth_tolerance_string(self, scene_dir, aligned, tmp_path):
        out, _ = aligned
        config = write_config(tmp_path / "c.json", scene_dir, out,
                              labeling={"min_votes": 1, "depth_tolerance": "inf"})
        assert main(["label", "--config", str(config)]) == 0
        assert read_json(out / "label_report.json")["depth_tolerance_m"] == float("inf")

    def test_depth_tolerance_flag_overrides_config(self, scene_dir, aligned, tmp_path):
        out, _ = aligned
        config = write_config(tmp_path / "c.json", scene_dir, out,
                              labeling={"min_votes": 3, "depth_tolerance": 0.5})
        assert main(["label", "--config", str(config), "--depth-tolerance", "7.5"]) == 0
        assert read_json(out / "label_report.json")["depth_tolerance_m"] == 7.5

    def test_pinned_enu_origin(self, scene_dir, tmp_path):
        # pinning the origin one frame later shifts the ENU frame but not the
        # recovered scale
        geo = {
            "coordinate_frame": "geodetic",
            "frames": [
                {"frame_id": i, "position": [40.69 + 1e-4 * i, -74.04, 400.0 + 2.0 * i]}
                for i in range(4)
            ],
        }
        geo_path = tmp_path / "geo.json"
        geo_path.write_text(json.dumps(geo))
        origin = [40.69, -74.04, 400.0]
        local_doc = im.geodetic_to_local(im.read_trajectory(geo_path), origin=origin)
        local_path = tmp_path / "local.json"
        im.write_trajectory(local_doc, local_path)
        cloud_path = tmp_path / "cloud.ply"
        im.write_point_cloud(im.PointCloud(np.zeros((1, 3))), cloud_path)
        out = tmp_path / "out"
        config = write_config(
            tmp_path / "c.json", scene_dir, out,
            recon_trajectory=str(local_path),
            reference_trajectory=str(geo_path),
            point_cloud=str(cloud_path),
            enu_origin=origin,
        )
        assert main(["align", "--config", str(config)]) == 0
        report = read_json(out / "alignment_report.json")
        assert report["scale"] == pytest.approx(1.0, rel=1e-9)
        assert report["rmse_m"] <= 1e-6

    def test_malformed_labeling_values_exit_2(self, scene_dir, aligned, tmp_path, capsys):
        out, _ = aligned
        config = write_config(tmp_path / "c.json", scene_dir, out,
                              labeling={"min_votes": "many", "depth_tolerance": 2.0})
        assert main(["label", "--config", str(config)]) == 2
        assert json.loads(capsys.readouterr().err)["error"] == "ValidationError"
        config = write_config(tmp_path / "c2.json", scene_dir, out,
                              labeling={"depth_tolerance": "garbage"})
        assert main(["label", "--config", str(config)]) == 2
        capsys.readouterr()

    def test_views_without_orientation_exit_2(self, scene_dir, aligned, tmp_path, capsys):
        out, _ = aligned
        doc = read_json(out / "scaled_trajectory.json")
        for frame in doc["frames"]:
            frame.pop("orientation", None)
        bare = tmp_path / "bare.json"
        bare.write_text(json.dumps(doc))
        config = write_config(tmp_path / "c.json", scene_dir, out, views_trajectory=str(bare))
        assert main(["label", "--config", str(config)]) == 2
        err = json.loads(capsys.readouterr().err)
        assert "orientation" in err["message"]
