"""Trajectory JSON schema, geodetic conversion, intrinsics records."""

import json

import numpy as np
import pytest

import islandmetrics as im
from islandmetrics.errors import (
    DuplicateFrameIdError,
    ParseError,
    SchemaError,
    WrongFrameError,
)
from islandmetrics.io import (
    GEODETIC,
    LOCAL_METRIC,
    FrameRecord,
    TrajectoryDocument,
    enu_basis,
    geodetic_to_ecef,
    geodetic_to_local,
)
from islandmetrics.synth import PortableRng


def write_doc(tmp_path, payload, name="traj.json"):
    path = tmp_path / name
    path.write_text(json.dumps(payload))
    return path


class TestSchema:
    def test_minimal_local_document(self, tmp_path):
        path = write_doc(
            tmp_path,
            {
                "coordinate_frame": "local-metric",
                "frames": [
                    {"frame_id": 0, "position": [0, 0, 0]},
                    {"frame_id": 1, "position": [1, 0, 0]},
                    {"frame_id": 2, "position": [2, 0, 0]},
                ],
            },
        )
        doc = im.read_trajectory(path)
        assert doc.coordinate_frame == LOCAL_METRIC
        assert len(doc) == 3
        assert all(f.orientation is None for f in doc.frames)

    def test_duplicate_and_misordered_ids(self, tmp_path):
        dup = write_doc(
            tmp_path,
            {"coordinate_frame": "local-metric",
             "frames": [{"frame_id": 0, "position": [0, 0, 0]},
                        {"frame_id": 0, "position": [1, 0, 0]}]},
            "dup.json",
        )
        with pytest.raises(DuplicateFrameIdError):
            im.read_trajectory(dup)
        misordered = write_doc(
            tmp_path,
            {"coordinate_frame": "local-metric",
             "frames": [{"frame_id": 0, "position": [0, 0, 0]},
                        {"frame_id": 2, "position": [1, 0, 0]},
                        {"frame_id": 1, "position": [2, 0, 0]}]},
            "ord.json",
        )
        with pytest.raises(SchemaError) as info:
            im.read_trajectory(misordered)
        assert "frames[2]" in str(info.value)

    def test_geodetic_fixture(self, tmp_path):
        path = write_doc(
            tmp_path,
            {"coordinate_frame": "geodetic",
             "frames": [{"frame_id": i, "position": [40.69 + i * 1e-4, -74.04, 500.0]}
                        for i in range(4)]},
        )
        doc = im.read_trajectory(path)
        assert doc.coordinate_frame == GEODETIC
        with pytest.raises(WrongFrameError):
            doc.to_trajectory()  # conversion required before alignment

    def test_schema_errors_name_the_field(self, tmp_path):
        cases = [
            ({"frames": []}, "coordinate_frame"),
            ({"coordinate_frame": "einstein", "frames": []}, "coordinate_frame"),
            ({"coordinate_frame": "local-metric", "frames": [{}]}, "frames[0].frame_id"),
            ({"coordinate_frame": "local-metric",
              "frames": [{"frame_id": 0, "position": [1, 2]}]}, "frames[0].position"),
            ({"coordinate_frame": "local-metric",
              "frames": [{"frame_id": 0, "position": [1, 2, "x"]}]}, "frames[0].position"),
            ({"coordinate_frame": "geodetic",
              "frames": [{"frame_id": 0, "position": [99.0, 0, 0]}]}, "frames[0].position"),
            ({"coordinate_frame": "geodetic",
              "frames": [{"frame_id": 0, "position": [0, 190.0, 0]}]}, "frames[0].position"),
            ({"coordinate_frame": "local-metric",
              "frames": [{"frame_id": 0, "position": [0, 0, 0],
                          "orientation": [1, 1, 0, 0]}]}, "frames[0].orientation"),
        ]
        for i, (payload, field) in enumerate(cases):
            path = write_doc(tmp_path, payload, f"bad{i}.json")
            with pytest.raises(SchemaError) as info:
                im.read_trajectory(path)
            assert field in str(info.value), payload

    def test_non_json_is_parse_error(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json")
        with pytest.raises(ParseError):
            im.read_trajectory(path)

    def test_round_trip_with_orientation(self, tmp_path):
        rng = PortableRng(3)
        frames = []
        for i in range(5):
            q = rng.normal(4)
            q /= np.linalg.norm(q)
            frames.append(FrameRecord(i * 2, rng.uniform(3) * 100.0, q))
        doc = TrajectoryDocument(LOCAL_METRIC, tuple(frames))
        path = tmp_path / "rt.json"
        im.write_trajectory(doc, path)
        back = im.read_trajectory(path)
        assert [f.frame_id for f in back.frames] == [0, 2, 4, 6, 8]
        for a, b in zip(doc.frames, back.frames):
            assert np.array_equal(a.position, b.position)
            assert np.array_equal(a.orientation, b.orientation)


class TestGeodeticToLocal:
    def test_origin_maps_to_zero(self):
        doc = TrajectoryDocument(
            GEODETIC, (FrameRecord(0, np.array([40.69, -74.04, 3.0])),)
        )
        local = geodetic_to_local(doc)
        assert np.abs(local.frames[0].position).max() <= 1e-6

    def test_pure_altitude_offset(self):
        doc = TrajectoryDocument(
            GEODETIC,
            (FrameRecord(0, np.array([40.69, -74.04, 0.0])),
             FrameRecord(1, np.array([40.69, -74.04, 100.0]))),
        )
        local = geodetic_to_local(doc, origin=(40.69, -74.04, 0.0))
        assert np.abs(local.frames[1].position - [0.0, 0.0, 100.0]).max() <= 1e-3

    def test_meridian_step_against_arc_oracle(self):
        # independent oracle: the meridian radius of curvature at the equator
        # is a(1-e^2) = 6335439.327 m, so 0.001 deg of latitude is an arc of
        # 110.5743 m, and the tangent-plane drop is arc^2 / (2 a) = 0.00096 m
        doc = TrajectoryDocument(
            GEODETIC,
            (FrameRecord(0, np.array([0.0, 0.0, 0.0])),
             FrameRecord(1, np.array([0.001, 0.0, 0.0]))),
        )
        local = geodetic_to_local(doc, origin=(0.0, 0.0, 0.0))
        east, north, up = local.frames[1].position
        assert abs(north - 110.574) <= 0.01
        assert abs(east) <= 1e-9
        assert abs(up - (-0.00096)) <= 2e-5

    def test_chord_distances_preserved(self):
        # ENU distances of nearby points stay within 0.1% of ECEF distances
        rng = PortableRng(17)
        lat0, lon0, alt0 = 40.0, -74.0, 50.0
        lats = lat0 + (rng.uniform(10) * 2 - 1) * 0.05  # spans < 10 km
        lons = lon0 + (rng.uniform(10) * 2 - 1) * 0.05
        alts = alt0 + (rng.uniform(10) * 2 - 1) * 200.0
        frames = tuple(
            FrameRecord(i, np.array([lats[i], lons[i], alts[i]])) for i in range(10)
        )
        local = geodetic_to_local(TrajectoryDocument(GEODETIC, frames), origin=(lat0, lon0, alt0))
        enu = local.positions()
        ecef = geodetic_to_ecef(lats, lons, alts)
        for i in range(10):
            for j in range(i + 1, 10):
                d_enu = np.linalg.norm(enu[i] - enu[j])
                d_ecef = np.linalg.norm(ecef[i] - ecef[j])
                assert abs(d_enu - d_ecef) <= 1e-3 * d_ecef

    def test_wrong_frame(self):
        doc = TrajectoryDocument(LOCAL_METRIC, (FrameRecord(0, np.zeros(3)),))
        with pytest.raises(WrongFrameError):
            geodetic_to_local(doc)

    def test_enu_basis_is_orthonormal(self):
        for lat, lon in [(0.0, 0.0), (45.0, 45.0), (-33.0, 151.0), (89.0, -120.0)]:
            basis = enu_basis(lat, lon)
            assert np.abs(basis @ basis.T - np.eye(3)).max() <= 1e-12


class TestIntrinsics:
    def test_shared_record(self, tmp_path):
        path = tmp_path / "intr.json"
        record = im.IntrinsicsRecord(1000.0, 1000.0, 960.0, 540.0, 1920, 1080)
        im.io.write_intrinsics(record, path)
        assert im.read_intrinsics(path) == record

    def test_per_frame_array(self, tmp_path):
        path = tmp_path / "intr.json"
        path.write_text(json.dumps([
            {"frame_id": 0, "fx": 500, "fy": 500, "cx": 320, "cy": 240, "width": 640, "height": 480},
            {"frame_id": 1, "fx": 510, "fy": 510, "cx": 320, "cy": 240, "width": 640, "height": 480},
        ]))
        records = im.read_intrinsics(path)
        assert set(records) == {0, 1}
        assert records[1].fx == 510

    def test_invalid_records(self, tmp_path):
        bad = [
            {"fx": -1, "fy": 1, "cx": 1, "cy": 1, "width": 2, "height": 2},
            {"fx": 1, "fy": 1, "cx": 5, "cy": 1, "width": 2, "height": 2},
            {"fx": 1, "fy": 1, "cx": 1, "cy": 1, "width": 2},
        ]
        for i, payload in enumerate(bad):
            path = tmp_path / f"bad{i}.json"
            path.write_text(json.dumps(payload))
            with pytest.raises(SchemaError):
                im.read_intrinsics(path)
