"""Canonical trajectory documents and the geodetic-to-local converter.

Schema (JSON, UTF-8)::

    {
      "coordinate_frame": "local-metric" | "geodetic",
      "frames": [
        {"frame_id": 0, "position": [a, b, c], "orientation": [w, x, y, z]},
        ...
      ]
    }

For ``local-metric`` documents, ``position`` is the camera center in meters.
For ``geodetic`` documents it is ``[latitude_deg, longitude_deg, altitude_m]``
on the WGS84 ellipsoid.  ``orientation`` is an optional unit quaternion of the
camera-to-world rotation; in geodetic documents it is interpreted as already
expressed in the local East-North-Up frame and passes through conversion
unchanged.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import (
    DuplicateFrameIdError,
    ParseError,
    SchemaError,
    WrongFrameError,
)
from ..geometry import Convention, RigidPose, Trajectory, rotation_from_quaternion

LOCAL_METRIC = "local-metric"
GEODETIC = "geodetic"

# WGS84 ellipsoid
_WGS84_A = 6378137.0
_WGS84_INV_F = 298.257223563
_WGS84_F = 1.0 / _WGS84_INV_F
_WGS84_E2 = _WGS84_F * (2.0 - _WGS84_F)

_QUAT_NORM_TOL = 1e-6


@dataclass(frozen=True, eq=False)
class FrameRecord:
    frame_id: int
    position: np.ndarray
    orientation: np.ndarray | None = None


@dataclass(frozen=True, eq=False)
class TrajectoryDocument:
    """Validated trajectory file content."""

    coordinate_frame: str
    frames: tuple

    def __post_init__(self):
        if self.coordinate_frame not in (LOCAL_METRIC, GEODETIC):
            raise SchemaError("coordinate_frame", f"must be {LOCAL_METRIC!r} or {GEODETIC!r}")
        last = None
        seen = set()
        for i, frame in enumerate(self.frames):
            loc = f"frames[{i}]"
            if frame.frame_id in seen:
                raise DuplicateFrameIdError(f"{loc}.frame_id", f"duplicate id {frame.frame_id}")
            if last is not None and frame.frame_id <= last:
                raise SchemaError(
                    f"{loc}.frame_id",
                    f"ids must be strictly increasing, got {frame.frame_id} after {last}",
                )
            seen.add(frame.frame_id)
            last = frame.frame_id
            if self.coordinate_frame == GEODETIC:
                lat, lon = frame.position[0], frame.position[1]
                if not -90.0 <= lat <= 90.0:
                    raise SchemaError(f"{loc}.position", f"latitude {lat} outside [-90, 90]")
                if not -180.0 <= lon <= 180.0:
                    raise SchemaError(f"{loc}.position", f"longitude {lon} outside [-180, 180]")
            if frame.orientation is not None:
                norm = float(np.linalg.norm(frame.orientation))
                if abs(norm - 1.0) > _QUAT_NORM_TOL:
                    raise SchemaError(f"{loc}.orientation", f"quaternion norm {norm} is not 1")

    def __len__(self) -> int:
        return len(self.frames)

    def positions(self) -> np.ndarray:
        if not self.frames:
            return np.zeros((0, 3))
        return np.stack([f.position for f in self.frames])

    def to_trajectory(self) -> Trajectory:
        """Build camera-to-world poses; identity rotation where none is stored."""
        if self.coordinate_frame != LOCAL_METRIC:
            raise WrongFrameError("convert geodetic trajectories to local-metric first")
        frames = []
        for f in self.frames:
            rot = np.eye(3) if f.orientation is None else rotation_from_quaternion(f.orientation)
            frames.append((f.frame_id, RigidPose(rot, f.position, Convention.CAMERA_TO_WORLD)))
        return Trajectory(tuple(frames))


def _require(obj: dict, key: str, loc: str):
    if key not in obj:
        raise SchemaError(f"{loc}.{key}" if loc else key, "missing required field")
    return obj[key]


def _as_float_list(value, length: int, loc: str) -> np.ndarray:
    if not isinstance(value, (list, tuple)) or len(value) != length:
        raise SchemaError(loc, f"must be a list of {length} numbers")
    try:
        arr = np.array([float(v) for v in value], dtype=np.float64)
    except (TypeError, ValueError):
        raise SchemaError(loc, "must contain only numbers") from None
    if not np.isfinite(arr).all():
        raise SchemaError(loc, "must be finite")
    return arr


def document_from_dict(obj) -> TrajectoryDocument:
    if not isinstance(obj, dict):
        raise SchemaError("$", "top level must be a JSON object")
    frame_kind = _require(obj, "coordinate_frame", "")
    frames_raw = _require(obj, "frames", "")
    if not isinstance(frames_raw, list):
        raise SchemaError("frames", "must be a list")
    frames = []
    for i, entry in enumerate(frames_raw):
        loc = f"frames[{i}]"
        if not isinstance(entry, dict):
            raise SchemaError(loc, "must be an object")
        fid = _require(entry, "frame_id", loc)
        if isinstance(fid, bool) or not isinstance(fid, int):
            raise SchemaError(f"{loc}.frame_id", "must be an integer")
        position = _as_float_list(_require(entry, "position", loc), 3, f"{loc}.position")
        orientation = None
        if entry.get("orientation") is not None:
            orientation = _as_float_list(entry["orientation"], 4, f"{loc}.orientation")
        frames.append(FrameRecord(fid, position, orientation))
    return TrajectoryDocument(frame_kind, tuple(frames))


def read_trajectory(path) -> TrajectoryDocument:
    """Read and validate a trajectory JSON file."""
    text = Path(path).read_bytes()
    try:
        obj = json.loads(text.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        offset = getattr(exc, "pos", None)
        raise ParseError(f"trajectory file is not valid JSON: {exc}", offset=offset) from None
    return document_from_dict(obj)


def write_trajectory(doc: TrajectoryDocument, path) -> None:
    frames = []
    for f in doc.frames:
        entry = {"frame_id": int(f.frame_id), "position": [float(v) for v in f.position]}
        if f.orientation is not None:
            entry["orientation"] = [float(v) for v in f.orientation]
        frames.append(entry)
    payload = {"coordinate_frame": doc.coordinate_frame, "frames": frames}
    Path(path).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


def geodetic_to_ecef(lat_deg, lon_deg, alt_m) -> np.ndarray:
    """WGS84 geodetic coordinates to Earth-centered Earth-fixed (meters)."""
    lat = np.radians(np.asarray(lat_deg, dtype=np.float64))
    lon = np.radians(np.asarray(lon_deg, dtype=np.float64))
    alt = np.asarray(alt_m, dtype=np.float64)
    sin_lat, cos_lat = np.sin(lat), np.cos(lat)
    sin_lon, cos_lon = np.sin(lon), np.cos(lon)
    n = _WGS84_A / np.sqrt(1.0 - _WGS84_E2 * sin_lat * sin_lat)
    x = (n + alt) * cos_lat * cos_lon
    y = (n + alt) * cos_lat * sin_lon
    z = (n * (1.0 - _WGS84_E2) + alt) * sin_lat
    return np.stack([x, y, z], axis=-1)


def enu_basis(lat_deg: float, lon_deg: float) -> np.ndarray:
    """Rows are the East, North, Up unit vectors at the given geodetic origin."""
    lat = math.radians(lat_deg)
    lon = math.radians(lon_deg)
    sin_lat, cos_lat = math.sin(lat), math.cos(lat)
    sin_lon, cos_lon = math.sin(lon), math.cos(lon)
    return np.array(
        [
            [-sin_lon, cos_lon, 0.0],
            [-sin_lat * cos_lon, -sin_lat * sin_lon, cos_lat],
            [cos_lat * cos_lon, cos_lat * sin_lon, sin_lat],
        ]
    )


def geodetic_to_local(doc: TrajectoryDocument, origin=None) -> TrajectoryDocument:
    """Convert a geodetic document to local-metric East-North-Up coordinates.

    ``origin`` is (lat_deg, lon_deg, alt_m); it defaults to the first frame's
    position, which keeps coordinates small and centered for double precision.
    """
    if doc.coordinate_frame != GEODETIC:
        raise WrongFrameError("document is already local-metric")
    if origin is None:
        if not doc.frames:
            raise WrongFrameError("cannot infer an ENU origin from an empty document")
        origin = tuple(doc.frames[0].position)
    lat0, lon0, alt0 = (float(v) for v in origin)

    positions = doc.positions()
    ecef = geodetic_to_ecef(positions[:, 0], positions[:, 1], positions[:, 2])
    ecef0 = geodetic_to_ecef(lat0, lon0, alt0)
    enu = (ecef - ecef0) @ enu_basis(lat0, lon0).T

    frames = tuple(
        FrameRecord(f.frame_id, enu[i], f.orientation) for i, f in enumerate(doc.frames)
    )
    return TrajectoryDocument(LOCAL_METRIC, frames)


def trajectory_to_document(trajectory: Trajectory) -> TrajectoryDocument:
    """Serialize a pose trajectory, storing orientations as quaternions."""
    from ..geometry import quaternion_from_rotation

    frames = tuple(
        FrameRecord(fid, pose.translation, quaternion_from_rotation(pose.rotation))
        for fid, pose in trajectory
    )
    return TrajectoryDocument(LOCAL_METRIC, frames)
