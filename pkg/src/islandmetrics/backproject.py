"""Multi-view 2D-mask voting over a 3D point cloud.

Each point is projected into every view; a view contributes one vote when the
point lands inside the frame in front of the near plane, survives a Z-buffer
occlusion test, and hits a true mask pixel.  A point whose vote count reaches
``min_votes`` is labeled as part of the target landmass.  With
``min_votes=1`` and an infinite depth tolerance this reduces exactly to the
union of per-view mask hits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import EmptyCloudError, NoViewsError, ValidationError, VotesMissingError
from .geometry import Convention, PointCloud, RigidPose
from .io.images import MaskImage
from .io.intrinsics import IntrinsicsRecord

DEFAULT_NEAR_PLANE = 0.1


@dataclass(frozen=True)
class LabelingConfig:
    """Voting parameters: 3 supporting views, 2 m occlusion slack, 0.1 m near plane."""

    min_votes: int = 3
    depth_tolerance: float = 2.0
    near_plane: float = DEFAULT_NEAR_PLANE

    def __post_init__(self):
        if int(self.min_votes) < 1:
            raise ValidationError(f"min_votes must be >= 1, got {self.min_votes}")
        object.__setattr__(self, "min_votes", int(self.min_votes))
        if not self.depth_tolerance > 0.0:
            raise ValidationError(f"depth_tolerance must be positive, got {self.depth_tolerance}")
        if not (self.near_plane > 0.0 and math.isfinite(self.near_plane)):
            raise ValidationError(f"near_plane must be positive and finite, got {self.near_plane}")
        object.__setattr__(self, "depth_tolerance", float(self.depth_tolerance))
        object.__setattr__(self, "near_plane", float(self.near_plane))


@dataclass(frozen=True, eq=False)
class ViewFrame:
    """One image: frame id, world-to-camera pose, intrinsics, binary mask."""

    frame_id: int
    world_to_camera: RigidPose
    intrinsics: IntrinsicsRecord
    mask: MaskImage

    def __post_init__(self):
        if self.world_to_camera.convention is not Convention.WORLD_TO_CAMERA:
            raise ValidationError(f"view {self.frame_id}: pose must be world-to-camera")
        if (self.mask.width, self.mask.height) != (self.intrinsics.width, self.intrinsics.height):
            raise ValidationError(
                f"view {self.frame_id}: mask is {self.mask.width}x{self.mask.height} "
                f"but intrinsics say {self.intrinsics.width}x{self.intrinsics.height}"
            )


@dataclass(frozen=True, eq=False)
class DepthBuffer:
    """Per-pixel minimum camera depth; infinity where no point projects."""

    min_depth: np.ndarray

    @property
    def width(self) -> int:
        return self.min_depth.shape[1]

    @property
    def height(self) -> int:
        return self.min_depth.shape[0]


def world_to_camera_point(point, pose: RigidPose) -> np.ndarray:
    """Map a world point into camera coordinates (+Z forward)."""
    if pose.convention is not Convention.WORLD_TO_CAMERA:
        raise ValidationError("world_to_camera_point expects a world-to-camera pose")
    p = np.asarray(point, dtype=np.float64).reshape(3)
    return pose.rotation @ p + pose.translation


def project_to_pixel(point_cam, intrinsics: IntrinsicsRecord, near_plane: float = DEFAULT_NEAR_PLANE):
    """Floor-projected pixel of a camera-space point, or None.

    Absent when the point sits at or behind the near plane (``Z_c <= near``)
    or projects outside ``[0, width) x [0, height)``.
    """
    x, y, z = (float(v) for v in np.asarray(point_cam, dtype=np.float64).reshape(3))
    if not z > near_plane:
        return None
    u = math.floor(intrinsics.fx * x / z + intrinsics.cx)
    v = math.floor(intrinsics.fy * y / z + intrinsics.cy)
    if 0 <= u < intrinsics.width and 0 <= v < intrinsics.height:
        return (u, v)
    return None


def _project_view(positions: np.ndarray, view: ViewFrame, near_plane: float):
    """Vectorized projection of all points into one view.

    Returns (indices into positions, u, v, depth) for the points that land
    in-frame in front of the near plane.
    """
    pose = view.world_to_camera
    cam = positions @ pose.rotation.T + pose.translation
    z = cam[:, 2]
    intr = view.intrinsics
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        u = np.floor(intr.fx * cam[:, 0] / z + intr.cx)
        v = np.floor(intr.fy * cam[:, 1] / z + intr.cy)
    keep = (
        (z > near_plane)
        & (u >= 0.0)
        & (u < intr.width)
        & (v >= 0.0)
        & (v < intr.height)
    )
    idx = np.flatnonzero(keep)
    return idx, u[idx].astype(np.int64), v[idx].astype(np.int64), z[idx]


def _min_depth_image(view: ViewFrame, u, v, z) -> np.ndarray:
    buf = np.full((view.intrinsics.height, view.intrinsics.width), np.inf)
    np.minimum.at(buf, (v, u), z)
    return buf


def build_depth_buffer(cloud: PointCloud, view: ViewFrame, near_plane: float = DEFAULT_NEAR_PLANE) -> DepthBuffer:
    """Rasterize the cloud's minimum depth per pixel for one view.

    The min is commutative, so the result does not depend on point order.
    """
    _, u, v, z = _project_view(cloud.positions, view, near_plane)
    return DepthBuffer(_min_depth_image(view, u, v, z))


def _view_votes(positions: np.ndarray, view: ViewFrame, config: LabelingConfig) -> np.ndarray:
    idx, u, v, z = _project_view(positions, view, config.near_plane)
    if math.isfinite(config.depth_tolerance):
        buf = _min_depth_image(view, u, v, z)
        visible = z <= buf[v, u] + config.depth_tolerance
    else:
        visible = np.ones(len(idx), dtype=bool)
    hit = view.mask.pixels[v, u] & visible
    out = np.zeros(len(positions), dtype=bool)
    out[idx[hit]] = True
    return out


def label_points(cloud: PointCloud, views, config: LabelingConfig | None = None):
    """Vote every point against every view's mask.

    Returns ``(labeled_cloud, island_indices)`` where the labeled cloud
    carries per-point vote counts and ``island_indices`` selects the points
    with ``votes >= min_votes``.  Vote accumulation is a commutative integer
    sum, so any processing order over views gives identical counts.
    """
    views = list(views)
    if not views:
        raise NoViewsError("labeling requires at least one view")
    if len(cloud) == 0:
        raise EmptyCloudError("labeling requires a non-empty point cloud")
    if config is None:
        config = LabelingConfig()

    votes = np.zeros(len(cloud), dtype=np.int64)
    for view in views:
        votes += _view_votes(cloud.positions, view, config)

    labeled = PointCloud(cloud.positions, colors=cloud.colors, votes=votes)
    island = np.flatnonzero(votes >= config.min_votes)
    return labeled, island


def select_island(cloud: PointCloud, min_votes: int) -> PointCloud:
    """Subset of points whose vote count reaches ``min_votes``, order preserved."""
    if cloud.votes is None:
        raise VotesMissingError("cloud has no votes; run label_points first")
    keep = cloud.votes >= int(min_votes)
    return PointCloud(
        cloud.positions[keep],
        colors=None if cloud.colors is None else cloud.colors[keep],
        votes=cloud.votes[keep],
    )
