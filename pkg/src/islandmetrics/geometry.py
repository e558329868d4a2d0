"""Core geometric types and closed-form similarity alignment.

A monocular reconstruction lives in an arbitrary scale: this module recovers
the global similarity (scale, rotation, translation) that maps it onto a
metric reference by least-squares alignment of matched camera centers, and
applies that similarity to poses and point clouds without degrading rotation
orthonormality.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateSourceError,
    FrameIdMismatchError,
    LengthMismatchError,
    TooFewPointsError,
    ValidationError,
)

# Fixed tolerances, sized for double precision at scene scales up to ~1e5 m.
ORTHONORMAL_TOL = 1e-9
RANK_DEFICIENCY_TOL = 1e-9
MIN_SOURCE_VARIANCE = 1e-12


class Convention(enum.Enum):
    """Direction of a rigid pose: which frame it maps points *into*."""

    CAMERA_TO_WORLD = "camera-to-world"
    WORLD_TO_CAMERA = "world-to-camera"


def _as_rotation(matrix) -> np.ndarray:
    R = np.array(matrix, dtype=np.float64)
    if R.shape != (3, 3):
        raise ValidationError(f"rotation must be 3x3, got shape {R.shape}")
    if not np.isfinite(R).all():
        raise ValidationError("rotation contains non-finite entries")
    err = np.abs(R.T @ R - np.eye(3)).max()
    if err > ORTHONORMAL_TOL:
        raise ValidationError(f"rotation is not orthonormal (max |R^T R - I| = {err:.3e})")
    det = np.linalg.det(R)
    if abs(det - 1.0) > ORTHONORMAL_TOL:
        raise ValidationError(f"rotation determinant is {det!r}, expected +1")
    R.flags.writeable = False
    return R


def _as_vector3(vec, name: str = "translation") -> np.ndarray:
    t = np.array(vec, dtype=np.float64).reshape(-1)
    if t.shape != (3,):
        raise ValidationError(f"{name} must have 3 components, got {t.shape}")
    if not np.isfinite(t).all():
        raise ValidationError(f"{name} contains non-finite entries")
    t.flags.writeable = False
    return t


@dataclass(frozen=True, eq=False)
class RigidPose:
    """Orthonormal rotation + translation of one camera.

    The convention records whether the pose maps camera coordinates to world
    coordinates or the reverse.  For a camera-to-world pose the translation
    *is* the camera center.
    """

    rotation: np.ndarray
    translation: np.ndarray
    convention: Convention = Convention.CAMERA_TO_WORLD

    def __post_init__(self):
        object.__setattr__(self, "rotation", _as_rotation(self.rotation))
        object.__setattr__(self, "translation", _as_vector3(self.translation))
        if not isinstance(self.convention, Convention):
            raise ValidationError(f"unknown pose convention: {self.convention!r}")

    def inverse(self) -> "RigidPose":
        """Exchange camera-to-world and world-to-camera."""
        flipped = (
            Convention.WORLD_TO_CAMERA
            if self.convention is Convention.CAMERA_TO_WORLD
            else Convention.CAMERA_TO_WORLD
        )
        return RigidPose(self.rotation.T, -self.rotation.T @ self.translation, flipped)

    def camera_center(self) -> np.ndarray:
        """Camera position in world coordinates, independent of convention."""
        if self.convention is Convention.CAMERA_TO_WORLD:
            return self.translation
        return -self.rotation.T @ self.translation

    def as_matrix(self) -> np.ndarray:
        """4x4 homogeneous matrix of the pose."""
        M = np.eye(4)
        M[:3, :3] = self.rotation
        M[:3, 3] = self.translation
        return M


@dataclass(frozen=True, eq=False)
class Sim3Transform:
    """A 3D similarity: ``p -> scale * rotation @ p + translation``.

    ``rank_deficient`` is a diagnostic set by :func:`umeyama_align` when the
    source points were (nearly) collinear, leaving rotation about the point
    line unconstrained; the transform itself is still a valid minimizer.
    """

    scale: float
    rotation: np.ndarray
    translation: np.ndarray
    rank_deficient: bool = False

    def __post_init__(self):
        scale = float(self.scale)
        if not math.isfinite(scale) or scale <= 0.0:
            raise ValidationError(f"scale must be a positive finite number, got {scale!r}")
        object.__setattr__(self, "scale", scale)
        object.__setattr__(self, "rotation", _as_rotation(self.rotation))
        object.__setattr__(self, "translation", _as_vector3(self.translation))

    @classmethod
    def identity(cls) -> "Sim3Transform":
        return cls(1.0, np.eye(3), np.zeros(3))

    def as_homogeneous(self) -> np.ndarray:
        """4x4 matrix H with H[:3,:3] = scale*R, H[:3,3] = t, H[3] = (0,0,0,1)."""
        H = np.eye(4)
        H[:3, :3] = self.scale * self.rotation
        H[:3, 3] = self.translation
        return H

    def inverse(self) -> "Sim3Transform":
        inv_scale = 1.0 / self.scale
        return Sim3Transform(
            inv_scale, self.rotation.T, -inv_scale * (self.rotation.T @ self.translation)
        )

    def apply(self, points: np.ndarray) -> np.ndarray:
        """Transform an (N, 3) array of points."""
        pts = np.asarray(points, dtype=np.float64)
        return self.scale * (pts @ self.rotation.T) + self.translation


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Ordered camera-to-world poses keyed by strictly increasing frame ids."""

    frames: tuple

    def __post_init__(self):
        frames = tuple((int(fid), pose) for fid, pose in self.frames)
        last = None
        for fid, pose in frames:
            if last is not None and fid <= last:
                raise ValidationError(f"frame ids must be strictly increasing, got {fid} after {last}")
            if pose.convention is not Convention.CAMERA_TO_WORLD:
                raise ValidationError(f"trajectory poses must be camera-to-world (frame {fid})")
            last = fid
        object.__setattr__(self, "frames", frames)

    def __len__(self) -> int:
        return len(self.frames)

    def __iter__(self):
        return iter(self.frames)

    def frame_ids(self) -> np.ndarray:
        return np.array([fid for fid, _ in self.frames], dtype=np.int64)

    def camera_centers(self) -> np.ndarray:
        if not self.frames:
            return np.zeros((0, 3))
        return np.stack([pose.camera_center() for _, pose in self.frames])


@dataclass(frozen=True, eq=False)
class PointCloud:
    """N metric 3D positions with optional per-point color and vote count."""

    positions: np.ndarray
    colors: np.ndarray | None = None
    votes: np.ndarray | None = None

    def __post_init__(self):
        pos = np.array(self.positions, dtype=np.float64).reshape(-1, 3)
        if not np.isfinite(pos).all():
            raise ValidationError("point cloud positions contain non-finite values")
        pos.flags.writeable = False
        object.__setattr__(self, "positions", pos)
        n = len(pos)
        if self.colors is not None:
            colors = np.array(self.colors, dtype=np.uint8).reshape(-1, 3)
            if len(colors) != n:
                raise LengthMismatchError(f"{len(colors)} colors for {n} points")
            colors.flags.writeable = False
            object.__setattr__(self, "colors", colors)
        if self.votes is not None:
            votes = np.array(self.votes, dtype=np.int64).reshape(-1)
            if len(votes) != n:
                raise LengthMismatchError(f"{len(votes)} votes for {n} points")
            if votes.size and votes.min() < 0:
                raise ValidationError("votes must be non-negative")
            votes.flags.writeable = False
            object.__setattr__(self, "votes", votes)

    def __len__(self) -> int:
        return len(self.positions)


def umeyama_align(source, target) -> Sim3Transform:
    """Closed-form least-squares Sim(3) aligning ``source`` onto ``target``.

    Minimizes the mean squared residual ``(1/N) sum ||y_i - (c R x_i + t)||^2``
    over scale c > 0, rotation R and translation t:

    1. centroids ``mu_x``, ``mu_y`` and centered points,
    2. cross-covariance ``Sigma = (1/N) sum (y - mu_y)(x - mu_x)^T``,
    3. SVD ``Sigma = U D V^T``; ``S = I`` except ``S[2,2] = -1`` when
       ``det(U) det(V) < 0`` (forces a proper rotation, never a reflection),
    4. ``R = U S V^T``, ``c = trace(D S) / var_x``, ``t = mu_y - c R mu_x``.

    Deterministic for fixed input.  The result is flagged ``rank_deficient``
    when the two smallest singular values of Sigma vanish relative to the
    largest (collinear points).
    """
    src = np.asarray(source, dtype=np.float64).reshape(-1, 3)
    dst = np.asarray(target, dtype=np.float64).reshape(-1, 3)
    if len(src) != len(dst):
        raise LengthMismatchError(f"{len(src)} source points vs {len(dst)} target points")
    n = len(src)
    if n < 3:
        raise TooFewPointsError(f"alignment needs at least 3 point pairs, got {n}")
    if not (np.isfinite(src).all() and np.isfinite(dst).all()):
        raise ValidationError("alignment points contain non-finite values")

    mu_x = src.mean(axis=0)
    mu_y = dst.mean(axis=0)
    xc = src - mu_x
    yc = dst - mu_y

    var_x = float((xc * xc).sum()) / n
    if var_x <= MIN_SOURCE_VARIANCE:
        raise DegenerateSourceError(f"source variance {var_x:.3e} is below {MIN_SOURCE_VARIANCE:.0e}")

    cov = yc.T @ xc / n
    U, d, Vt = np.linalg.svd(cov)
    S = np.eye(3)
    if np.linalg.det(U) * np.linalg.det(Vt) < 0.0:
        S[2, 2] = -1.0
    R = U @ S @ Vt
    c = float((d * np.diagonal(S)).sum()) / var_x
    t = mu_y - c * (R @ mu_x)

    rank_deficient = bool(d[1] <= RANK_DEFICIENCY_TOL * d[0])
    return Sim3Transform(c, R, t, rank_deficient=rank_deficient)


def apply_sim3_to_pose(pose: RigidPose, transform: Sim3Transform) -> RigidPose:
    """Update a camera-to-world pose by a similarity transform.

    The rotation is composed with the pure rotation component of the
    similarity (scale stripped) so the result stays orthonormal; the camera
    center follows the full scaled map::

        R_new = R_align R_orig,  t_new = c R t_orig + t
    """
    if pose.convention is not Convention.CAMERA_TO_WORLD:
        raise ValidationError("apply_sim3_to_pose expects a camera-to-world pose")
    rotation = transform.rotation @ pose.rotation
    translation = transform.scale * (transform.rotation @ pose.translation) + transform.translation
    return RigidPose(rotation, translation, Convention.CAMERA_TO_WORLD)


def apply_sim3_to_points(cloud: PointCloud, transform: Sim3Transform) -> PointCloud:
    """Transform every position; colors and votes are carried through untouched."""
    return PointCloud(transform.apply(cloud.positions), colors=cloud.colors, votes=cloud.votes)


def apply_sim3_to_trajectory(trajectory: Trajectory, transform: Sim3Transform) -> Trajectory:
    """Apply :func:`apply_sim3_to_pose` to every frame."""
    return Trajectory(tuple((fid, apply_sim3_to_pose(pose, transform)) for fid, pose in trajectory))


def _matched_centers(source: Trajectory, target: Trajectory):
    if len(source) != len(target):
        raise LengthMismatchError(f"{len(source)} source frames vs {len(target)} target frames")
    src_ids = source.frame_ids()
    dst_ids = target.frame_ids()
    if not np.array_equal(src_ids, dst_ids):
        raise FrameIdMismatchError(
            f"frame ids differ: source {src_ids.tolist()[:8]}... vs target {dst_ids.tolist()[:8]}..."
        )
    return source.camera_centers(), target.camera_centers()


def align_trajectories(source: Trajectory, target: Trajectory) -> Sim3Transform:
    """Estimate the similarity mapping source camera centers onto target's.

    Both trajectories must cover identical frame ids; centers are matched by
    position in the (sorted) id sequence.
    """
    x, y = _matched_centers(source, target)
    return umeyama_align(x, y)


def alignment_rmse(source: Trajectory, target: Trajectory, transform: Sim3Transform) -> float:
    """Root mean squared residual of the transform over matched camera centers."""
    x, y = _matched_centers(source, target)
    residual = y - transform.apply(x)
    return float(np.sqrt((residual * residual).sum() / len(x)))


def rotation_angle(rotation: np.ndarray) -> float:
    """Geodesic distance (radians) of a rotation matrix from the identity.

    Uses ||R - I||_F = 2 sqrt(2) sin(angle / 2), which stays accurate for
    tiny angles where the arccos-of-trace form loses ~8 digits.
    """
    R = np.asarray(rotation, dtype=np.float64)
    sine_half = np.linalg.norm(R - np.eye(3)) / (2.0 * math.sqrt(2.0))
    return float(2.0 * np.arcsin(np.clip(sine_half, 0.0, 1.0)))


def quaternion_from_rotation(rotation: np.ndarray) -> np.ndarray:
    """Unit quaternion (w, x, y, z) of a rotation matrix, w >= 0."""
    R = np.asarray(rotation, dtype=np.float64)
    trace = np.trace(R)
    if trace > 0.0:
        s = math.sqrt(trace + 1.0) * 2.0
        q = np.array([0.25 * s, (R[2, 1] - R[1, 2]) / s, (R[0, 2] - R[2, 0]) / s, (R[1, 0] - R[0, 1]) / s])
    elif R[0, 0] > R[1, 1] and R[0, 0] > R[2, 2]:
        s = math.sqrt(1.0 + R[0, 0] - R[1, 1] - R[2, 2]) * 2.0
        q = np.array([(R[2, 1] - R[1, 2]) / s, 0.25 * s, (R[0, 1] + R[1, 0]) / s, (R[0, 2] + R[2, 0]) / s])
    elif R[1, 1] > R[2, 2]:
        s = math.sqrt(1.0 + R[1, 1] - R[0, 0] - R[2, 2]) * 2.0
        q = np.array([(R[0, 2] - R[2, 0]) / s, (R[0, 1] + R[1, 0]) / s, 0.25 * s, (R[1, 2] + R[2, 1]) / s])
    else:
        s = math.sqrt(1.0 + R[2, 2] - R[0, 0] - R[1, 1]) * 2.0
        q = np.array([(R[1, 0] - R[0, 1]) / s, (R[0, 2] + R[2, 0]) / s, (R[1, 2] + R[2, 1]) / s, 0.25 * s])
    if q[0] < 0.0:
        q = -q
    return q / np.linalg.norm(q)


def rotation_from_quaternion(quaternion) -> np.ndarray:
    """Rotation matrix of a (w, x, y, z) quaternion (normalized internally)."""
    q = np.asarray(quaternion, dtype=np.float64).reshape(4)
    norm = np.linalg.norm(q)
    if norm == 0.0 or not np.isfinite(norm):
        raise ValidationError("quaternion must be non-zero and finite")
    w, x, y, z = q / norm
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )
