"""Fully analytic synthetic scenes for end-to-end verification.

A scene holds a ground-truth island cloud (lattice samples of a known shape
plus a sea ring at z = 0), a camera orbit, per-frame masks ray-cast against
the island footprint, and a "reconstruction" made by applying the inverse of
a known similarity distortion to the truth.  Aligning the reconstruction back
onto the truth must therefore recover the distortion, and measuring the
labeled cloud must recover the shape's analytic area and taxicab perimeter.

Randomness comes from a portable counter-based generator so fixtures are
reproducible across platforms and languages:

* raw stream: SplitMix64 finalizer over the counter,
  ``z = seed + 0x9E3779B97F4A7C15 * (i + 1)`` (uint64 wraparound), then
  ``z = (z ^ z>>30) * 0xBF58476D1CE4E5B9``,
  ``z = (z ^ z>>27) * 0x94D049BB133111EB``, ``z ^ z>>31``;
* uniforms in [0, 1): top 53 bits, ``(z >> 11) * 2**-53``;
* normals: Box-Muller on consecutive uniform pairs (u1, u2) with
  ``r = sqrt(-2 ln(1 - u1))``, outputs ``r cos(2 pi u2)``, ``r sin(2 pi u2)``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import NegativeSigmaError, SpecInvalidError, ValidationError
from .geometry import (
    Convention,
    PointCloud,
    RigidPose,
    Sim3Transform,
    Trajectory,
    apply_sim3_to_points,
    apply_sim3_to_pose,
    quaternion_from_rotation,
    rotation_from_quaternion,
)
from .io.images import MaskImage, write_grayscale
from .io.intrinsics import IntrinsicsRecord, write_intrinsics
from .io.ply import write_point_cloud
from .io.trajectory import trajectory_to_document, write_trajectory

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)

ISLAND_COLOR = (70, 150, 80)
SEA_COLOR = (50, 90, 170)


class PortableRng:
    """Counter-based SplitMix64 stream; the module docstring fixes the exact algorithm."""

    def __init__(self, seed: int):
        self._seed = np.uint64(int(seed) & 0xFFFFFFFFFFFFFFFF)
        self._counter = 0

    def _raw(self, n: int) -> np.ndarray:
        idx = np.arange(self._counter + 1, self._counter + n + 1, dtype=np.uint64)
        self._counter += n
        z = self._seed + idx * _GOLDEN
        z = (z ^ (z >> np.uint64(30))) * _MIX1
        z = (z ^ (z >> np.uint64(27))) * _MIX2
        return z ^ (z >> np.uint64(31))

    def uniform(self, n: int) -> np.ndarray:
        """n doubles uniform in [0, 1)."""
        return (self._raw(n) >> np.uint64(11)).astype(np.float64) * 2.0**-53

    def normal(self, n: int) -> np.ndarray:
        """n standard normal doubles via Box-Muller."""
        pairs = (n + 1) // 2
        u = self.uniform(2 * pairs)
        r = np.sqrt(-2.0 * np.log(1.0 - u[0::2]))
        theta = 2.0 * np.pi * u[1::2]
        out = np.empty(2 * pairs)
        out[0::2] = r * np.cos(theta)
        out[1::2] = r * np.sin(theta)
        return out[:n]


# ---------------------------------------------------------------------------
# Island shapes (origin-centered) and height profiles
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Rectangle:
    width: float
    height: float

    def area(self) -> float:
        return self.width * self.height

    def taxicab_perimeter(self) -> float:
        return 2.0 * (self.width + self.height)

    def bounds(self):
        return (-self.width / 2, -self.height / 2, self.width / 2, self.height / 2)

    def contains(self, pts: np.ndarray) -> np.ndarray:
        return (np.abs(pts[:, 0]) <= self.width / 2) & (np.abs(pts[:, 1]) <= self.height / 2)

    def inner_distance(self, pts: np.ndarray) -> np.ndarray:
        return np.minimum(self.width / 2 - np.abs(pts[:, 0]), self.height / 2 - np.abs(pts[:, 1]))

    def outer_distance(self, pts: np.ndarray) -> np.ndarray:
        dx = np.maximum(np.abs(pts[:, 0]) - self.width / 2, 0.0)
        dy = np.maximum(np.abs(pts[:, 1]) - self.height / 2, 0.0)
        return np.hypot(dx, dy)


@dataclass(frozen=True)
class Disk:
    radius: float

    def area(self) -> float:
        return math.pi * self.radius**2

    def taxicab_perimeter(self) -> float:
        return 8.0 * self.radius

    def bounds(self):
        return (-self.radius, -self.radius, self.radius, self.radius)

    def contains(self, pts: np.ndarray) -> np.ndarray:
        return np.hypot(pts[:, 0], pts[:, 1]) <= self.radius

    def inner_distance(self, pts: np.ndarray) -> np.ndarray:
        return self.radius - np.hypot(pts[:, 0], pts[:, 1])

    def outer_distance(self, pts: np.ndarray) -> np.ndarray:
        return np.maximum(np.hypot(pts[:, 0], pts[:, 1]) - self.radius, 0.0)


@dataclass(frozen=True)
class Polygon:
    """Simple polygon given as an (K, 2) vertex list; containment is even-odd."""

    vertices: tuple

    def _array(self) -> np.ndarray:
        return np.asarray(self.vertices, dtype=np.float64).reshape(-1, 2)

    def area(self) -> float:
        v = self._array()
        x, y = v[:, 0], v[:, 1]
        return abs(float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))) / 2.0

    def taxicab_perimeter(self) -> float:
        v = self._array()
        d = np.roll(v, -1, axis=0) - v
        return float(np.abs(d).sum())

    def bounds(self):
        v = self._array()
        return (v[:, 0].min(), v[:, 1].min(), v[:, 0].max(), v[:, 1].max())

    def contains(self, pts: np.ndarray) -> np.ndarray:
        v = self._array()
        x, y = pts[:, 0], pts[:, 1]
        inside = np.zeros(len(pts), dtype=bool)
        for i in range(len(v)):
            x1, y1 = v[i]
            x2, y2 = v[(i + 1) % len(v)]
            crosses = (y1 > y) != (y2 > y)
            with np.errstate(divide="ignore", invalid="ignore"):
                xi = (x2 - x1) * (y - y1) / (y2 - y1) + x1
            inside ^= crosses & (x < xi)
        return inside

    def _edge_distance(self, pts: np.ndarray) -> np.ndarray:
        v = self._array()
        best = np.full(len(pts), np.inf)
        for i in range(len(v)):
            a = v[i]
            b = v[(i + 1) % len(v)]
            ab = b - a
            denom = float(ab @ ab)
            t = np.clip(((pts - a) @ ab) / denom, 0.0, 1.0) if denom > 0 else np.zeros(len(pts))
            proj = a + t[:, None] * ab
            best = np.minimum(best, np.hypot(*(pts - proj).T))
        return best

    def inner_distance(self, pts: np.ndarray) -> np.ndarray:
        return np.where(self.contains(pts), self._edge_distance(pts), 0.0)

    def outer_distance(self, pts: np.ndarray) -> np.ndarray:
        return np.where(self.contains(pts), 0.0, self._edge_distance(pts))


@dataclass(frozen=True)
class Flat:
    height: float = 0.0

    def heights(self, pts: np.ndarray, shape) -> np.ndarray:
        return np.full(len(pts), float(self.height))


@dataclass(frozen=True)
class Cone:
    """Peak height at the innermost point, falling linearly to 0 at the shore."""

    peak: float

    def heights(self, pts: np.ndarray, shape) -> np.ndarray:
        d = shape.inner_distance(pts)
        top = float(d.max())
        if top <= 0.0:
            return np.zeros(len(pts))
        return self.peak * d / top


# ---------------------------------------------------------------------------
# Scene specification
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SeaRing:
    margin: float
    spacing: float


@dataclass(frozen=True)
class OrbitSpec:
    radius: float
    altitude: float
    frame_count: int
    center: tuple = (0.0, 0.0, 0.0)


@dataclass(frozen=True)
class SceneSpec:
    """Everything needed to generate a scene deterministically.

    ``distortion`` is a fixed :class:`Sim3Transform`, an integer seed for a
    random similarity, or None for the identity.  ``noise_seed`` drives the
    Gaussian noise applied to the reconstruction side when ``noise_sigma`` is
    positive.

    ``shore_inset`` keeps island samples at least that far inside the shape.
    Masks test the landing point of each pixel-center ray, so an island point
    closer to the shore than half a pixel's ground footprint can fall on a
    false pixel; an inset of one worst-case ground footprint makes the masks
    a strict superset of the projected island.  Keep it below the grid cell
    size so the measured footprint still matches the analytic shape.
    """

    island: object
    height_profile: object = field(default_factory=Flat)
    point_spacing: float = 1.0
    sea_ring: SeaRing | None = None
    orbit: OrbitSpec = OrbitSpec(300.0, 350.0, 12)
    intrinsics: IntrinsicsRecord = IntrinsicsRecord(400.0, 400.0, 320.0, 180.0, 640, 360)
    distortion: object = None
    noise_sigma: float = 0.0
    noise_seed: int = 0
    shore_inset: float = 0.0

    def __post_init__(self):
        if not self.point_spacing > 0.0:
            raise SpecInvalidError(f"point_spacing must be positive, got {self.point_spacing}")
        if self.shore_inset < 0.0:
            raise SpecInvalidError(f"shore_inset must be non-negative, got {self.shore_inset}")
        if self.orbit.frame_count < 3:
            raise SpecInvalidError(f"orbit needs at least 3 frames, got {self.orbit.frame_count}")
        if not self.orbit.radius > 0.0 or not self.orbit.altitude > 0.0:
            raise SpecInvalidError("orbit radius and altitude must be positive")
        if self.sea_ring is not None:
            if self.sea_ring.margin < 0.0 or not self.sea_ring.spacing > 0.0:
                raise SpecInvalidError("sea ring needs margin >= 0 and spacing > 0")
        if isinstance(self.distortion, Sim3Transform) and not self.distortion.scale > 0.0:
            raise SpecInvalidError("distortion scale must be positive")
        if self.noise_sigma < 0.0:
            raise SpecInvalidError(f"noise_sigma must be non-negative, got {self.noise_sigma}")


@dataclass(frozen=True, eq=False)
class Scene:
    """Generated scene; island samples come first in both clouds."""

    truth_cloud: PointCloud
    truth_trajectory: Trajectory
    recon_cloud: PointCloud
    recon_trajectory: Trajectory
    masks: dict
    intrinsics: IntrinsicsRecord
    distortion: Sim3Transform
    truth_area_m2: float
    truth_perimeter_taxicab_m: float
    island_point_count: int


def _lattice(bounds, spacing: float) -> np.ndarray:
    minx, miny, maxx, maxy = bounds
    nx = int(math.floor((maxx - minx) / spacing + 1e-9)) + 1
    ny = int(math.floor((maxy - miny) / spacing + 1e-9)) + 1
    xs = minx + spacing * np.arange(nx)
    ys = miny + spacing * np.arange(ny)
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    return np.column_stack([gx.ravel(), gy.ravel()])


def look_at_pose(camera: np.ndarray, target: np.ndarray) -> RigidPose:
    """Camera-to-world pose looking from ``camera`` toward ``target``.

    Camera axes follow the usual computer-vision convention: +Z forward,
    +X right, +Y down (world up is +Z).
    """
    forward = np.asarray(target, dtype=np.float64) - np.asarray(camera, dtype=np.float64)
    norm = np.linalg.norm(forward)
    if norm == 0.0:
        raise ValidationError("camera and look-at target coincide")
    forward = forward / norm
    right = np.cross(forward, np.array([0.0, 0.0, 1.0]))
    rn = np.linalg.norm(right)
    if rn < 1e-12:  # looking straight up/down; pick an arbitrary horizontal right
        right = np.array([1.0, 0.0, 0.0])
    else:
        right = right / rn
    down = np.cross(forward, right)
    rotation = np.column_stack([right, down, forward])
    return RigidPose(rotation, camera, Convention.CAMERA_TO_WORLD)


def orbit_trajectory(orbit: OrbitSpec) -> Trajectory:
    """Evenly spaced cameras on a circle, all looking at the orbit center."""
    center = np.asarray(orbit.center, dtype=np.float64)
    frames = []
    for k in range(orbit.frame_count):
        theta = 2.0 * math.pi * k / orbit.frame_count
        camera = center + np.array(
            [orbit.radius * math.cos(theta), orbit.radius * math.sin(theta), orbit.altitude]
        )
        frames.append((k, look_at_pose(camera, center)))
    return Trajectory(tuple(frames))


def analytic_mask(pose: RigidPose, intrinsics: IntrinsicsRecord, shape) -> MaskImage:
    """Exact footprint mask: a pixel is true iff the ray through its center
    meets the z = 0 plane inside the island shape.

    Ray-cast against the plane rather than rendered from points, so the mask
    is free of splatting artifacts and provably consistent with the geometry.
    """
    if pose.convention is not Convention.CAMERA_TO_WORLD:
        pose = pose.inverse()
    K = intrinsics
    xs = (np.arange(K.width) + 0.5 - K.cx) / K.fx
    ys = (np.arange(K.height) + 0.5 - K.cy) / K.fy
    R = pose.rotation
    dwx = R[0, 0] * xs[None, :] + R[0, 1] * ys[:, None] + R[0, 2]
    dwy = R[1, 0] * xs[None, :] + R[1, 1] * ys[:, None] + R[1, 2]
    dwz = R[2, 0] * xs[None, :] + R[2, 1] * ys[:, None] + R[2, 2]
    ox, oy, oz = pose.translation
    descending = dwz < 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        t = -oz / dwz
    land = np.column_stack([(ox + t * dwx).ravel(), (oy + t * dwy).ravel()])
    hit = shape.contains(land).reshape(K.height, K.width)
    return MaskImage(descending & hit)


def _realize_distortion(distortion) -> Sim3Transform:
    if distortion is None:
        return Sim3Transform.identity()
    if isinstance(distortion, Sim3Transform):
        return distortion
    rng = PortableRng(int(distortion))
    scale = math.exp((rng.uniform(1)[0] * 2.0 - 1.0) * math.log(10.0))
    quat = rng.normal(4)
    rotation = rotation_from_quaternion(quat)
    translation = (rng.uniform(3) * 2.0 - 1.0) * 1000.0
    return Sim3Transform(scale, rotation, translation)


def generate_scene(spec: SceneSpec) -> Scene:
    """Build the full scene described by ``spec``; deterministic throughout."""
    shape = spec.island
    island_xy = _lattice(shape.bounds(), spec.point_spacing)
    keep = shape.contains(island_xy)
    if spec.shore_inset > 0.0:
        keep &= shape.inner_distance(island_xy) >= spec.shore_inset
    island_xy = island_xy[keep]
    if len(island_xy) == 0:
        raise SpecInvalidError("island shape contains no lattice points; reduce point_spacing")
    island_z = spec.height_profile.heights(island_xy, shape)
    island = np.column_stack([island_xy, island_z])

    parts = [island]
    colors = [np.tile(np.array(ISLAND_COLOR, dtype=np.uint8), (len(island), 1))]
    if spec.sea_ring is not None:
        minx, miny, maxx, maxy = shape.bounds()
        ring = spec.sea_ring
        sea_xy = _lattice(
            (minx - ring.margin, miny - ring.margin, maxx + ring.margin, maxy + ring.margin),
            ring.spacing,
        )
        # Keep one ring-spacing of clear water between shore and sea samples so
        # pixel-center quantization can never push a sea point onto the mask.
        sea_xy = sea_xy[shape.outer_distance(sea_xy) >= ring.spacing]
        sea = np.column_stack([sea_xy, np.zeros(len(sea_xy))])
        parts.append(sea)
        colors.append(np.tile(np.array(SEA_COLOR, dtype=np.uint8), (len(sea), 1)))

    truth_cloud = PointCloud(np.vstack(parts), colors=np.vstack(colors))
    truth_trajectory = orbit_trajectory(spec.orbit)
    masks = {
        fid: analytic_mask(pose, spec.intrinsics, shape) for fid, pose in truth_trajectory
    }

    distortion = _realize_distortion(spec.distortion)
    undo = distortion.inverse()
    recon_cloud = apply_sim3_to_points(truth_cloud, undo)
    recon_trajectory = Trajectory(
        tuple((fid, apply_sim3_to_pose(pose, undo)) for fid, pose in truth_trajectory)
    )
    if spec.noise_sigma > 0.0:
        recon_cloud = perturb(recon_cloud, spec.noise_sigma, spec.noise_seed)
        recon_trajectory = perturb(recon_trajectory, spec.noise_sigma, spec.noise_seed + 1)

    return Scene(
        truth_cloud=truth_cloud,
        truth_trajectory=truth_trajectory,
        recon_cloud=recon_cloud,
        recon_trajectory=recon_trajectory,
        masks=masks,
        intrinsics=spec.intrinsics,
        distortion=distortion,
        truth_area_m2=shape.area(),
        truth_perimeter_taxicab_m=shape.taxicab_perimeter(),
        island_point_count=len(island),
    )


def perturb(obj, sigma: float, seed: int):
    """Add seeded zero-mean Gaussian noise (std ``sigma`` per coordinate).

    Works on point clouds (positions) and trajectories (camera centers;
    rotations untouched).  ``sigma = 0`` returns the input unchanged.
    """
    if sigma < 0.0:
        raise NegativeSigmaError(f"sigma must be non-negative, got {sigma}")
    if sigma == 0.0:
        return obj
    rng = PortableRng(seed)
    if isinstance(obj, PointCloud):
        noise = rng.normal(3 * len(obj)).reshape(-1, 3) * sigma
        return PointCloud(obj.positions + noise, colors=obj.colors, votes=obj.votes)
    if isinstance(obj, Trajectory):
        noise = rng.normal(3 * len(obj)).reshape(-1, 3) * sigma
        frames = tuple(
            (fid, RigidPose(pose.rotation, pose.translation + noise[i], Convention.CAMERA_TO_WORLD))
            for i, (fid, pose) in enumerate(obj)
        )
        return Trajectory(frames)
    raise ValidationError(f"cannot perturb object of type {type(obj).__name__}")


# ---------------------------------------------------------------------------
# Scene directory (the exact layout the measurement pipeline consumes)
# ---------------------------------------------------------------------------

def write_scene(scene: Scene, out_dir) -> None:
    """Write a scene directory in the pipeline's ingest formats."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_point_cloud(scene.recon_cloud, out / "recon_points.ply")
    write_point_cloud(scene.truth_cloud, out / "truth_points.ply")
    write_trajectory(trajectory_to_document(scene.recon_trajectory), out / "recon_trajectory.json")
    write_trajectory(
        trajectory_to_document(scene.truth_trajectory), out / "reference_trajectory.json"
    )
    write_intrinsics(scene.intrinsics, out / "intrinsics.json")
    mask_dir = out / "masks"
    mask_dir.mkdir(exist_ok=True)
    for fid, mask in scene.masks.items():
        write_grayscale(mask.pixels, mask_dir / f"mask_{fid:06d}.png")
    truth = {
        "truth_area_m2": scene.truth_area_m2,
        "truth_perimeter_taxicab_m": scene.truth_perimeter_taxicab_m,
        "island_point_count": scene.island_point_count,
        "distortion": {
            "scale": scene.distortion.scale,
            "rotation_wxyz": [float(v) for v in quaternion_from_rotation(scene.distortion.rotation)],
            "translation_m": [float(v) for v in scene.distortion.translation],
        },
    }
    (out / "truth.json").write_text(json.dumps(truth, indent=2) + "\n", encoding="utf-8")


def scene_spec_from_dict(obj: dict) -> SceneSpec:
    """Parse the scene-spec JSON used by the ``synth`` subcommand."""
    if not isinstance(obj, dict):
        raise SpecInvalidError("scene spec must be a JSON object")

    def need(d, key, loc):
        if key not in d:
            raise SpecInvalidError(f"scene spec missing {loc}{key}")
        return d[key]

    island_raw = need(obj, "island", "")
    kind = need(island_raw, "shape", "island.")
    if kind == "rectangle":
        island = Rectangle(float(need(island_raw, "width", "island.")), float(need(island_raw, "height", "island.")))
    elif kind == "disk":
        island = Disk(float(need(island_raw, "radius", "island.")))
    elif kind == "polygon":
        vertices = need(island_raw, "vertices", "island.")
        if not isinstance(vertices, list) or len(vertices) < 3:
            raise SpecInvalidError("island.vertices must list at least 3 [x, y] pairs")
        island = Polygon(tuple(tuple(float(c) for c in v) for v in vertices))
    else:
        raise SpecInvalidError(f"unknown island shape {kind!r}")

    profile_raw = obj.get("height_profile", {"profile": "flat", "height": 0.0})
    pkind = need(profile_raw, "profile", "height_profile.")
    if pkind == "flat":
        profile = Flat(float(profile_raw.get("height", 0.0)))
    elif pkind == "cone":
        profile = Cone(float(need(profile_raw, "peak", "height_profile.")))
    else:
        raise SpecInvalidError(f"unknown height profile {pkind!r}")

    sea = None
    if obj.get("sea_ring") is not None:
        sea_raw = obj["sea_ring"]
        sea = SeaRing(float(need(sea_raw, "margin", "sea_ring.")), float(need(sea_raw, "spacing", "sea_ring.")))

    orbit_raw = need(obj, "orbit", "")
    orbit = OrbitSpec(
        float(need(orbit_raw, "radius", "orbit.")),
        float(need(orbit_raw, "altitude", "orbit.")),
        int(need(orbit_raw, "frame_count", "orbit.")),
        tuple(float(v) for v in orbit_raw.get("center", (0.0, 0.0, 0.0))),
    )

    intr_raw = need(obj, "intrinsics", "")
    intrinsics = IntrinsicsRecord(
        *(need(intr_raw, k, "intrinsics.") for k in ("fx", "fy", "cx", "cy", "width", "height"))
    )

    distortion = None
    if obj.get("distortion") is not None:
        d = obj["distortion"]
        if "random_seed" in d:
            distortion = int(d["random_seed"])
        else:
            distortion = Sim3Transform(
                float(need(d, "scale", "distortion.")),
                rotation_from_quaternion(need(d, "rotation_wxyz", "distortion.")),
                np.asarray(need(d, "translation_m", "distortion."), dtype=np.float64),
            )

    return SceneSpec(
        island=island,
        height_profile=profile,
        point_spacing=float(need(obj, "point_spacing", "")),
        sea_ring=sea,
        orbit=orbit,
        intrinsics=intrinsics,
        distortion=distortion,
        noise_sigma=float(obj.get("noise_sigma", 0.0)),
        noise_seed=int(obj.get("noise_seed", 0)),
        shore_inset=float(obj.get("shore_inset", 0.0)),
    )
