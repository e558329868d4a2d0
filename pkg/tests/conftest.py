"""Shared fixtures and deterministic helpers for the test suite."""

import numpy as np
import pytest

import islandmetrics as im
from islandmetrics.synth import PortableRng


def random_rotation(seed: int) -> np.ndarray:
    """Uniform-ish random rotation from the portable stream."""
    return im.rotation_from_quaternion(PortableRng(seed).normal(4))


def random_sim3(seed: int) -> im.Sim3Transform:
    rng = PortableRng(seed)
    scale = float(np.exp((rng.uniform(1)[0] * 2.0 - 1.0) * np.log(10.0)))
    rotation = im.rotation_from_quaternion(rng.normal(4))
    translation = (rng.uniform(3) * 2.0 - 1.0) * 1000.0
    return im.Sim3Transform(scale, rotation, translation)


def random_points(seed: int, n: int, extent: float = 100.0) -> np.ndarray:
    return (PortableRng(seed).uniform(3 * n).reshape(-1, 3) * 2.0 - 1.0) * extent


def geodesic(r_a: np.ndarray, r_b: np.ndarray) -> float:
    return im.rotation_angle(r_a.T @ r_b)


@pytest.fixture(scope="session")
def small_scene() -> im.Scene:
    """Compact rectangle scene reused by synth/backproject tests."""
    spec = im.SceneSpec(
        island=im.Rectangle(40.0, 60.0),
        point_spacing=1.0,
        sea_ring=im.SeaRing(12.0, 3.0),
        orbit=im.OrbitSpec(radius=120.0, altitude=150.0, frame_count=8),
        intrinsics=im.IntrinsicsRecord(300.0, 300.0, 160.0, 120.0, 320, 240),
        distortion=11,
        shore_inset=1.0,  # >= the worst-case pixel ground footprint here
    )
    return im.generate_scene(spec)


@pytest.fixture(scope="session")
def cone_scene() -> im.Scene:
    """Small disk island with a cone profile; used for height-map checks."""
    spec = im.SceneSpec(
        island=im.Disk(30.0),
        height_profile=im.Cone(12.0),
        point_spacing=1.0,
        sea_ring=im.SeaRing(10.0, 3.0),
        orbit=im.OrbitSpec(radius=100.0, altitude=130.0, frame_count=6),
        intrinsics=im.IntrinsicsRecord(300.0, 300.0, 160.0, 120.0, 320, 240),
        distortion=None,
        shore_inset=1.0,
    )
    return im.generate_scene(spec)
