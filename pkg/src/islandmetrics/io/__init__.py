"""On-disk artifact I/O: point clouds, trajectories, masks, intrinsics."""

from .images import MaskImage, read_grayscale, read_mask, write_grayscale
from .intrinsics import IntrinsicsRecord, read_intrinsics, write_intrinsics
from .ply import read_point_cloud, write_point_cloud
from .trajectory import (
    GEODETIC,
    LOCAL_METRIC,
    FrameRecord,
    TrajectoryDocument,
    document_from_dict,
    enu_basis,
    geodetic_to_ecef,
    geodetic_to_local,
    read_trajectory,
    trajectory_to_document,
    write_trajectory,
)

__all__ = [
    "GEODETIC",
    "LOCAL_METRIC",
    "FrameRecord",
    "IntrinsicsRecord",
    "MaskImage",
    "TrajectoryDocument",
    "document_from_dict",
    "enu_basis",
    "geodetic_to_ecef",
    "geodetic_to_local",
    "read_grayscale",
    "read_intrinsics",
    "read_mask",
    "read_point_cloud",
    "read_trajectory",
    "trajectory_to_document",
    "write_grayscale",
    "write_intrinsics",
    "write_point_cloud",
    "write_trajectory",
]
