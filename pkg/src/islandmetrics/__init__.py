"""Metric-scale recovery and footprint measurement for monocular reconstructions.

The pipeline has three stages, each usable on its own:

1. :mod:`islandmetrics.geometry` - recover the global similarity between a
   reconstructed camera trajectory and a metric reference, and apply it to
   poses and point clouds.
2. :mod:`islandmetrics.backproject` - label the landmass by projecting every
   point into every view, voting against 2D masks with Z-buffer occlusion.
3. :mod:`islandmetrics.footprint` - rasterize the labeled points on an
   adaptive occupancy grid and measure area, perimeter and the height field.

:mod:`islandmetrics.synth` generates fully analytic scenes so each stage can
be verified against exact ground truth, and :mod:`islandmetrics.cli` wires the
stages into file-based subcommands.
"""

from .backproject import (
    DepthBuffer,
    LabelingConfig,
    ViewFrame,
    build_depth_buffer,
    label_points,
    project_to_pixel,
    select_island,
    world_to_camera_point,
)
from .footprint import (
    GeoreferencedImage,
    MeasurementReport,
    OccupancyGrid,
    area,
    avg_nn_distance,
    drop_to_2d,
    footprint_image,
    grid_size,
    height_map,
    measure_footprint,
    perimeter,
    rasterize,
    relative_error,
)
from .geometry import (
    Convention,
    PointCloud,
    RigidPose,
    Sim3Transform,
    Trajectory,
    align_trajectories,
    alignment_rmse,
    apply_sim3_to_points,
    apply_sim3_to_pose,
    apply_sim3_to_trajectory,
    quaternion_from_rotation,
    rotation_angle,
    rotation_from_quaternion,
    umeyama_align,
)
from .io import (
    IntrinsicsRecord,
    MaskImage,
    TrajectoryDocument,
    geodetic_to_local,
    read_grayscale,
    read_intrinsics,
    read_mask,
    read_point_cloud,
    read_trajectory,
    write_grayscale,
    write_point_cloud,
    write_trajectory,
)
from .synth import (
    Cone,
    Disk,
    Flat,
    OrbitSpec,
    Polygon,
    PortableRng,
    Rectangle,
    Scene,
    SceneSpec,
    SeaRing,
    generate_scene,
    perturb,
    write_scene,
)

__version__ = "0.1.0"
