"""Layered local costmap with vision-based traversability clearing.

A range sensor sees tall grass as an obstacle; a segmentation camera knows it
is drivable. This package provides the grid/costmap machinery, a clearing
layer that injects the camera's verdict into the local costmap before
inflation, a deterministic orchard simulator, a grid planner, and a CLI to run
and compare scenarios.
"""

from .camera import (
    CameraIntrinsics,
    CameraMount,
    DepthImage,
    Frame,
    LabeledCloud,
    SegClass,
    SegMask,
    depth_to_cloud,
    mask_depth,
    transform_cloud,
)
from .errors import (
    DimensionMismatchError,
    GrassnavError,
    InvalidEndpointError,
    InvalidScenarioError,
    NoPathError,
    OutOfBoundsError,
    SensorOutsideWindowError,
    SensorOutsideWorldError,
    StaleStampError,
    WrongFrameError,
)
from .grid import (
    FREE,
    INSCRIBED,
    LETHAL,
    UNKNOWN,
    CellIndex,
    CostGrid,
    Pose2D,
    RollingWindow,
    roll_window,
)
from .layers import (
    ClearingLayer,
    InflationLayer,
    LayerStack,
    ObstacleLayer,
    StaticLayer,
    VoxelLayer,
    standard_stack,
)
from .planner import Path, PlannerConfig, path_length, plan
from .runner import RunMetrics, Scenario, compare, metrics_to_dict, run
from .scenario import load_scenario, scenario_from_dict, scenario_to_dict
from .sync import SyncConfig, Synchronizer
from .world import (
    Disc,
    LidarSpec,
    RangeScan,
    Rect,
    Region,
    RegionClass,
    SensorNoise,
    WorldModel,
    corrupt_mask,
    depth_render,
    lidar_scan,
    oracle_segment,
    sense_rgbd,
)

__version__ = "0.1.0"
