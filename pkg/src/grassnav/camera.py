"""Segmentation masks, depth images, and projection to labeled point clouds.

Depth pixels store the camera-frame z coordinate (planar depth) in meters;
any non-finite or <= 0 value means "no measurement". The camera optical frame
is x right, y down, z forward; the robot frame is x forward, y left, z up.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum, IntEnum

import numpy as np

from .errors import DimensionMismatchError, WrongFrameError
from .grid import Pose2D


class SegClass(IntEnum):
    DONT_CARE = 0
    OBSTACLE = 1
    TRAVERSABLE = 2


class Frame(Enum):
    CAMERA = "camera"
    ROBOT = "robot"
    WORLD = "world"


@dataclass
class CameraIntrinsics:
    """Pinhole parameters, zero distortion."""

    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int

    def __post_init__(self) -> None:
        if self.fx <= 0 or self.fy <= 0:
            raise ValueError("focal lengths must be positive")
        if not (0 <= self.cx < self.width and 0 <= self.cy < self.height):
            raise ValueError("principal point must lie inside the image")


@dataclass
class DepthImage:
    width: int
    height: int
    stamp: float
    depth: np.ndarray  # float64, shape (height, width), meters

    def __post_init__(self) -> None:
        self.depth = np.asarray(self.depth, dtype=np.float64)
        if self.depth.shape != (self.height, self.width):
            raise ValueError("depth array shape must be (height, width)")

    @property
    def valid(self) -> np.ndarray:
        return np.isfinite(self.depth) & (self.depth > 0.0)


@dataclass
class SegMask:
    width: int
    height: int
    stamp: float
    classes: np.ndarray  # uint8 of SegClass values, shape (height, width)

    def __post_init__(self) -> None:
        self.classes = np.asarray(self.classes, dtype=np.uint8)
        if self.classes.shape != (self.height, self.width):
            raise ValueError("classes array shape must be (height, width)")


@dataclass
class LabeledCloud:
    """Points plus per-point class, in a named frame."""

    stamp: float
    frame: Frame
    points: np.ndarray  # float64, shape (n, 3)
    classes: np.ndarray  # uint8 of SegClass values, shape (n,)

    def __post_init__(self) -> None:
        self.points = np.asarray(self.points, dtype=np.float64).reshape(-1, 3)
        self.classes = np.asarray(self.classes, dtype=np.uint8).reshape(-1)
        if len(self.points) != len(self.classes):
            raise ValueError("points and classes must have equal length")
        if len(self.points) and not np.isfinite(self.points).all():
            raise ValueError("cloud coordinates must be finite")

    def __len__(self) -> int:
        return len(self.points)


# Optical axes (x right, y down, z forward) expressed in the robot frame
# (x forward, y left, z up): cam z -> robot x, cam x -> robot -y, cam y -> robot -z.
OPTICAL_TO_ROBOT = np.array(
    [
        [0.0, 0.0, 1.0],
        [-1.0, 0.0, 0.0],
        [0.0, -1.0, 0.0],
    ]
)


@dataclass
class CameraMount:
    """Camera pose in the robot frame; pitch is positive downward."""

    position: np.ndarray = field(default_factory=lambda: np.zeros(3))
    pitch: float = 0.0
    yaw: float = 0.0

    def __post_init__(self) -> None:
        self.position = np.asarray(self.position, dtype=np.float64).reshape(3)

    def rotation_to_robot(self) -> np.ndarray:
        """Rotation taking optical-frame vectors to the robot frame."""
        cp, sp = math.cos(self.pitch), math.sin(self.pitch)
        cy, sy = math.cos(self.yaw), math.sin(self.yaw)
        # positive pitch tilts the optical axis below the horizon
        ry = np.array([[cp, 0.0, sp], [0.0, 1.0, 0.0], [-sp, 0.0, cp]])
        rz = np.array([[cy, -sy, 0.0], [sy, cy, 0.0], [0.0, 0.0, 1.0]])
        return rz @ ry @ OPTICAL_TO_ROBOT


def robot_to_world_rotation(pose: Pose2D) -> np.ndarray:
    c, s = math.cos(pose.theta), math.sin(pose.theta)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def camera_pose_in_world(
    mount: CameraMount, robot: Pose2D
) -> tuple[np.ndarray, np.ndarray]:
    """(camera origin in world, rotation optical->world)."""
    r_wr = robot_to_world_rotation(robot)
    origin = r_wr @ mount.position + np.array([robot.x, robot.y, 0.0])
    return origin, r_wr @ mount.rotation_to_robot()


def mask_depth(depth: DepthImage, mask: SegMask, keep: SegClass) -> DepthImage:
    """Keep depth only where the mask matches ``keep``; everything else invalid."""
    if (depth.width, depth.height) != (mask.width, mask.height):
        raise DimensionMismatchError(
            f"depth {depth.width}x{depth.height} vs mask {mask.width}x{mask.height}"
        )
    out = np.where(depth.valid & (mask.classes == int(keep)), depth.depth, 0.0)
    return DepthImage(depth.width, depth.height, depth.stamp, out)


def depth_to_cloud(
    depth: DepthImage, k: CameraIntrinsics, cls: SegClass, stride: int = 4
) -> LabeledCloud:
    """Project valid pixels on the stride lattice to a camera-frame cloud.

    Points come out in row-major pixel order.
    """
    if (depth.width, depth.height) != (k.width, k.height):
        raise DimensionMismatchError("depth image does not match intrinsics")
    if stride < 1:
        raise ValueError("stride must be >= 1")
    us = np.arange(0, depth.width, stride)
    vs = np.arange(0, depth.height, stride)
    uu, vv = np.meshgrid(us, vs)  # shape (len(vs), len(us)), row-major
    z = depth.depth[vv, uu]
    ok = np.isfinite(z) & (z > 0.0)
    uu, vv, z = uu[ok], vv[ok], z[ok]
    x = (uu - k.cx) * z / k.fx
    y = (vv - k.cy) * z / k.fy
    pts = np.column_stack([x, y, z])
    classes = np.full(len(pts), int(cls), dtype=np.uint8)
    return LabeledCloud(depth.stamp, Frame.CAMERA, pts, classes)


def transform_cloud(
    cloud: LabeledCloud, mount: CameraMount, robot: Pose2D
) -> LabeledCloud:
    """Camera-frame cloud -> world frame via the mount and the robot pose."""
    if cloud.frame is not Frame.CAMERA:
        raise WrongFrameError(f"expected camera frame, got {cloud.frame}")
    origin, r_wc = camera_pose_in_world(mount, robot)
    pts = cloud.points @ r_wc.T + origin
    return LabeledCloud(cloud.stamp, Frame.WORLD, pts, cloud.classes.copy())
