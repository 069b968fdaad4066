"""Synthetic scenes and simulated sensors.

Regions are vertical prisms (axis-aligned rectangle or disc footprint, height
above the z=0 ground plane). Grass regions block the planar lidar exactly like
solid ones but are traversable ground truth; that mismatch is the phenomenon
the clearing layer exists to fix. Both sensors ignore regions whose volume
contains the sensor origin, so a robot immersed in grass still senses the rest
of the scene.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .camera import (
    CameraIntrinsics,
    CameraMount,
    DepthImage,
    SegClass,
    SegMask,
    camera_pose_in_world,
)
from .errors import SensorOutsideWorldError
from .grid import Pose2D

_EPS = 1e-9


class RegionClass(Enum):
    SOLID = "solid"
    GRASS = "grass"


@dataclass
class Rect:
    x_min: float
    x_max: float
    y_min: float
    y_max: float

    def contains(self, x, y):
        return (
            (x >= self.x_min) & (x <= self.x_max)
            & (y >= self.y_min) & (y <= self.y_max)
        )

    def ray_interval(self, ox: float, oy: float, dx, dy):
        """Parametric t interval where the ray's 2D track is inside the rect."""
        dx = np.asarray(dx, dtype=np.float64)
        dy = np.asarray(dy, dtype=np.float64)
        with np.errstate(divide="ignore", invalid="ignore"):
            tx1 = (self.x_min - ox) / dx
            tx2 = (self.x_max - ox) / dx
            ty1 = (self.y_min - oy) / dy
            ty2 = (self.y_max - oy) / dy
        txmin, txmax = np.minimum(tx1, tx2), np.maximum(tx1, tx2)
        tymin, tymax = np.minimum(ty1, ty2), np.maximum(ty1, ty2)
        zero_x = dx == 0.0
        zero_y = dy == 0.0
        in_x = self.x_min <= ox <= self.x_max
        in_y = self.y_min <= oy <= self.y_max
        txmin = np.where(zero_x, -np.inf if in_x else np.inf, txmin)
        txmax = np.where(zero_x, np.inf if in_x else -np.inf, txmax)
        tymin = np.where(zero_y, -np.inf if in_y else np.inf, tymin)
        tymax = np.where(zero_y, np.inf if in_y else -np.inf, tymax)
        return np.maximum(txmin, tymin), np.minimum(txmax, tymax)


@dataclass
class Disc:
    cx: float
    cy: float
    radius: float

    def contains(self, x, y):
        return (x - self.cx) ** 2 + (y - self.cy) ** 2 <= self.radius**2

    def ray_interval(self, ox: float, oy: float, dx, dy):
        dx = np.asarray(dx, dtype=np.float64)
        dy = np.asarray(dy, dtype=np.float64)
        a = dx * dx + dy * dy
        fx, fy = ox - self.cx, oy - self.cy
        b = 2.0 * (fx * dx + fy * dy)
        c = fx * fx + fy * fy - self.radius**2
        disc = b * b - 4.0 * a * c
        sq = np.sqrt(np.maximum(disc, 0.0))
        with np.errstate(divide="ignore", invalid="ignore"):
            t1 = (-b - sq) / (2.0 * a)
            t2 = (-b + sq) / (2.0 * a)
        hit = (disc >= 0.0) & (a > 0.0)
        enter = np.where(hit, t1, np.inf)
        leave = np.where(hit, t2, -np.inf)
        # degenerate 2D direction: the whole ray is one point
        if np.any(a == 0.0):
            inside = c <= 0.0
            enter = np.where(a == 0.0, -np.inf if inside else np.inf, enter)
            leave = np.where(a == 0.0, np.inf if inside else -np.inf, leave)
        return enter, leave


@dataclass
class Region:
    shape: Rect | Disc
    cls: RegionClass
    height: float


@dataclass
class WorldModel:
    """World spanning [0, extent_x] x [0, extent_y]; ground is traversable."""

    extent: tuple[float, float]
    regions: list[Region] = field(default_factory=list)

    def __post_init__(self) -> None:
        ex, ey = self.extent
        for i, region in enumerate(self.regions):
            if region.height <= 0:
                raise ValueError(f"region {i}: height must be > 0")
            s = region.shape
            if isinstance(s, Rect):
                ok = 0 <= s.x_min <= s.x_max <= ex and 0 <= s.y_min <= s.y_max <= ey
            else:
                ok = (
                    s.radius > 0
                    and s.cx - s.radius >= 0 and s.cx + s.radius <= ex
                    and s.cy - s.radius >= 0 and s.cy + s.radius <= ey
                )
            if not ok:
                raise ValueError(f"region {i}: shape outside world extent")

    def contains(self, x: float, y: float) -> bool:
        return 0 <= x <= self.extent[0] and 0 <= y <= self.extent[1]

    def solid_at(self, x: float, y: float) -> bool:
        """Ground-truth check used by safety assertions."""
        return any(
            r.cls is RegionClass.SOLID and bool(r.shape.contains(x, y))
            for r in self.regions
        )


@dataclass
class LidarSpec:
    angle_min: float = -math.pi
    angle_max: float = math.pi
    n_beams: int = 360
    max_range: float = 12.0
    min_range: float = 0.5  # returns closer than this are dropped, like real units
    height: float = 0.3  # scan plane above ground
    forward_offset: float = 0.0  # mount ahead of the robot center, meters

    def __post_init__(self) -> None:
        if self.n_beams < 1:
            raise ValueError("n_beams must be >= 1")
        if self.max_range <= 0:
            raise ValueError("max_range must be > 0")
        if not 0.0 <= self.min_range < self.max_range:
            raise ValueError("need 0 <= min_range < max_range")

    def mount_pose(self, robot: Pose2D) -> Pose2D:
        return Pose2D(
            robot.x + self.forward_offset * math.cos(robot.theta),
            robot.y + self.forward_offset * math.sin(robot.theta),
            robot.theta,
        )


@dataclass
class SensorNoise:
    range_sigma: float = 0.0
    depth_sigma_rel: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.range_sigma < 0 or self.depth_sigma_rel < 0:
            raise ValueError("noise sigmas must be >= 0")


@dataclass
class RangeScan:
    stamp: float
    angle_min: float
    angle_max: float
    n_beams: int
    max_range: float
    ranges: np.ndarray  # meters; max_range means no return
    valid: np.ndarray | None = None  # False = dropped return (below min range)

    def __post_init__(self) -> None:
        self.ranges = np.asarray(self.ranges, dtype=np.float64)
        if self.ranges.shape != (self.n_beams,):
            raise ValueError("ranges length must equal n_beams")
        if np.any(self.ranges <= 0) or np.any(self.ranges > self.max_range):
            raise ValueError("ranges must lie in (0, max_range]")
        if self.valid is None:
            self.valid = np.ones(self.n_beams, dtype=bool)
        else:
            self.valid = np.asarray(self.valid, dtype=bool)
            if self.valid.shape != (self.n_beams,):
                raise ValueError("valid mask length must equal n_beams")


def lidar_scan(
    world: WorldModel,
    sensor: Pose2D,
    spec: LidarSpec | None = None,
    noise: SensorNoise | None = None,
    stamp: float = 0.0,
) -> RangeScan:
    """Planar scan; grass blocks beams exactly like solid obstacles."""
    spec = spec or LidarSpec()
    if not world.contains(sensor.x, sensor.y):
        raise SensorOutsideWorldError(f"sensor at ({sensor.x}, {sensor.y})")
    step = (spec.angle_max - spec.angle_min) / spec.n_beams
    angles = sensor.theta + spec.angle_min + np.arange(spec.n_beams) * step
    dx, dy = np.cos(angles), np.sin(angles)

    ranges = np.full(spec.n_beams, np.inf)
    for region in world.regions:
        if region.height < spec.height:
            continue  # scan plane passes over it
        if region.shape.contains(sensor.x, sensor.y):
            continue  # sensor immersed in this region
        enter, leave = region.shape.ray_interval(sensor.x, sensor.y, dx, dy)
        hit = (enter <= leave) & (enter > _EPS)
        ranges = np.where(hit, np.minimum(ranges, enter), ranges)

    hits = ranges <= spec.max_range
    if noise is not None and noise.range_sigma > 0:
        rng = np.random.default_rng(noise.seed)
        noisy = ranges + rng.normal(0.0, noise.range_sigma, spec.n_beams)
        ranges = np.where(hits, np.clip(noisy, 1e-3, spec.max_range), ranges)
    # returns below the device minimum carry no information at all
    dropped = hits & (ranges < spec.min_range)
    ranges = np.where(hits, ranges, spec.max_range)
    ranges = np.where(dropped, max(spec.min_range, 1e-3), ranges)
    return RangeScan(stamp, spec.angle_min, spec.angle_max, spec.n_beams,
                     spec.max_range, ranges, valid=~dropped)


def _raycast(
    world: WorldModel,
    origin: np.ndarray,
    r_wc: np.ndarray,
    k: CameraIntrinsics,
    max_range: float,
    stride: int,
) -> tuple[np.ndarray, np.ndarray]:
    """Joint depth/class render; returns full-size (depth, classes) arrays.

    The returned depth is the camera-frame z coordinate of the first hit
    (regions as vertical prisms, plus the ground plane). Off-lattice pixels
    are invalid/DONT_CARE.
    """
    us = np.arange(0, k.width, stride)
    vs = np.arange(0, k.height, stride)
    uu, vv = np.meshgrid(us, vs)
    xs = (uu.ravel() - k.cx) / k.fx
    ys = (vv.ravel() - k.cy) / k.fy
    dirs_cam = np.vstack([xs, ys, np.ones_like(xs)])  # z component is 1
    dirs = r_wc @ dirs_cam
    norms = np.linalg.norm(dirs_cam, axis=0)
    ox, oy, oz = origin
    dx, dy, dz = dirs

    t_best = np.full(dirs.shape[1], np.inf)
    cls_best = np.full(dirs.shape[1], int(SegClass.DONT_CARE), dtype=np.uint8)

    # ground plane z = 0 (traversable)
    with np.errstate(divide="ignore", invalid="ignore"):
        t_ground = -oz / dz
    ground_hit = (dz < 0.0) & (t_ground > _EPS)
    t_best = np.where(ground_hit, t_ground, t_best)
    cls_best = np.where(ground_hit, np.uint8(SegClass.TRAVERSABLE), cls_best)

    for region in world.regions:
        if bool(region.shape.contains(ox, oy)) and 0.0 <= oz <= region.height:
            continue  # camera immersed in this region
        f_enter, f_leave = region.shape.ray_interval(ox, oy, dx, dy)
        with np.errstate(divide="ignore", invalid="ignore"):
            tz1 = (0.0 - oz) / dz
            tz2 = (region.height - oz) / dz
        z_enter, z_leave = np.minimum(tz1, tz2), np.maximum(tz1, tz2)
        in_band = 0.0 <= oz <= region.height
        zero_z = dz == 0.0
        z_enter = np.where(zero_z, -np.inf if in_band else np.inf, z_enter)
        z_leave = np.where(zero_z, np.inf if in_band else -np.inf, z_leave)
        enter = np.maximum(f_enter, z_enter)
        leave = np.minimum(f_leave, z_leave)
        hit = (enter <= leave) & (enter > _EPS) & (enter < t_best)
        t_best = np.where(hit, enter, t_best)
        rc = SegClass.OBSTACLE if region.cls is RegionClass.SOLID else SegClass.TRAVERSABLE
        cls_best = np.where(hit, np.uint8(rc), cls_best)

    valid = np.isfinite(t_best) & (t_best * norms <= max_range)
    depth_lattice = np.where(valid, t_best, 0.0)
    cls_lattice = np.where(valid, cls_best, np.uint8(SegClass.DONT_CARE))

    depth = np.zeros((k.height, k.width))
    classes = np.full((k.height, k.width), int(SegClass.DONT_CARE), dtype=np.uint8)
    depth[vv, uu] = depth_lattice.reshape(uu.shape)
    classes[vv, uu] = cls_lattice.reshape(uu.shape)
    return depth, classes


def sense_rgbd(
    world: WorldModel,
    robot: Pose2D,
    k: CameraIntrinsics,
    mount: CameraMount,
    noise: SensorNoise | None = None,
    max_range: float = 6.0,
    stride: int = 1,
    depth_stamp: float = 0.0,
    mask_stamp: float = 0.0,
) -> tuple[DepthImage, SegMask]:
    """One ray cast yielding a depth image and its ground-truth mask."""
    origin, r_wc = camera_pose_in_world(mount, robot)
    depth, classes = _raycast(world, origin, r_wc, k, max_range, stride)
    if noise is not None and noise.depth_sigma_rel > 0:
        rng = np.random.default_rng(noise.seed)
        factor = 1.0 + rng.normal(0.0, noise.depth_sigma_rel, depth.shape)
        depth = np.where(depth > 0.0, np.maximum(depth * factor, 0.0), depth)
    return (
        DepthImage(k.width, k.height, depth_stamp, depth),
        SegMask(k.width, k.height, mask_stamp, classes),
    )


def depth_render(
    world: WorldModel,
    robot: Pose2D,
    k: CameraIntrinsics,
    mount: CameraMount,
    noise: SensorNoise | None = None,
    max_range: float = 6.0,
    stride: int = 1,
    stamp: float = 0.0,
) -> DepthImage:
    depth, _ = sense_rgbd(world, robot, k, mount, noise, max_range, stride,
                          depth_stamp=stamp, mask_stamp=stamp)
    return depth


def oracle_segment(
    world: WorldModel,
    robot: Pose2D,
    k: CameraIntrinsics,
    mount: CameraMount,
    max_range: float = 6.0,
    stride: int = 1,
    stamp: float = 0.0,
) -> SegMask:
    """Ground-truth segmentation consistent with depth_render pixel-for-pixel."""
    _, mask = sense_rgbd(world, robot, k, mount, None, max_range, stride,
                         depth_stamp=stamp, mask_stamp=stamp)
    return mask


def corrupt_mask(mask: SegMask, flip_rate: float, seed: int) -> SegMask:
    """Flip Traversable<->Obstacle labels independently with probability flip_rate."""
    if not 0.0 <= flip_rate <= 1.0:
        raise ValueError("flip_rate must be in [0, 1]")
    rng = np.random.default_rng(seed)
    draw = rng.random(mask.classes.shape)
    labeled = mask.classes != int(SegClass.DONT_CARE)
    flip = labeled & (draw < flip_rate)
    swapped = np.where(
        mask.classes == int(SegClass.OBSTACLE),
        np.uint8(SegClass.TRAVERSABLE),
        np.uint8(SegClass.OBSTACLE),
    )
    out = np.where(flip, swapped, mask.classes)
    return SegMask(mask.width, mask.height, mask.stamp, out)
