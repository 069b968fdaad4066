"""Closed-loop scenario execution: sense, sync, project, update costmap, plan, step.

The loop is fully deterministic for a given scenario and seed: all randomness
(sensor noise, stamp jitter, mask corruption) flows from one seed sequence.
Per-tick pipeline times (mask application through planning) are wall-clock and
therefore the only non-deterministic part of the run record.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .camera import (
    CameraIntrinsics,
    CameraMount,
    SegClass,
    depth_to_cloud,
    mask_depth,
    transform_cloud,
)
from .errors import (
    InvalidEndpointError,
    InvalidScenarioError,
    NoPathError,
    OutOfBoundsError,
)
from .grid import FREE, INSCRIBED, LETHAL, UNKNOWN, CostGrid, Pose2D, RollingWindow
from .layers import (
    ClearingLayer,
    InflationLayer,
    LayerStack,
    ObstacleLayer,
    StaticLayer,
    VoxelLayer,
)
from .planner import Path, PlannerConfig, plan
from .sync import SyncConfig, Synchronizer
from .world import (
    LidarSpec,
    Rect,
    SensorNoise,
    WorldModel,
    corrupt_mask,
    lidar_scan,
    sense_rgbd,
)

OUTCOME_REACHED = "Reached"
OUTCOME_NO_PATH = "NoPathAbort"
OUTCOME_TIMEOUT = "Timeout"


def _default_intrinsics() -> CameraIntrinsics:
    return CameraIntrinsics(fx=160.0, fy=160.0, cx=159.5, cy=119.5, width=320, height=240)


def _default_mount() -> CameraMount:
    return CameraMount(position=np.array([0.2, 0.0, 0.6]), pitch=math.radians(15.0))


@dataclass
class CameraConfig:
    intrinsics: CameraIntrinsics = field(default_factory=_default_intrinsics)
    mount: CameraMount = field(default_factory=_default_mount)
    max_range: float = 6.0
    stride: int = 4
    render_stride: int = 1


@dataclass
class NoiseConfig:
    range_sigma: float = 0.0
    depth_sigma_rel: float = 0.0
    mask_flip_rate: float = 0.0

    def __post_init__(self) -> None:
        if self.range_sigma < 0 or self.depth_sigma_rel < 0:
            raise ValueError("noise sigmas must be >= 0")
        if not 0.0 <= self.mask_flip_rate <= 1.0:
            raise ValueError("mask_flip_rate must be in [0, 1]")


@dataclass
class GridConfig:
    width: int = 200
    height: int = 200
    resolution: float = 0.05

    def __post_init__(self) -> None:
        if self.width < 1 or self.height < 1 or self.resolution <= 0:
            raise ValueError("grid needs positive dimensions and resolution")


@dataclass
class ObstacleLayerConfig:
    raytrace_range: float = 12.0
    obstacle_range: float = 12.0

    def __post_init__(self) -> None:
        if self.raytrace_range <= 0 or self.obstacle_range <= 0:
            raise ValueError("obstacle layer ranges must be > 0")


@dataclass
class VoxelLayerConfig:
    z_origin: float = 0.0
    z_resolution: float = 0.125
    nz: int = 16
    mark_threshold: int = 1

    def __post_init__(self) -> None:
        if not 1 <= self.nz <= 16:
            raise ValueError("nz must be in [1, 16]")
        if self.z_resolution <= 0 or self.mark_threshold < 1:
            raise ValueError("voxel layer needs z_resolution > 0, mark_threshold >= 1")


@dataclass
class ClearingLayerConfig:
    min_points: int = 1
    z_min: float = -0.1
    z_max: float = 1.0

    def __post_init__(self) -> None:
        if self.min_points < 1 or self.z_min > self.z_max:
            raise ValueError("clearing layer needs min_points >= 1 and z_min <= z_max")


@dataclass
class InflationLayerConfig:
    inscribed_radius: float = 0.3
    inflation_radius: float = 0.7
    cost_scaling: float = 10.0

    def __post_init__(self) -> None:
        if not self.inflation_radius >= self.inscribed_radius > 0:
            raise ValueError("need inflation_radius >= inscribed_radius > 0")


@dataclass
class LayersConfig:
    static_obstacles: list[Rect] = field(default_factory=list)
    obstacle: ObstacleLayerConfig = field(default_factory=ObstacleLayerConfig)
    voxel: VoxelLayerConfig = field(default_factory=VoxelLayerConfig)
    clearing: ClearingLayerConfig = field(default_factory=ClearingLayerConfig)
    inflation: InflationLayerConfig = field(default_factory=InflationLayerConfig)


@dataclass
class SyncSettings:
    threshold: float = 0.1
    queue_capacity: int = 16
    stamp_jitter: float = 0.03  # +- bound on per-stream stamp offsets

    def __post_init__(self) -> None:
        if self.threshold <= 0 or self.queue_capacity < 1 or self.stamp_jitter < 0:
            raise ValueError("invalid sync settings")


@dataclass
class SimConfig:
    tick_hz: float = 10.0
    robot_speed: float = 0.5
    max_ticks: int = 600
    goal_tolerance: float = 0.2
    abort_after_failures: int = 10

    def __post_init__(self) -> None:
        if (self.tick_hz <= 0 or self.robot_speed <= 0 or self.max_ticks < 1
                or self.goal_tolerance < 0 or self.abort_after_failures < 1):
            raise ValueError("invalid sim settings")


@dataclass
class Scenario:
    world: WorldModel
    start: Pose2D
    goal: tuple[float, float]
    lidar: LidarSpec = field(default_factory=LidarSpec)
    camera: CameraConfig = field(default_factory=CameraConfig)
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    grid: GridConfig = field(default_factory=GridConfig)
    layers: LayersConfig = field(default_factory=LayersConfig)
    sync: SyncSettings = field(default_factory=SyncSettings)
    sim: SimConfig = field(default_factory=SimConfig)
    planner: PlannerConfig = field(default_factory=PlannerConfig)
    clearing_enabled: bool = True
    seed: int = 0

    def __post_init__(self) -> None:
        if not self.world.contains(self.start.x, self.start.y):
            raise InvalidScenarioError("start pose outside world extent")
        if not self.world.contains(*self.goal):
            raise InvalidScenarioError("goal outside world extent")


@dataclass
class RunMetrics:
    outcome: str
    traveled_length: float
    first_plan_length: float | None
    ticks: int
    replans: int
    cells_cleared_total: int
    cycle_times: list[float]


@dataclass
class TickRecord:
    """Per-tick observation handed to an optional observer callback."""

    tick: int
    pose: Pose2D  # pose after this tick's motion
    snapshot: CostGrid
    cleared_cells: np.ndarray  # (n, 2) of (col, row) cleared this cycle
    plan_path: Path | None


Observer = Callable[[TickRecord], None]


def build_static_reference(world: WorldModel, rects: list[Rect], resolution: float) -> CostGrid:
    """Rasterize known-obstacle rectangles over the world extent."""
    width = int(math.ceil(world.extent[0] / resolution))
    height = int(math.ceil(world.extent[1] / resolution))
    ref = CostGrid.filled(width, height, resolution, Pose2D(0.0, 0.0), FREE)
    xs = (np.arange(width) + 0.5) * resolution
    ys = (np.arange(height) + 0.5) * resolution
    xx, yy = np.meshgrid(xs, ys)
    for rect in rects:
        ref.cells[rect.contains(xx, yy)] = LETHAL
    return ref


def build_stack(scenario: Scenario) -> LayerStack:
    cfg = scenario.layers
    window = RollingWindow.centered(
        scenario.grid.width, scenario.grid.height, scenario.grid.resolution,
        scenario.start,
    )
    layers = []
    if cfg.static_obstacles:
        ref = build_static_reference(
            scenario.world, cfg.static_obstacles, scenario.grid.resolution
        )
        layers.append(StaticLayer(ref))
    layers.append(ObstacleLayer(cfg.obstacle.raytrace_range, cfg.obstacle.obstacle_range))
    layers.append(VoxelLayer(cfg.voxel.z_origin, cfg.voxel.z_resolution,
                             cfg.voxel.nz, cfg.voxel.mark_threshold))
    layers.append(ClearingLayer(cfg.clearing.min_points, cfg.clearing.z_min,
                                cfg.clearing.z_max, enabled=scenario.clearing_enabled))
    layers.append(InflationLayer(cfg.inflation.inscribed_radius,
                                 cfg.inflation.inflation_radius,
                                 cfg.inflation.cost_scaling))
    return LayerStack(window, layers)


class _PathFollower:
    """Committed route the robot tracks across ticks.

    Replanning happens every tick, but the robot only abandons its committed
    route when the fresh plan is better by a clear margin or the route is
    invalidated (a remaining cell became lethal). While plans fail
    transiently, the robot keeps following the committed route; that carries
    it through moments where the camera is too close to the grass face to
    keep the whole entry corridor cleared.
    """

    def __init__(self, targets: list[tuple[float, float]]) -> None:
        self.targets = list(targets)

    @classmethod
    def from_plan(cls, path: Path, grid: CostGrid,
                  goal: tuple[float, float]) -> "_PathFollower":
        targets = [grid.cell_to_world(wp) for wp in path.waypoints[1:]]
        return cls(targets or [goal])

    def exhausted(self) -> bool:
        return not self.targets

    def viable(self, grid: CostGrid, unknown_is_lethal: bool) -> bool:
        """All remaining targets on cells one could still drive over."""
        if not self.targets:
            return False
        xs = np.array([t[0] for t in self.targets])
        ys = np.array([t[1] for t in self.targets])
        cols, rows, ok = grid.world_to_cells(xs, ys)
        if not ok.all():
            return False
        vals = grid.cells[rows, cols]
        if (vals == LETHAL).any():
            return False
        if unknown_is_lethal and (vals == UNKNOWN).any():
            return False
        return True

    def remaining_cost(self, pose: Pose2D, grid: CostGrid,
                       cost_weight: float) -> float:
        """Planner-style cost of the rest of the route on the current grid."""
        total = 0.0
        prev = (pose.x, pose.y)
        for target in self.targets:
            length = math.hypot(target[0] - prev[0], target[1] - prev[1])
            try:
                cell = grid.world_to_cell(*target)
                value = int(grid.cells[cell.row, cell.col])
            except OutOfBoundsError:
                return math.inf
            cell_cost = 0.0 if value == UNKNOWN else value / 254.0
            total += length * (1.0 + cost_weight * cell_cost)
            prev = target
        return total

    def advance(self, pose: Pose2D, distance: float) -> tuple[Pose2D, float]:
        """Move up to `distance` along the route, consuming passed targets."""
        cur = np.array([pose.x, pose.y])
        theta = pose.theta
        remaining = distance
        while self.targets and remaining > 1e-12:
            seg = np.asarray(self.targets[0]) - cur
            length = float(np.hypot(seg[0], seg[1]))
            if length < 1e-12:
                self.targets.pop(0)
                continue
            if remaining < length:
                cur = cur + seg * (remaining / length)
                theta = math.atan2(seg[1], seg[0])
                remaining = 0.0
                break
            cur = np.asarray(self.targets.pop(0), dtype=float)
            theta = math.atan2(seg[1], seg[0])
            remaining -= length
        return Pose2D(float(cur[0]), float(cur[1]), theta), distance - remaining


def run(scenario: Scenario, observer: Observer | None = None) -> RunMetrics:
    """Execute one scenario to completion; deterministic per (scenario, seed)."""
    world = scenario.world
    cam = scenario.camera
    sim = scenario.sim
    stack = build_stack(scenario)
    clearing = stack.layer("clearing")
    sync = Synchronizer(SyncConfig(scenario.sync.threshold, scenario.sync.queue_capacity))

    children = np.random.SeedSequence(scenario.seed).spawn(4)
    rng_jitter = np.random.default_rng(children[0])
    rng_lidar = np.random.default_rng(children[1])
    rng_depth = np.random.default_rng(children[2])
    rng_mask = np.random.default_rng(children[3])

    pose = Pose2D(scenario.start.x, scenario.start.y, scenario.start.theta)
    goal = scenario.goal
    step_dist = sim.robot_speed / sim.tick_hz
    switch_margin = 2.0 * scenario.grid.resolution

    traveled = 0.0
    replans = 0
    cells_cleared = 0
    first_plan_length: float | None = None
    cycle_times: list[float] = []
    fail_streak = 0
    outcome = OUTCOME_TIMEOUT
    ticks = 0
    route: _PathFollower | None = None

    if math.hypot(pose.x - goal[0], pose.y - goal[1]) <= sim.goal_tolerance:
        return RunMetrics(OUTCOME_REACHED, 0.0, None, 0, 0, 0, [])

    for tick in range(sim.max_ticks):
        ticks = tick + 1
        t_sim = tick / sim.tick_hz

        lidar_pose = scenario.lidar.mount_pose(pose)
        scan = lidar_scan(
            world, lidar_pose, scenario.lidar,
            SensorNoise(scenario.noise.range_sigma, 0.0,
                        int(rng_lidar.integers(2**63))),
            stamp=t_sim,
        )
        jd, jm = rng_jitter.uniform(-scenario.sync.stamp_jitter,
                                    scenario.sync.stamp_jitter, 2)
        depth, mask = sense_rgbd(
            world, pose, cam.intrinsics, cam.mount,
            SensorNoise(0.0, scenario.noise.depth_sigma_rel,
                        int(rng_depth.integers(2**63))),
            cam.max_range, cam.render_stride,
            depth_stamp=t_sim + jd, mask_stamp=t_sim + jm,
        )
        if scenario.noise.mask_flip_rate > 0:
            mask = corrupt_mask(mask, scenario.noise.mask_flip_rate,
                                int(rng_mask.integers(2**63)))

        pairs = sync.push("a", depth.stamp, depth)
        pairs += sync.push("b", mask.stamp, mask)

        t0 = time.perf_counter()
        obstacle_cloud = traversable_cloud = None
        if pairs:
            (_, d), (_, m) = pairs[-1]
            trav_depth = mask_depth(d, m, SegClass.TRAVERSABLE)
            obst_depth = mask_depth(d, m, SegClass.OBSTACLE)
            trav = depth_to_cloud(trav_depth, cam.intrinsics, SegClass.TRAVERSABLE, cam.stride)
            obst = depth_to_cloud(obst_depth, cam.intrinsics, SegClass.OBSTACLE, cam.stride)
            traversable_cloud = transform_cloud(trav, cam.mount, pose)
            obstacle_cloud = transform_cloud(obst, cam.mount, pose)

        snapshot = stack.update(pose, scan, obstacle_cloud, traversable_cloud,
                                sensor_pose=lidar_pose)
        if clearing is not None and clearing.enabled:
            cells_cleared += clearing.last_cleared_count
            cleared_cells = clearing.last_cleared_cells
        else:
            cleared_cells = np.zeros((0, 2), dtype=np.int64)

        path = None
        try:
            start_cell = snapshot.world_to_cell(pose.x, pose.y)
            goal_cell = snapshot.world_to_cell(*goal)
            plan_grid = snapshot
            if snapshot.cells[start_cell.row, start_cell.col] == INSCRIBED:
                # you-are-where-you-are allowance: free the robot's own cell
                plan_grid = snapshot.copy()
                plan_grid.cells[start_cell.row, start_cell.col] = FREE
            path = plan(plan_grid, start_cell, goal_cell, scenario.planner)
        except (NoPathError, InvalidEndpointError, OutOfBoundsError):
            path = None
        cycle_times.append(time.perf_counter() - t0)

        route_ok = route is not None and route.viable(
            snapshot, scenario.planner.unknown_is_lethal)
        if path is not None:
            replans += 1
            fail_streak = 0
            if first_plan_length is None:
                first_plan_length = path.length
            if route_ok:
                keep_cost = route.remaining_cost(pose, snapshot,
                                                 scenario.planner.cost_weight)
                if path.cost < keep_cost - switch_margin:
                    route = _PathFollower.from_plan(path, snapshot, goal)
            else:
                route = _PathFollower.from_plan(path, snapshot, goal)
            route_ok = True
        else:
            fail_streak += 1
        if route_ok:
            pose, moved = route.advance(pose, step_dist)
            traveled += moved

        if observer is not None:
            observer(TickRecord(tick, pose, snapshot, cleared_cells, path))

        if math.hypot(pose.x - goal[0], pose.y - goal[1]) <= sim.goal_tolerance:
            outcome = OUTCOME_REACHED
            break
        if fail_streak >= sim.abort_after_failures:
            outcome = OUTCOME_NO_PATH
            break

    return RunMetrics(outcome, traveled, first_plan_length, ticks, replans,
                      cells_cleared, cycle_times)


def compare(
    scenario: Scenario,
    observer_with: Observer | None = None,
    observer_without: Observer | None = None,
) -> tuple[RunMetrics, RunMetrics]:
    """Run the same scenario twice, toggling only the clearing layer."""
    with_metrics = run(replace(scenario, clearing_enabled=True), observer_with)
    without_metrics = run(replace(scenario, clearing_enabled=False), observer_without)
    return with_metrics, without_metrics


def metrics_to_dict(metrics: RunMetrics, include_timing: bool = True) -> dict:
    out = {
        "outcome": metrics.outcome,
        "traveled_length": metrics.traveled_length,
        "first_plan_length": metrics.first_plan_length,
        "ticks": metrics.ticks,
        "replans": metrics.replans,
        "cells_cleared_total": metrics.cells_cleared_total,
    }
    if include_timing:
        per_tick = metrics.cycle_times
        if per_tick:
            p50 = float(np.percentile(per_tick, 50) * 1000.0)
            p95 = float(np.percentile(per_tick, 95) * 1000.0)
        else:
            p50 = p95 = 0.0
        out["timing"] = {
            "p50_ms": p50,
            "p95_ms": p95,
            "per_tick_s": list(per_tick),
        }
    return out
