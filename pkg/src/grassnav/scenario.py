"""Scenario file schema: JSON mirroring the Scenario dataclass field-for-field.

Unknown keys are rejected anywhere in the document so that typos fail loudly
before a run starts.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .camera import CameraIntrinsics, CameraMount
from .errors import InvalidScenarioError
from .grid import Pose2D
from .planner import PlannerConfig
from .runner import (
    CameraConfig,
    ClearingLayerConfig,
    GridConfig,
    InflationLayerConfig,
    LayersConfig,
    NoiseConfig,
    ObstacleLayerConfig,
    Scenario,
    SimConfig,
    SyncSettings,
    VoxelLayerConfig,
)
from .world import Disc, Rect, Region, RegionClass, LidarSpec, WorldModel


def _require(d: dict, key: str, where: str):
    if key not in d:
        raise InvalidScenarioError(f"missing required key '{key}' in {where}")
    return d[key]


def _check_keys(d: dict, allowed: set[str], where: str) -> None:
    if not isinstance(d, dict):
        raise InvalidScenarioError(f"{where} must be an object")
    unknown = set(d) - allowed
    if unknown:
        raise InvalidScenarioError(f"unknown keys {sorted(unknown)} in {where}")


def _build(cls, d: dict, where: str, **extra):
    try:
        return cls(**d, **extra)
    except (ValueError, TypeError) as exc:
        raise InvalidScenarioError(f"{where}: {exc}") from exc


def _parse_region(d: dict, where: str) -> Region:
    _check_keys(
        d,
        {"type", "class", "height", "x_min", "x_max", "y_min", "y_max",
         "cx", "cy", "radius"},
        where,
    )
    kind = _require(d, "type", where)
    cls_name = _require(d, "class", where)
    try:
        cls = RegionClass(cls_name)
    except ValueError:
        raise InvalidScenarioError(f"{where}: class must be 'solid' or 'grass'")
    height = float(_require(d, "height", where))
    if kind == "rect":
        shape = _build(
            Rect,
            {k: float(_require(d, k, where)) for k in ("x_min", "x_max", "y_min", "y_max")},
            where,
        )
    elif kind == "disc":
        shape = _build(
            Disc,
            {k: float(_require(d, k, where)) for k in ("cx", "cy", "radius")},
            where,
        )
    else:
        raise InvalidScenarioError(f"{where}: type must be 'rect' or 'disc'")
    return Region(shape=shape, cls=cls, height=height)


def _parse_world(d: dict) -> WorldModel:
    _check_keys(d, {"extent", "regions"}, "world")
    extent = _require(d, "extent", "world")
    if not (isinstance(extent, list) and len(extent) == 2):
        raise InvalidScenarioError("world.extent must be [x, y]")
    regions = [
        _parse_region(r, f"world.regions[{i}]")
        for i, r in enumerate(d.get("regions", []))
    ]
    return _build(WorldModel, {}, "world",
                  extent=(float(extent[0]), float(extent[1])), regions=regions)


def _parse_rects(items: list, where: str) -> list[Rect]:
    out = []
    for i, r in enumerate(items):
        _check_keys(r, {"x_min", "x_max", "y_min", "y_max"}, f"{where}[{i}]")
        out.append(_build(Rect, {k: float(v) for k, v in r.items()}, f"{where}[{i}]"))
    return out


def _parse_camera(d: dict) -> CameraConfig:
    _check_keys(d, {"intrinsics", "mount", "max_range", "stride", "render_stride"},
                "camera")
    cfg = CameraConfig()
    if "intrinsics" in d:
        _check_keys(d["intrinsics"], {"fx", "fy", "cx", "cy", "width", "height"},
                    "camera.intrinsics")
        cfg.intrinsics = _build(CameraIntrinsics, d["intrinsics"], "camera.intrinsics")
    if "mount" in d:
        _check_keys(d["mount"], {"position", "pitch", "yaw"}, "camera.mount")
        m = d["mount"]
        cfg.mount = _build(
            CameraMount, {}, "camera.mount",
            position=np.asarray(m.get("position", [0.0, 0.0, 0.0]), dtype=float),
            pitch=float(m.get("pitch", 0.0)),
            yaw=float(m.get("yaw", 0.0)),
        )
    cfg.max_range = float(d.get("max_range", cfg.max_range))
    cfg.stride = int(d.get("stride", cfg.stride))
    cfg.render_stride = int(d.get("render_stride", cfg.render_stride))
    if cfg.max_range <= 0 or cfg.stride < 1 or cfg.render_stride < 1:
        raise InvalidScenarioError("camera: max_range must be > 0 and strides >= 1")
    return cfg


def _parse_layers(d: dict) -> LayersConfig:
    _check_keys(d, {"static_obstacles", "obstacle", "voxel", "clearing", "inflation"},
                "layers")
    cfg = LayersConfig()
    if "static_obstacles" in d:
        cfg.static_obstacles = _parse_rects(d["static_obstacles"], "layers.static_obstacles")
    sections = {
        "obstacle": (ObstacleLayerConfig, {"raytrace_range", "obstacle_range"}),
        "voxel": (VoxelLayerConfig, {"z_origin", "z_resolution", "nz", "mark_threshold"}),
        "clearing": (ClearingLayerConfig, {"min_points", "z_min", "z_max"}),
        "inflation": (InflationLayerConfig,
                      {"inscribed_radius", "inflation_radius", "cost_scaling"}),
    }
    for name, (cls, keys) in sections.items():
        if name in d:
            _check_keys(d[name], keys, f"layers.{name}")
            setattr(cfg, name, _build(cls, d[name], f"layers.{name}"))
    return cfg


def _parse_section(d: dict, key: str, cls, keys: set[str]):
    if key not in d:
        return cls()
    _check_keys(d[key], keys, key)
    return _build(cls, d[key], key)


TOP_LEVEL_KEYS = {
    "world", "start", "goal", "lidar", "camera", "noise", "grid", "layers",
    "sync", "sim", "planner", "clearing_enabled", "seed",
}


def scenario_from_dict(doc: dict) -> Scenario:
    _check_keys(doc, TOP_LEVEL_KEYS, "scenario")
    world = _parse_world(_require(doc, "world", "scenario"))

    start_d = _require(doc, "start", "scenario")
    _check_keys(start_d, {"x", "y", "theta"}, "start")
    start = Pose2D(float(_require(start_d, "x", "start")),
                   float(_require(start_d, "y", "start")),
                   float(start_d.get("theta", 0.0)))

    goal = _require(doc, "goal", "scenario")
    if not (isinstance(goal, list) and len(goal) == 2):
        raise InvalidScenarioError("goal must be [x, y]")
    goal = (float(goal[0]), float(goal[1]))

    lidar = _parse_section(doc, "lidar", LidarSpec,
                           {"angle_min", "angle_max", "n_beams", "max_range", "min_range",
                            "height", "forward_offset"})
    camera = _parse_camera(doc.get("camera", {}))
    noise = _parse_section(doc, "noise", NoiseConfig,
                           {"range_sigma", "depth_sigma_rel", "mask_flip_rate"})
    grid = _parse_section(doc, "grid", GridConfig, {"width", "height", "resolution"})
    layers = _parse_layers(doc.get("layers", {}))
    sync = _parse_section(doc, "sync", SyncSettings,
                          {"threshold", "queue_capacity", "stamp_jitter"})
    sim = _parse_section(doc, "sim", SimConfig,
                         {"tick_hz", "robot_speed", "max_ticks", "goal_tolerance",
                          "abort_after_failures"})
    planner = _parse_section(doc, "planner", PlannerConfig,
                             {"cost_weight", "unknown_is_lethal"})

    return _build(
        Scenario, {}, "scenario",
        world=world, start=start, goal=goal, lidar=lidar, camera=camera,
        noise=noise, grid=grid, layers=layers, sync=sync, sim=sim,
        planner=planner,
        clearing_enabled=bool(doc.get("clearing_enabled", True)),
        seed=int(doc.get("seed", 0)),
    )


def load_scenario(path: str | Path) -> Scenario:
    path = Path(path)
    if not path.is_file():
        raise InvalidScenarioError(f"scenario file not found: {path}")
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise InvalidScenarioError(f"{path}: invalid JSON ({exc})") from exc
    return scenario_from_dict(doc)


def scenario_to_dict(s: Scenario) -> dict:
    """Inverse of scenario_from_dict (regions keep their shape kind)."""
    regions = []
    for r in s.world.regions:
        d = {"class": r.cls.value, "height": r.height}
        if isinstance(r.shape, Rect):
            d.update(type="rect", x_min=r.shape.x_min, x_max=r.shape.x_max,
                     y_min=r.shape.y_min, y_max=r.shape.y_max)
        else:
            d.update(type="disc", cx=r.shape.cx, cy=r.shape.cy, radius=r.shape.radius)
        regions.append(d)
    return {
        "world": {"extent": list(s.world.extent), "regions": regions},
        "start": {"x": s.start.x, "y": s.start.y, "theta": s.start.theta},
        "goal": list(s.goal),
        "lidar": {
            "angle_min": s.lidar.angle_min, "angle_max": s.lidar.angle_max,
            "n_beams": s.lidar.n_beams, "max_range": s.lidar.max_range,
            "min_range": s.lidar.min_range, "height": s.lidar.height,
            "forward_offset": s.lidar.forward_offset,
        },
        "camera": {
            "intrinsics": {
                "fx": s.camera.intrinsics.fx, "fy": s.camera.intrinsics.fy,
                "cx": s.camera.intrinsics.cx, "cy": s.camera.intrinsics.cy,
                "width": s.camera.intrinsics.width, "height": s.camera.intrinsics.height,
            },
            "mount": {
                "position": list(map(float, s.camera.mount.position)),
                "pitch": s.camera.mount.pitch, "yaw": s.camera.mount.yaw,
            },
            "max_range": s.camera.max_range,
            "stride": s.camera.stride,
            "render_stride": s.camera.render_stride,
        },
        "noise": {
            "range_sigma": s.noise.range_sigma,
            "depth_sigma_rel": s.noise.depth_sigma_rel,
            "mask_flip_rate": s.noise.mask_flip_rate,
        },
        "grid": {"width": s.grid.width, "height": s.grid.height,
                 "resolution": s.grid.resolution},
        "layers": {
            "static_obstacles": [
                {"x_min": r.x_min, "x_max": r.x_max, "y_min": r.y_min, "y_max": r.y_max}
                for r in s.layers.static_obstacles
            ],
            "obstacle": {"raytrace_range": s.layers.obstacle.raytrace_range,
                         "obstacle_range": s.layers.obstacle.obstacle_range},
            "voxel": {"z_origin": s.layers.voxel.z_origin,
                      "z_resolution": s.layers.voxel.z_resolution,
                      "nz": s.layers.voxel.nz,
                      "mark_threshold": s.layers.voxel.mark_threshold},
            "clearing": {"min_points": s.layers.clearing.min_points,
                         "z_min": s.layers.clearing.z_min,
                         "z_max": s.layers.clearing.z_max},
            "inflation": {"inscribed_radius": s.layers.inflation.inscribed_radius,
                          "inflation_radius": s.layers.inflation.inflation_radius,
                          "cost_scaling": s.layers.inflation.cost_scaling},
        },
        "sync": {"threshold": s.sync.threshold,
                 "queue_capacity": s.sync.queue_capacity,
                 "stamp_jitter": s.sync.stamp_jitter},
        "sim": {"tick_hz": s.sim.tick_hz, "robot_speed": s.sim.robot_speed,
                "max_ticks": s.sim.max_ticks, "goal_tolerance": s.sim.goal_tolerance,
                "abort_after_failures": s.sim.abort_after_failures},
        "planner": {"cost_weight": s.planner.cost_weight,
                    "unknown_is_lethal": s.planner.unknown_is_lethal},
        "clearing_enabled": s.clearing_enabled,
        "seed": s.seed,
    }
