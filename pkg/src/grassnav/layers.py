"""The layered costmap: layer contract, stock layers, traversability clearing.

Each update cycle rolls the master window to the robot, resets it to UNKNOWN,
and applies the enabled layers in order. The canonical order is
[static, obstacle, voxel, clearing, inflation]: the clearing layer must see the
marks produced by the range-sensor layers, and inflation must run last so
cleared cells still pick up the safety margin of remaining true obstacles.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import distance_transform_edt

from .camera import Frame, LabeledCloud, SegClass
from .errors import SensorOutsideWindowError
from .grid import (
    FREE,
    INSCRIBED,
    LETHAL,
    UNKNOWN,
    CostGrid,
    Pose2D,
    RollingWindow,
    roll_window,
)
from .world import RangeScan


@dataclass
class TickInputs:
    """Per-cycle sensor inputs handed to every layer."""

    robot: Pose2D
    scan: RangeScan | None = None
    sensor_pose: Pose2D | None = None
    cloud: LabeledCloud | None = None  # merged labeled cloud, world frame


class Layer:
    """A producer of cost information applied to the master grid each cycle."""

    name = "layer"

    def __init__(self, enabled: bool = True) -> None:
        self.enabled = enabled

    def update(self, master: CostGrid, inputs: TickInputs) -> None:
        raise NotImplementedError


class StaticLayer(Layer):
    """Stamps lethal cells from an immutable reference grid of known obstacles."""

    name = "static"

    def __init__(self, reference: CostGrid, enabled: bool = True) -> None:
        super().__init__(enabled)
        self.reference = reference

    def update(self, master: CostGrid, inputs: TickInputs) -> None:
        self.apply(master)

    def apply(self, master: CostGrid) -> None:
        xs = master.origin.x + (np.arange(master.width) + 0.5) * master.resolution
        ys = master.origin.y + (np.arange(master.height) + 0.5) * master.resolution
        xx, yy = np.meshgrid(xs, ys)
        cols, rows, ok = self.reference.world_to_cells(xx.ravel(), yy.ravel())
        lethal = np.zeros(master.height * master.width, dtype=bool)
        lethal[ok] = self.reference.cells[rows[ok], cols[ok]] == LETHAL
        master.cells.ravel()[lethal] = LETHAL


def _bresenham_lines(c0: int, r0: int, c1: np.ndarray, r1: np.ndarray):
    """Vectorized Bresenham chains from one cell to many.

    Returns (cols, rows, on_chain) matrices of shape (n_lines, max_len);
    on_chain marks entries that belong to each line (inclusive endpoints).
    """
    dc = c1 - c0
    dr = r1 - r0
    adc, adr = np.abs(dc), np.abs(dr)
    sc, sr = np.sign(dc), np.sign(dr)
    major = np.maximum(adc, adr)
    minor = np.minimum(adc, adr)
    ks = np.arange(int(major.max()) + 1)
    on_chain = ks[None, :] <= major[:, None]
    denom = 2 * np.maximum(major, 1)
    off = (2 * minor[:, None] * ks[None, :] + major[:, None]) // denom[:, None]
    x_major = (adc >= adr)[:, None]
    cols = c0 + np.where(x_major, sc[:, None] * ks[None, :], sc[:, None] * off)
    rows = r0 + np.where(x_major, sr[:, None] * off, sr[:, None] * ks[None, :])
    return cols, rows, on_chain


class ObstacleLayer(Layer):
    """Marks lidar returns lethal and raytraces free space along each beam."""

    name = "obstacle"

    def __init__(
        self,
        raytrace_range: float = 12.0,
        obstacle_range: float = 12.0,
        enabled: bool = True,
    ) -> None:
        super().__init__(enabled)
        self.raytrace_range = raytrace_range
        self.obstacle_range = obstacle_range

    def update(self, master: CostGrid, inputs: TickInputs) -> None:
        if inputs.scan is not None:
            pose = inputs.sensor_pose or inputs.robot
            self.apply_scan(master, inputs.scan, pose)

    def apply_scan(self, master: CostGrid, scan: RangeScan, sensor: Pose2D) -> None:
        res = master.resolution
        c0 = int(np.floor((sensor.x - master.origin.x) / res))
        r0 = int(np.floor((sensor.y - master.origin.y) / res))
        if not master.in_bounds(c0, r0):
            raise SensorOutsideWindowError(f"sensor cell ({c0}, {r0})")

        step = (scan.angle_max - scan.angle_min) / scan.n_beams
        angles = sensor.theta + scan.angle_min + np.arange(scan.n_beams) * step
        cos_a, sin_a = np.cos(angles), np.sin(angles)
        is_return = scan.ranges < scan.max_range

        clear_dist = np.where(
            is_return, np.minimum(scan.ranges, self.raytrace_range), self.raytrace_range
        )
        end_c = np.floor((sensor.x + clear_dist * cos_a - master.origin.x) / res).astype(np.int64)
        end_r = np.floor((sensor.y + clear_dist * sin_a - master.origin.y) / res).astype(np.int64)
        cols, rows, on_chain = _bresenham_lines(c0, r0, end_c, end_r)
        inb = (cols >= 0) & (cols < master.width) & (rows >= 0) & (rows < master.height)
        # clear only the contiguous in-window prefix of each valid beam
        traced = np.logical_and.accumulate(on_chain & inb, axis=1)
        traced &= scan.valid[:, None]
        idx = (rows * master.width + cols)[traced]
        flat = master.cells.ravel()
        sel = idx[flat[idx] != LETHAL]
        flat[sel] = FREE

        mark = is_return & scan.valid & (scan.ranges <= self.obstacle_range)
        mark_c = np.floor((sensor.x + scan.ranges * cos_a - master.origin.x) / res).astype(np.int64)
        mark_r = np.floor((sensor.y + scan.ranges * sin_a - master.origin.y) / res).astype(np.int64)
        ok = mark & (mark_c >= 0) & (mark_c < master.width) & (mark_r >= 0) & (mark_r < master.height)
        master.cells[mark_r[ok], mark_c[ok]] = LETHAL


class VoxelLayer(Layer):
    """Projects obstacle-class points into vertical voxel columns."""

    name = "voxel"

    def __init__(
        self,
        z_origin: float = 0.0,
        z_resolution: float = 0.125,
        nz: int = 16,
        mark_threshold: int = 1,
        enabled: bool = True,
    ) -> None:
        super().__init__(enabled)
        if not 1 <= nz <= 16:
            raise ValueError("nz must be in [1, 16]")
        if mark_threshold < 1:
            raise ValueError("mark_threshold must be >= 1")
        self.z_origin = z_origin
        self.z_resolution = z_resolution
        self.nz = nz
        self.mark_threshold = mark_threshold

    def update(self, master: CostGrid, inputs: TickInputs) -> None:
        if inputs.cloud is not None:
            self.apply_cloud(master, inputs.cloud)

    def apply_cloud(self, master: CostGrid, cloud: LabeledCloud) -> None:
        if len(cloud) == 0:
            return
        pts = cloud.points
        zi = np.floor((pts[:, 2] - self.z_origin) / self.z_resolution).astype(np.int64)
        sel = (cloud.classes == int(SegClass.OBSTACLE)) & (zi >= 0) & (zi < self.nz)
        if not sel.any():
            return
        cols, rows, ok = master.world_to_cells(pts[sel, 0], pts[sel, 1])
        zi = zi[sel][ok]
        bits = np.zeros((master.height, master.width), dtype=np.uint16)
        np.bitwise_or.at(bits, (rows[ok], cols[ok]), (1 << zi).astype(np.uint16))
        columns = np.bitwise_count(bits) >= self.mark_threshold
        master.cells[columns] = LETHAL


class ClearingLayer(Layer):
    """Frees cells covered by enough vision-classified traversable points.

    A cell that also received an obstacle-class point inside the z band this
    cycle is never cleared (safety override on contradictory evidence).
    Qualifying UNKNOWN cells are set free too (positive evidence), but the
    cleared counter reports only cells whose known cost dropped to FREE, i.e.
    obstacles actually removed from the map.
    """

    name = "clearing"

    def __init__(
        self,
        min_points: int = 1,
        z_min: float = -0.1,
        z_max: float = 1.0,
        enabled: bool = True,
    ) -> None:
        super().__init__(enabled)
        if min_points < 1:
            raise ValueError("min_points must be >= 1")
        self.min_points = min_points
        self.z_min = z_min
        self.z_max = z_max
        self.last_cleared_count = 0
        self.last_cleared_cells = np.zeros((0, 2), dtype=np.int64)  # (col, row)

    def update(self, master: CostGrid, inputs: TickInputs) -> None:
        if inputs.cloud is not None:
            self.apply_cloud(master, inputs.cloud)
        else:
            self.last_cleared_count = 0
            self.last_cleared_cells = np.zeros((0, 2), dtype=np.int64)

    def apply_cloud(self, master: CostGrid, cloud: LabeledCloud) -> int:
        counts = np.zeros((master.height, master.width), dtype=np.int64)
        veto = np.zeros((master.height, master.width), dtype=bool)
        if len(cloud):
            pts = cloud.points
            band = (pts[:, 2] >= self.z_min) & (pts[:, 2] <= self.z_max)
            cols, rows, ok = master.world_to_cells(pts[:, 0], pts[:, 1])
            trav = band & ok & (cloud.classes == int(SegClass.TRAVERSABLE))
            obst = band & ok & (cloud.classes == int(SegClass.OBSTACLE))
            np.add.at(counts, (rows[trav], cols[trav]), 1)
            veto[rows[obst], cols[obst]] = True
        clear = (counts >= self.min_points) & ~veto
        changed = clear & (master.cells > FREE) & (master.cells != UNKNOWN)
        rr, cc = np.nonzero(changed)
        master.cells[clear] = FREE
        self.last_cleared_count = int(changed.sum())
        self.last_cleared_cells = np.column_stack([cc, rr]).astype(np.int64)
        return self.last_cleared_count


class InflationLayer(Layer):
    """Spreads exponentially decaying cost outward from lethal cells."""

    name = "inflation"

    def __init__(
        self,
        inscribed_radius: float = 0.3,
        inflation_radius: float = 0.7,
        cost_scaling: float = 10.0,
        enabled: bool = True,
    ) -> None:
        super().__init__(enabled)
        if not inflation_radius >= inscribed_radius > 0:
            raise ValueError("need inflation_radius >= inscribed_radius > 0")
        self.inscribed_radius = inscribed_radius
        self.inflation_radius = inflation_radius
        self.cost_scaling = cost_scaling

    def update(self, master: CostGrid, inputs: TickInputs) -> None:
        self.apply(master)

    def apply(self, master: CostGrid) -> None:
        lethal = master.cells == LETHAL
        if not lethal.any():
            return
        nearest = distance_transform_edt(
            ~lethal, return_distances=False, return_indices=True
        )
        rr, cc = np.indices(master.cells.shape)
        sq = (rr - nearest[0]) ** 2 + (cc - nearest[1]) ** 2
        d = np.sqrt(sq.astype(np.float64)) * master.resolution

        vals = master.cells
        decay = np.floor(
            252.0 * np.exp(-self.cost_scaling * (d - self.inscribed_radius))
        ).astype(np.uint8)
        out = np.where(
            d <= self.inscribed_radius,
            np.maximum(vals, np.uint8(INSCRIBED)),
            np.where(d <= self.inflation_radius, np.maximum(vals, decay), vals),
        )
        master.cells[:, :] = out


def _merge_clouds(*clouds: LabeledCloud | None) -> LabeledCloud | None:
    present = [c for c in clouds if c is not None and len(c)]
    if not present:
        return None
    for c in present:
        if c.frame is not Frame.WORLD:
            raise ValueError("layer inputs must be world-frame clouds")
    if len(present) == 1:
        return present[0]
    return LabeledCloud(
        present[0].stamp,
        Frame.WORLD,
        np.vstack([c.points for c in present]),
        np.concatenate([c.classes for c in present]),
    )


class LayerStack:
    """Ordered layers combined into the rolling master grid each cycle."""

    def __init__(
        self,
        window: RollingWindow,
        layers: list[Layer],
        enforce_order: bool = True,
    ) -> None:
        if enforce_order:
            kinds = [type(l) for l in layers]
            if ClearingLayer in kinds:
                ci = kinds.index(ClearingLayer)
                if VoxelLayer in kinds and kinds.index(VoxelLayer) > ci:
                    raise ValueError("clearing layer must come after the voxel layer")
                if InflationLayer in kinds and kinds.index(InflationLayer) < ci:
                    raise ValueError("clearing layer must come before inflation")
        self.window = window
        self.layers = layers

    def layer(self, name: str) -> Layer | None:
        for l in self.layers:
            if l.name == name:
                return l
        return None

    def update(
        self,
        robot: Pose2D,
        scan: RangeScan | None = None,
        obstacle_cloud: LabeledCloud | None = None,
        traversable_cloud: LabeledCloud | None = None,
        sensor_pose: Pose2D | None = None,
    ) -> CostGrid:
        """Roll to the robot, rebuild the master from this cycle's inputs."""
        self.window = roll_window(self.window, robot)
        master = self.window.grid
        master.cells.fill(UNKNOWN)
        inputs = TickInputs(
            robot=robot,
            scan=scan,
            sensor_pose=sensor_pose or robot,
            cloud=_merge_clouds(obstacle_cloud, traversable_cloud),
        )
        for layer in self.layers:
            if layer.enabled:
                layer.update(master, inputs)
        return master.copy()


def standard_stack(
    window: RollingWindow,
    static_reference: CostGrid | None = None,
    obstacle: ObstacleLayer | None = None,
    voxel: VoxelLayer | None = None,
    clearing: ClearingLayer | None = None,
    inflation: InflationLayer | None = None,
) -> LayerStack:
    """Build the canonical stack order with default layers where not given."""
    layers: list[Layer] = []
    if static_reference is not None:
        layers.append(StaticLayer(static_reference))
    layers.append(obstacle or ObstacleLayer())
    layers.append(voxel or VoxelLayer())
    layers.append(clearing or ClearingLayer())
    layers.append(inflation or InflationLayer())
    return LayerStack(window, layers)
