"""2D cost grids: cost-value semantics, world/cell geometry, rolling window.

Cost bytes follow the conventional navigation-stack scale: 0 is free space,
1..252 are inflated (soft) costs, 253 marks cells inside the robot's inscribed
radius of an obstacle, 254 is a lethal obstacle, 255 is unknown.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import OutOfBoundsError

FREE = 0
MAX_INFLATED = 252
INSCRIBED = 253
LETHAL = 254
UNKNOWN = 255


def normalize_angle(theta: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    wrapped = math.fmod(theta + math.pi, 2.0 * math.pi)
    if wrapped <= 0.0:
        wrapped += 2.0 * math.pi
    return wrapped - math.pi


@dataclass
class Pose2D:
    """Planar pose in world coordinates (meters, radians)."""

    x: float = 0.0
    y: float = 0.0
    theta: float = 0.0

    def __post_init__(self) -> None:
        self.theta = normalize_angle(self.theta)


class CellIndex(NamedTuple):
    col: int
    row: int


@dataclass
class CostGrid:
    """Axis-aligned cost grid; ``cells`` is row-major with row 0 at minimum y.

    ``origin`` is the world pose of the corner of cell (0, 0); grids are never
    rotated (origin.theta == 0).
    """

    width: int
    height: int
    resolution: float
    origin: Pose2D
    cells: np.ndarray  # uint8, shape (height, width)

    def __post_init__(self) -> None:
        if self.resolution <= 0:
            raise ValueError(f"resolution must be > 0, got {self.resolution}")
        if self.origin.theta != 0.0:
            raise ValueError("grids are axis-aligned; origin.theta must be 0")
        self.cells = np.asarray(self.cells, dtype=np.uint8)
        if self.cells.shape != (self.height, self.width):
            raise ValueError(
                f"cells shape {self.cells.shape} != (height, width) "
                f"({self.height}, {self.width})"
            )

    @classmethod
    def filled(
        cls,
        width: int,
        height: int,
        resolution: float,
        origin: Pose2D | None = None,
        value: int = UNKNOWN,
    ) -> "CostGrid":
        origin = origin or Pose2D()
        cells = np.full((height, width), value, dtype=np.uint8)
        return cls(width, height, resolution, origin, cells)

    # -- geometry ---------------------------------------------------------

    def in_bounds(self, col: int, row: int) -> bool:
        return 0 <= col < self.width and 0 <= row < self.height

    def world_to_cell(self, x: float, y: float) -> CellIndex:
        """Cell containing world point (x, y); raises OutOfBoundsError."""
        col = math.floor((x - self.origin.x) / self.resolution)
        row = math.floor((y - self.origin.y) / self.resolution)
        if not self.in_bounds(col, row):
            raise OutOfBoundsError(f"point ({x}, {y}) outside grid")
        return CellIndex(col, row)

    def cell_to_world(self, c: CellIndex) -> tuple[float, float]:
        """World coordinates of the center of cell c."""
        col, row = c
        if not self.in_bounds(col, row):
            raise OutOfBoundsError(f"cell {c} outside grid")
        x = self.origin.x + (col + 0.5) * self.resolution
        y = self.origin.y + (row + 0.5) * self.resolution
        return x, y

    def world_to_cells(
        self, xs: np.ndarray, ys: np.ndarray
    ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Vectorized variant: (cols, rows, in_bounds mask), no exception."""
        cols = np.floor((np.asarray(xs) - self.origin.x) / self.resolution).astype(np.int64)
        rows = np.floor((np.asarray(ys) - self.origin.y) / self.resolution).astype(np.int64)
        ok = (cols >= 0) & (cols < self.width) & (rows >= 0) & (rows < self.height)
        return cols, rows, ok

    def copy(self) -> "CostGrid":
        return CostGrid(
            self.width,
            self.height,
            self.resolution,
            Pose2D(self.origin.x, self.origin.y),
            self.cells.copy(),
        )


def _snap(value: float, resolution: float) -> float:
    """Snap a coordinate onto the resolution lattice anchored at the world origin."""
    return round(value / resolution) * resolution


@dataclass
class RollingWindow:
    """Robot-centered costmap window whose origin stays on the cell lattice."""

    grid: CostGrid
    center: Pose2D = field(default_factory=Pose2D)

    @classmethod
    def centered(
        cls,
        width: int,
        height: int,
        resolution: float,
        center: Pose2D,
        value: int = UNKNOWN,
    ) -> "RollingWindow":
        ox = _snap(center.x - width * resolution / 2.0, resolution)
        oy = _snap(center.y - height * resolution / 2.0, resolution)
        grid = CostGrid.filled(width, height, resolution, Pose2D(ox, oy), value)
        return cls(grid=grid, center=Pose2D(center.x, center.y))


def roll_window(window: RollingWindow, new_center: Pose2D) -> RollingWindow:
    """Translate the window to a new center by a whole number of cells.

    Cells still covered keep their values; newly exposed cells are UNKNOWN.
    """
    old = window.grid
    res = old.resolution
    new_ox = _snap(new_center.x - old.width * res / 2.0, res)
    new_oy = _snap(new_center.y - old.height * res / 2.0, res)
    shift_c = round((new_ox - old.origin.x) / res)
    shift_r = round((new_oy - old.origin.y) / res)

    cells = np.full((old.height, old.width), UNKNOWN, dtype=np.uint8)
    # new[r, c] covers the same world cell as old[r + shift_r, c + shift_c]
    c_lo = max(0, -shift_c)
    c_hi = min(old.width, old.width - shift_c)
    r_lo = max(0, -shift_r)
    r_hi = min(old.height, old.height - shift_r)
    if c_lo < c_hi and r_lo < r_hi:
        cells[r_lo:r_hi, c_lo:c_hi] = old.cells[
            r_lo + shift_r : r_hi + shift_r, c_lo + shift_c : c_hi + shift_c
        ]
    grid = CostGrid(old.width, old.height, res, Pose2D(new_ox, new_oy), cells)
    return RollingWindow(grid=grid, center=Pose2D(new_center.x, new_center.y))
