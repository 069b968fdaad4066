"""Cost-aware A* over a cost grid, 8-connected with an octile heuristic.

Edge weight for a step of geometric length L into a cell of cost c:
L + cost_weight * L * (c / 254). Cells at or above INSCRIBED are blocked;
UNKNOWN is blocked or free (cost contribution 0) per configuration. Equal-f
nodes are expanded in row-major cell order, so plans are fully deterministic.

Edge weights are quantized to multiples of 2**-30 m. Partial path sums are
then exact in IEEE-754 (dyadic rationals well inside the 53-bit mantissa), so
the optimal cost is a unique float, independent of expansion order, and can be
compared exactly against an independent shortest-path implementation.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidEndpointError, NoPathError
from .grid import INSCRIBED, UNKNOWN, CellIndex, CostGrid

SQRT2 = math.sqrt(2.0)
_QUANT = 2.0**-30


def quantize_weight(x: float) -> float:
    """Snap an edge weight onto the 2**-30 lattice (exactly representable)."""
    return round(x / _QUANT) * _QUANT


@dataclass
class PlannerConfig:
    cost_weight: float = 0.5
    unknown_is_lethal: bool = True

    def __post_init__(self) -> None:
        if self.cost_weight < 0:
            raise ValueError("cost_weight must be >= 0")


@dataclass
class Path:
    waypoints: list[CellIndex]
    length: float
    cost: float


def path_length(waypoints: list[CellIndex], resolution: float) -> float:
    """Geometric length: resolution per axis step, sqrt(2)*resolution per diagonal."""
    total = 0.0
    for (c0, r0), (c1, r1) in zip(waypoints, waypoints[1:]):
        total += resolution * (SQRT2 if (c0 != c1 and r0 != r1) else 1.0)
    return total


def _traversable(value: int, unknown_is_lethal: bool) -> bool:
    if value == UNKNOWN:
        return not unknown_is_lethal
    return value < INSCRIBED


def plan(
    grid: CostGrid,
    start: CellIndex,
    goal: CellIndex,
    cfg: PlannerConfig | None = None,
) -> Path:
    cfg = cfg or PlannerConfig()
    w, h = grid.width, grid.height
    for name, (col, row) in (("start", start), ("goal", goal)):
        if not grid.in_bounds(col, row):
            raise InvalidEndpointError(f"{name} {col, row} out of bounds")
        if not _traversable(int(grid.cells[row, col]), cfg.unknown_is_lethal):
            raise InvalidEndpointError(f"{name} {col, row} blocked")

    cells = grid.cells.ravel()
    blocked = cells >= INSCRIBED
    if cfg.unknown_is_lethal:
        np.logical_or(blocked, cells == UNKNOWN, out=blocked)
    else:
        blocked &= cells != UNKNOWN
    # per-cell additive penalty factor; UNKNOWN traversed as zero-cost space
    penalty = np.where(cells == UNKNOWN, 0.0, cells / 254.0) * cfg.cost_weight

    res = grid.resolution
    # quantized per-cell edge weights for axis and diagonal entry
    w_axis = np.round(res * (1.0 + penalty) / _QUANT) * _QUANT
    w_diag = np.round(res * SQRT2 * (1.0 + penalty) / _QUANT) * _QUANT
    blocked_list = blocked.tolist()
    axis_list = w_axis.tolist()
    diag_list = w_diag.tolist()

    start_idx = start.row * w + start.col
    goal_idx = goal.row * w + goal.col
    gc, gr = goal.col, goal.row
    h_axis = quantize_weight(res)
    h_diag = quantize_weight(res * SQRT2)

    def heuristic(col: int, row: int) -> float:
        dc = abs(col - gc)
        dr = abs(row - gr)
        lo = dc if dc < dr else dr
        return (dc + dr - 2 * lo) * h_axis + lo * h_diag

    g = np.full(w * h, np.inf)
    parent = np.full(w * h, -1, dtype=np.int64)
    closed = np.zeros(w * h, dtype=bool)
    g[start_idx] = 0.0
    heap = [(heuristic(start.col, start.row), start_idx)]
    moves = [
        (1, 0, False), (-1, 0, False), (0, 1, False), (0, -1, False),
        (1, 1, True), (1, -1, True), (-1, 1, True), (-1, -1, True),
    ]

    push = heapq.heappush
    pop = heapq.heappop
    found = False
    while heap:
        _, idx = pop(heap)
        if closed[idx]:
            continue
        closed[idx] = True
        if idx == goal_idx:
            found = True
            break
        row, col = divmod(idx, w)
        g_here = g[idx]
        for dc, dr, diagonal in moves:
            nc = col + dc
            nr = row + dr
            if nc < 0 or nc >= w or nr < 0 or nr >= h:
                continue
            nidx = nr * w + nc
            if closed[nidx] or blocked_list[nidx]:
                continue
            ng = g_here + (diag_list[nidx] if diagonal else axis_list[nidx])
            if ng < g[nidx]:
                g[nidx] = ng
                parent[nidx] = idx
                push(heap, (ng + heuristic(nc, nr), nidx))
    if not found:
        raise NoPathError(f"no path from {tuple(start)} to {tuple(goal)}")

    waypoints = []
    idx = goal_idx
    while idx != -1:
        row, col = divmod(idx, w)
        waypoints.append(CellIndex(col, row))
        idx = int(parent[idx]) if idx != start_idx else -1
    waypoints.reverse()
    return Path(waypoints, path_length(waypoints, res), float(g[goal_idx]))
