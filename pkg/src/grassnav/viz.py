"""Costmap colorization and report figures.

Color semantics for snapshot images: lethal cells red, inflated/inscribed
yellow, cells cleared this cycle green (wins over red), free white, unknown
gray, robot cell blue (wins over everything). PPM files put grid row 0 at the
bottom of the image.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .grid import FREE, LETHAL, UNKNOWN
from .netpbm import read_ppm, write_ppm

COLOR_FREE = (255, 255, 255)
COLOR_UNKNOWN = (128, 128, 128)
COLOR_LETHAL = (255, 0, 0)
COLOR_INFLATED = (255, 255, 0)
COLOR_CLEARED = (0, 255, 0)
COLOR_ROBOT = (0, 0, 255)


def colorize_costmap(
    cells: np.ndarray,
    cleared_cells: np.ndarray | None = None,
    robot_cell: tuple[int, int] | None = None,
) -> np.ndarray:
    """RGB image (same row order as the grid) from raw cost bytes."""
    cells = np.asarray(cells, dtype=np.uint8)
    rgb = np.empty(cells.shape + (3,), dtype=np.uint8)
    rgb[:, :] = COLOR_INFLATED  # covers 1..252 and INSCRIBED
    rgb[cells == FREE] = COLOR_FREE
    rgb[cells == UNKNOWN] = COLOR_UNKNOWN
    rgb[cells == LETHAL] = COLOR_LETHAL
    if cleared_cells is not None and len(cleared_cells):
        cc = np.asarray(cleared_cells, dtype=np.int64)
        ok = (
            (cc[:, 0] >= 0) & (cc[:, 0] < cells.shape[1])
            & (cc[:, 1] >= 0) & (cc[:, 1] < cells.shape[0])
        )
        rgb[cc[ok, 1], cc[ok, 0]] = COLOR_CLEARED
    if robot_cell is not None:
        col, row = robot_cell
        if 0 <= col < cells.shape[1] and 0 <= row < cells.shape[0]:
            rgb[row, col] = COLOR_ROBOT
    return rgb


def save_snapshot_ppm(
    path,
    cells: np.ndarray,
    cleared_cells: np.ndarray | None = None,
    robot_cell: tuple[int, int] | None = None,
) -> None:
    rgb = colorize_costmap(cells, cleared_cells, robot_cell)
    write_ppm(path, rgb[::-1])  # grid row 0 at image bottom


def _save(fig, path: Path) -> Path:
    fig.savefig(path, dpi=120, bbox_inches="tight")
    plt.close(fig)
    return path


def render_run_report(run_dir: str | Path, out_dir: str | Path | None = None) -> list[Path]:
    """Render figures for a cmd_run or cmd_compare output directory."""
    run_dir = Path(run_dir)
    out_dir = Path(out_dir) if out_dir is not None else run_dir
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    path_csv = run_dir / "path.csv"
    if path_csv.is_file():
        with open(path_csv) as f:
            rows = list(csv.DictReader(f))
        if rows:
            xs = [float(r["x"]) for r in rows]
            ys = [float(r["y"]) for r in rows]
            fig, ax = plt.subplots(figsize=(6, 6))
            ax.plot(xs, ys, "-", color="tab:blue", lw=1.5)
            ax.plot(xs[0], ys[0], "go", label="start")
            ax.plot(xs[-1], ys[-1], "r*", ms=12, label="end")
            ax.set_xlabel("x [m]")
            ax.set_ylabel("y [m]")
            ax.set_aspect("equal")
            ax.grid(True, alpha=0.3)
            ax.legend()
            ax.set_title("traveled path")
            written.append(_save(fig, out_dir / "trajectory.png"))

    snapshots = sorted(run_dir.glob("tick_*.ppm"))
    if snapshots:
        rgb = read_ppm(snapshots[-1])
        fig, ax = plt.subplots(figsize=(6, 6))
        ax.imshow(rgb, origin="upper", interpolation="nearest")
        ax.set_title(f"final costmap ({snapshots[-1].name})")
        ax.set_xticks([])
        ax.set_yticks([])
        written.append(_save(fig, out_dir / "costmap_final.png"))

    metrics_path = run_dir / "metrics.json"
    if metrics_path.is_file():
        metrics = json.loads(metrics_path.read_text())
        timing = metrics.get("timing")
        if timing and timing.get("per_tick_s"):
            ms = np.asarray(timing["per_tick_s"]) * 1000.0
            fig, ax = plt.subplots(figsize=(7, 3.5))
            ax.plot(ms, lw=0.8, color="tab:gray")
            ax.axhline(timing["p50_ms"], color="tab:blue", label=f"p50 = {timing['p50_ms']:.1f} ms")
            ax.axhline(timing["p95_ms"], color="tab:orange", label=f"p95 = {timing['p95_ms']:.1f} ms")
            ax.set_xlabel("tick")
            ax.set_ylabel("pipeline time [ms]")
            ax.legend()
            ax.grid(True, alpha=0.3)
            written.append(_save(fig, out_dir / "cycle_times.png"))

    compare_path = run_dir / "compare.json"
    if compare_path.is_file():
        doc = json.loads(compare_path.read_text())
        names = ["with clearing", "without clearing"]
        runs = [doc["with_clearing"], doc["without_clearing"]]
        lengths = [r["traveled_length"] for r in runs]
        fig, ax = plt.subplots(figsize=(5, 4))
        bars = ax.bar(names, lengths, color=["tab:green", "tab:red"])
        for bar, r in zip(bars, runs):
            ax.text(bar.get_x() + bar.get_width() / 2, bar.get_height(),
                    r["outcome"], ha="center", va="bottom")
        ax.set_ylabel("traveled length [m]")
        ratio = doc.get("traveled_ratio")
        if ratio is not None:
            ax.set_title(f"traveled ratio (with/without) = {ratio:.3f}")
        written.append(_save(fig, out_dir / "compare_summary.png"))

    return written
