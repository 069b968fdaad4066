"""Command-line interface: run, compare, render, report.

Exit codes for `run`: 0 on Reached, 2 on NoPathAbort, 3 on Timeout, 1 on any
usage or configuration error. `compare` exits 0 when both runs complete.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import runner
from .errors import GrassnavError
from .netpbm import read_pgm, write_pgm8
from .scenario import load_scenario
from .viz import render_run_report, save_snapshot_ppm

EXIT_BY_OUTCOME = {
    runner.OUTCOME_REACHED: 0,
    runner.OUTCOME_NO_PATH: 2,
    runner.OUTCOME_TIMEOUT: 3,
}


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage problems exit 1, not argparse's 2
        raise _UsageError(message)


def canonical_json(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


class _SnapshotWriter:
    """Observer that streams path.csv rows and periodic snapshots to disk."""

    def __init__(self, out_dir: Path, every: int) -> None:
        self.out_dir = out_dir
        self.every = max(1, every)
        self.path_rows: list[str] = ["tick,x,y"]
        self.last_written_tick = -1
        self.last_record = None

    def __call__(self, record: runner.TickRecord) -> None:
        self.path_rows.append(f"{record.tick},{record.pose.x!r},{record.pose.y!r}")
        self.last_record = record
        if record.tick % self.every == 0:
            self._write_snapshot(record)

    def _write_snapshot(self, record: runner.TickRecord) -> None:
        grid = record.snapshot
        stem = self.out_dir / f"tick_{record.tick:06d}"
        write_pgm8(stem.with_suffix(".pgm"), grid.cells)
        try:
            robot_cell = grid.world_to_cell(record.pose.x, record.pose.y)
        except GrassnavError:
            robot_cell = None
        save_snapshot_ppm(stem.with_suffix(".ppm"), grid.cells,
                          record.cleared_cells, robot_cell)
        self.last_written_tick = record.tick

    def finish(self) -> None:
        if self.last_record is not None and self.last_record.tick != self.last_written_tick:
            self._write_snapshot(self.last_record)
        (self.out_dir / "path.csv").write_text("\n".join(self.path_rows) + "\n")


def _load_with_overrides(args) -> runner.Scenario:
    scenario = load_scenario(args.scenario)
    if getattr(args, "seed", None) is not None:
        scenario.seed = args.seed
    if getattr(args, "no_clearing", False):
        scenario.clearing_enabled = False
    return scenario


def cmd_run(args) -> int:
    scenario = _load_with_overrides(args)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    writer = _SnapshotWriter(out_dir, args.snapshot_every)
    metrics = runner.run(scenario, observer=writer)
    writer.finish()
    doc = runner.metrics_to_dict(metrics, include_timing=not args.no_timings)
    (out_dir / "metrics.json").write_text(canonical_json(doc))
    print(f"outcome={metrics.outcome} traveled={metrics.traveled_length:.3f} m "
          f"ticks={metrics.ticks} cleared={metrics.cells_cleared_total}")
    return EXIT_BY_OUTCOME[metrics.outcome]


def cmd_compare(args) -> int:
    scenario = _load_with_overrides(args)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    with_metrics, without_metrics = runner.compare(scenario)
    ratio = None
    if without_metrics.traveled_length > 0:
        ratio = with_metrics.traveled_length / without_metrics.traveled_length
    doc = {
        "with_clearing": runner.metrics_to_dict(with_metrics, not args.no_timings),
        "without_clearing": runner.metrics_to_dict(without_metrics, not args.no_timings),
        "traveled_ratio": ratio,
    }
    (out_dir / "compare.json").write_text(canonical_json(doc))
    print(f"with={with_metrics.outcome}/{with_metrics.traveled_length:.3f} m "
          f"without={without_metrics.outcome}/{without_metrics.traveled_length:.3f} m "
          f"ratio={'n/a' if ratio is None else f'{ratio:.3f}'}")
    return 0


def _read_cleared_file(path: Path) -> np.ndarray:
    cells = []
    for i, line in enumerate(path.read_text().splitlines()):
        line = line.strip()
        if not line:
            continue
        parts = line.split(",")
        if len(parts) != 2:
            raise ValueError(f"{path}:{i + 1}: expected 'col,row'")
        cells.append((int(parts[0]), int(parts[1])))
    return np.asarray(cells, dtype=np.int64).reshape(-1, 2)


def cmd_render(args) -> int:
    cells = read_pgm(args.pgm)
    if cells.dtype != np.uint8:
        raise ValueError("costmap PGM must be 8-bit")
    cleared = _read_cleared_file(Path(args.cleared)) if args.cleared else None
    out = Path(args.out) if args.out else Path(args.pgm).with_suffix(".ppm")
    save_snapshot_ppm(out, cells, cleared)
    print(f"wrote {out}")
    return 0


def cmd_report(args) -> int:
    written = render_run_report(args.run, args.out)
    for path in written:
        print(f"wrote {path}")
    if not written:
        print("nothing to report (no run outputs found)", file=sys.stderr)
        return 1
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="grassnav", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute one scenario")
    p_run.add_argument("--scenario", required=True, help="scenario JSON path")
    p_run.add_argument("--out", default="out", help="output directory")
    p_run.add_argument("--seed", type=int, default=None, help="override scenario seed")
    p_run.add_argument("--no-clearing", action="store_true",
                       help="disable the clearing layer regardless of the scenario")
    p_run.add_argument("--snapshot-every", type=int, default=10, metavar="K",
                       help="write costmap snapshots every K ticks")
    p_run.add_argument("--no-timings", action="store_true",
                       help="omit wall-clock timing from metrics.json")
    p_run.set_defaults(func=cmd_run)

    p_cmp = sub.add_parser("compare", help="run with and without the clearing layer")
    p_cmp.add_argument("--scenario", required=True)
    p_cmp.add_argument("--out", default="out")
    p_cmp.add_argument("--seed", type=int, default=None)
    p_cmp.add_argument("--no-timings", action="store_true")
    p_cmp.set_defaults(func=cmd_compare)

    p_render = sub.add_parser("render", help="colorize a costmap PGM into a PPM")
    p_render.add_argument("--pgm", required=True, help="raw costmap PGM path")
    p_render.add_argument("--cleared", default=None,
                          help="text file of 'col,row' cells to paint green")
    p_render.add_argument("--out", default=None, help="output PPM path")
    p_render.set_defaults(func=cmd_render)

    p_report = sub.add_parser("report", help="render matplotlib figures for a run")
    p_report.add_argument("--run", required=True, help="run/compare output directory")
    p_report.add_argument("--out", default=None, help="figure output directory")
    p_report.set_defaults(func=cmd_report)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (GrassnavError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
