"""Command-line interface: run missions, compare modes, export plot data.

Exit codes: 0 success (confidence termination for `run`), 1 usage or
configuration error, 2 timeout termination, 3 internal fault.
"""

from __future__ import annotations

import argparse
import sys
import traceback
from pathlib import Path

import numpy as np

from .configfile import ConfigError, load_config
from .mission import TERMINATION_CONFIDENCE, compare_modes, run
from .runio import (
    ESTIMATES_CSV,
    SUMMARY_TXT,
    TRAJECTORY_CSV,
    load_final_density,
    read_table,
    write_comparison_artifacts,
    write_run_artifacts,
)

__all__ = ["main", "cmd_run", "cmd_compare", "cmd_plotdata"]

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_TIMEOUT = 2
EXIT_FAULT = 3

PATH_DAT = "path.dat"
ERROR_DAT = "error.dat"
DENSITY_DAT = "density.dat"
DENSITY_EXPORT_POINTS = 200


def cmd_run(config_path, out_dir) -> int:
    """Execute one mission and write its artifact set."""
    try:
        config = load_config(config_path)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        log = run(config)
        write_run_artifacts(log, out_dir)
    except Exception:
        traceback.print_exc()
        return EXIT_FAULT
    return EXIT_OK if log.termination[0] == TERMINATION_CONFIDENCE else EXIT_TIMEOUT


def cmd_compare(config_path, seeds, out_dir, workers: int = 1) -> int:
    """Run the paired with/without-information comparison over seeds."""
    try:
        config = load_config(config_path)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if len(seeds) < 1:
        print("at least one seed is required", file=sys.stderr)
        return EXIT_CONFIG
    try:
        summary = compare_modes(config, seeds, workers=workers)
        write_comparison_artifacts(summary, config, out_dir)
    except Exception:
        traceback.print_exc()
        return EXIT_FAULT
    return EXIT_OK


def _write_dat(path: Path, comment_lines, header_cols, rows) -> None:
    lines = [f"# {c}" for c in comment_lines]
    lines.append("# " + " ".join(header_cols))
    for row in rows:
        lines.append(" ".join(repr(float(v)) for v in row))
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text("\n".join(lines) + "\n", encoding="utf-8")
    tmp.replace(path)


def cmd_plotdata(run_dir) -> int:
    """Export gnuplot-ready data files from a completed run directory."""
    run_dir = Path(run_dir)
    needed = [run_dir / name for name in (TRAJECTORY_CSV, ESTIMATES_CSV, SUMMARY_TXT)]
    missing = [str(p) for p in needed if not p.exists()]
    if missing:
        print(f"missing artifacts: {', '.join(missing)}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        config = load_config(run_dir / "config_echo.cfg")
        tx, ty = config.target_pos

        track = read_table(run_dir / TRAJECTORY_CSV)
        _write_dat(
            run_dir / PATH_DAT,
            ["vehicle path with target marker", f"target = {tx!r} {ty!r}"],
            ["t", "x", "y", "target_x", "target_y"],
            zip(track["t"], track["x"], track["y"],
                np.full_like(track["t"], tx), np.full_like(track["t"], ty)),
        )

        est = read_table(run_dir / ESTIMATES_CSV)
        _write_dat(
            run_dir / ERROR_DAT,
            ["estimation error over time"],
            ["t", "err"],
            zip(est["t"], est["err"]),
        )

        cdf_x, pdf_x, cdf_y, pdf_y = load_final_density(run_dir)
        zz = np.linspace(config.zeta_min, config.zeta_max, DENSITY_EXPORT_POINTS)
        _write_dat(
            run_dir / DENSITY_DAT,
            ["final smoothed CDF/PDF per axis", f"target = {tx!r} {ty!r}"],
            ["zeta", "cdf_x", "pdf_x", "cdf_y", "pdf_y"],
            zip(zz, cdf_x(zz), pdf_x(zz), cdf_y(zz), pdf_y(zz)),
        )
    except Exception:
        traceback.print_exc()
        return EXIT_FAULT
    return EXIT_OK


def _parse_seeds(raw: str) -> list[int]:
    try:
        return [int(part) for part in raw.split(",") if part.strip() != ""]
    except ValueError:
        raise argparse.ArgumentTypeError(f"seeds must be comma-separated integers, got {raw!r}")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="bernloc",
        description="Range-only beacon localization missions with replanned trajectories.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one mission and write artifacts")
    p_run.add_argument("config", help="mission configuration file")
    p_run.add_argument("out_dir", help="output directory for artifacts")

    p_cmp = sub.add_parser("compare", help="paired with/without-information comparison")
    p_cmp.add_argument("config", help="mission configuration file")
    p_cmp.add_argument("out_dir", help="output directory for artifacts")
    p_cmp.add_argument("--seeds", type=_parse_seeds, default=list(range(20)),
                       help="comma-separated seeds (default 0..19)")
    p_cmp.add_argument("--workers", type=int, default=1,
                       help="parallel mission workers (default 1)")

    p_plot = sub.add_parser("plotdata", help="export gnuplot data files from a run dir")
    p_plot.add_argument("run_dir", help="directory written by `bernloc run`")

    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code not in (0, None) else EXIT_OK

    if args.command == "run":
        return cmd_run(args.config, args.out_dir)
    if args.command == "compare":
        return cmd_compare(args.config, args.seeds, args.out_dir, workers=args.workers)
    return cmd_plotdata(args.run_dir)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
