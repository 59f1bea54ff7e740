"""Mission artifact files: CSV tables, density snapshots, summary documents.

All files are written atomically (write to a temp name, then rename) so
a failed command never leaves a partial artifact behind.  Floats are
serialized with shortest round-trip repr, which makes artifacts
byte-identical across repeated runs of the same configuration.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .bernstein import BernsteinPoly
from .configfile import config_hash, format_config
from .mission import ComparisonSummary, MissionConfig, MissionLog

__all__ = [
    "RunArtifacts",
    "write_run_artifacts",
    "write_comparison_artifacts",
    "read_table",
    "read_summary",
    "load_final_density",
]

CONFIG_ECHO = "config_echo.cfg"
MEASUREMENTS_CSV = "measurements.csv"
ESTIMATES_CSV = "estimates.csv"
TRAJECTORY_CSV = "trajectory.csv"
PLANS_CSV = "plans.csv"
PLAN_COEFFS_CSV = "plan_coeffs.csv"
DENSITY_COEFFS_CSV = "density_coeffs.csv"
SUMMARY_TXT = "summary.txt"

RUN_FILES = (
    CONFIG_ECHO,
    MEASUREMENTS_CSV,
    ESTIMATES_CSV,
    TRAJECTORY_CSV,
    PLANS_CSV,
    PLAN_COEFFS_CSV,
    DENSITY_COEFFS_CSV,
    SUMMARY_TXT,
)


@dataclass(frozen=True)
class RunArtifacts:
    out_dir: Path
    paths: dict
    config_hash: str


def _fmt(value) -> str:
    if isinstance(value, bool) or isinstance(value, np.bool_):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, str):
        return value
    return repr(float(value))


def _atomic_write(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _write_csv(path: Path, header: list[str], rows) -> None:
    lines = [",".join(header)]
    lines += [",".join(_fmt(cell) for cell in row) for row in rows]
    _atomic_write(path, "\n".join(lines) + "\n")


def write_run_artifacts(log: MissionLog, out_dir) -> RunArtifacts:
    """Write the full artifact set for one mission run."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    digest = config_hash(log.config)
    paths = {name: out_dir / name for name in RUN_FILES}

    _atomic_write(paths[CONFIG_ECHO], format_config(log.config))

    _write_csv(
        paths[MEASUREMENTS_CSV],
        ["t", "range", "true_range", "veh_x", "veh_y"],
        (
            (m.t, m.range, m.true_range, m.vehicle_pos[0], m.vehicle_pos[1])
            for m in log.measurements
        ),
    )
    _write_csv(
        paths[ESTIMATES_CSV],
        ["t", "xhat", "yhat", "err", "residual_rms", "sigma_x", "sigma_y"],
        (
            (e.t, e.p_hat[0], e.p_hat[1], e.err, e.residual_rms, e.sigma_x, e.sigma_y)
            for e in log.estimates
        ),
    )
    _write_csv(paths[TRAJECTORY_CSV], ["t", "x", "y", "vx", "vy"], log.track)
    _write_csv(
        paths[PLANS_CSV],
        ["t_i", "t_f", "fault", "cost_time", "cost_effort", "cost_terminal",
         "cost_information", "objective"],
        (
            (
                p.t_i,
                p.poly.tf if p.poly is not None else float("nan"),
                p.fault,
                p.cost_breakdown.get("time", float("nan")),
                p.cost_breakdown.get("effort", float("nan")),
                p.cost_breakdown.get("terminal", float("nan")),
                p.cost_breakdown.get("information", float("nan")),
                p.cost_breakdown.get("objective", float("nan")),
            )
            for p in log.plans
        ),
    )
    _write_csv(
        paths[PLAN_COEFFS_CSV],
        ["t_i", "j", "cx", "cy"],
        (
            (p.t_i, j, c[0], c[1])
            for p in log.plans
            if p.poly is not None
            for j, c in enumerate(p.poly.coeffs)
        ),
    )
    _write_csv(
        paths[DENSITY_COEFFS_CSV],
        ["t", "axis", "j", "coeff"],
        (
            (t, axis, j, c)
            for t, density in log.densities
            for axis, poly in (("x", density.cdf_x), ("y", density.cdf_y))
            for j, c in enumerate(poly.coeffs)
        ),
    )

    last = log.estimates[-1] if log.estimates else None
    summary_lines = [
        f"config_hash: {digest}",
        f"termination: {log.termination[0]}",
        f"termination_time_s: {_fmt(log.termination[1])}",
        f"final_error_m: {_fmt(log.final_error)}",
        f"time_avg_error_m: {_fmt(log.time_averaged_error())}",
        f"n_measurements: {len(log.measurements)}",
        f"n_estimates: {len(log.estimates)}",
        f"n_plans: {len(log.plans)}",
        f"n_plan_faults: {sum(1 for p in log.plans if p.fault)}",
        f"final_sigma_x_m: {_fmt(last.sigma_x) if last else 'nan'}",
        f"final_sigma_y_m: {_fmt(last.sigma_y) if last else 'nan'}",
        f"final_raw_sigma_x_m: {_fmt(last.raw_sigma_x) if last else 'nan'}",
        f"final_raw_sigma_y_m: {_fmt(last.raw_sigma_y) if last else 'nan'}",
    ]
    summary_lines += [f"file_{name.split('.')[0]}: {name}" for name in RUN_FILES if name != SUMMARY_TXT]
    _atomic_write(paths[SUMMARY_TXT], "\n".join(summary_lines) + "\n")

    return RunArtifacts(out_dir=out_dir, paths=paths, config_hash=digest)


def run_dir_name(seed: int, fim_enabled: bool) -> str:
    return f"seed{seed}_{'fim' if fim_enabled else 'nofim'}"


def write_comparison_artifacts(summary: ComparisonSummary, config: MissionConfig, out_dir) -> Path:
    """Write per-run artifact directories plus the comparison summary document."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for (seed, fim), log in sorted(summary.logs.items()):
        write_run_artifacts(log, out_dir / run_dir_name(seed, fim))

    lines = [
        f"config_hash: {config_hash(config)}",
        f"n_seeds: {len(summary.runs) // 2}",
        f"median_final_error_fim_m: {_fmt(summary.median_final_error[True])}",
        f"median_final_error_nofim_m: {_fmt(summary.median_final_error[False])}",
        f"median_time_avg_error_fim_m: {_fmt(summary.median_time_avg_error[True])}",
        f"median_time_avg_error_nofim_m: {_fmt(summary.median_time_avg_error[False])}",
        f"median_termination_time_fim_s: {_fmt(summary.median_termination_time[True])}",
        f"median_termination_time_nofim_s: {_fmt(summary.median_termination_time[False])}",
        f"confidence_fraction_fim: {_fmt(summary.confidence_fraction[True])}",
        f"confidence_fraction_nofim: {_fmt(summary.confidence_fraction[False])}",
    ]
    for stats in sorted(summary.runs, key=lambda r: (r.seed, not r.fim_enabled)):
        name = run_dir_name(stats.seed, stats.fim_enabled)
        lines.append(
            f"run {name}: termination={stats.termination}"
            f" time_s={_fmt(stats.termination_time)}"
            f" final_error_m={_fmt(stats.final_error)}"
            f" time_avg_error_m={_fmt(stats.time_avg_error)}"
            f" error_curve={name}/{ESTIMATES_CSV}"
            f" density={name}/{DENSITY_COEFFS_CSV}"
        )
    path = out_dir / "comparison_summary.txt"
    _atomic_write(path, "\n".join(lines) + "\n")
    return path


# ---------------------------------------------------------------------------
# readers (plot-data export and post-hoc checks)
# ---------------------------------------------------------------------------

def read_table(path) -> dict:
    """Read one artifact CSV into a dict of numpy columns (floats where possible)."""
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        rows = [line.strip().split(",") for line in fh if line.strip()]
    columns = {}
    for idx, name in enumerate(header):
        raw = [row[idx] for row in rows]
        try:
            columns[name] = np.array([float(v) for v in raw])
        except ValueError:
            columns[name] = np.array(raw)
    return columns


def read_summary(path) -> dict:
    out = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            key, _, value = line.partition(":")
            if _:
                out[key.strip()] = value.strip()
    return out


def load_final_density(run_dir) -> tuple[BernsteinPoly, BernsteinPoly, BernsteinPoly, BernsteinPoly]:
    """Rebuild (cdf_x, pdf_x, cdf_y, pdf_y) from the last logged snapshot."""
    from .configfile import load_config

    run_dir = Path(run_dir)
    table = read_table(run_dir / DENSITY_COEFFS_CSV)
    if table["t"].size == 0:
        raise ValueError(f"no density snapshots in {run_dir}")
    config = load_config(run_dir / CONFIG_ECHO)
    t_last = table["t"].max()
    polys = {}
    for axis in ("x", "y"):
        mask = (table["t"] == t_last) & (table["axis"] == axis)
        order = np.argsort(table["j"][mask])
        coeffs = table["coeff"][mask][order]
        cdf = BernsteinPoly(coeffs, config.zeta_min, config.zeta_max)
        polys[axis] = (cdf, cdf.derivative())
    return polys["x"][0], polys["x"][1], polys["y"][0], polys["y"][1]
