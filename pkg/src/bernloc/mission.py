"""Closed-loop localization mission: sample, estimate, refit, replan, stop.

One mission is a single deterministic loop.  Every sample epoch the
vehicle advances along the active trajectory (exact kinematic tracking),
takes one range measurement, refreshes the position estimate and the
smoothed density of all estimates so far; at fixed intervals the planner
is invoked with the latest snapshot.  The mission ends when twice the
fitted per-axis standard deviation drops to the termination radius on
both axes, or when the mission clock runs out.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .estimation import (
    DegenerateDensityError,
    DensityModel,
    density_stats,
    estimate_position_xy,
    fit_density,
)
from .planning import PlanContext, PlanningFailure, Trajectory, plan, straight_line
from .sensing import ChannelParams, RangeMeasurement, sample_measurement
from .solvers import SolveOptions

__all__ = [
    "MissionConfig",
    "EpochRecord",
    "PlanRecord",
    "MissionLog",
    "RunStats",
    "ComparisonSummary",
    "run",
    "compare_modes",
]

TERMINATION_CONFIDENCE = "confidence"
TERMINATION_TIMEOUT = "timeout"

_ESTIMATOR_OPTS = SolveOptions(max_iters=80, grad_tol=1e-7, step_tol=1e-12)


@dataclass(frozen=True)
class MissionConfig:
    """Everything one mission needs; identical configs reproduce bit-identical logs."""

    target_pos: tuple[float, float]
    vehicle_start: tuple[float, float]
    zeta_min: float = 0.0
    zeta_max: float = 12.0
    sample_rate_hz: float = 2.0
    replan_interval_s: float = 5.0
    r_t_m: float = 2.0
    tf_max_s: float = 350.0
    channel: ChannelParams = field(default_factory=ChannelParams)
    w1: float = 0.3
    w2: float = 0.5
    w3: float = 1.0
    w4: float = 1.5
    v_max: float = 1.0
    degree_d: int = 5
    rng_seed: int = 0
    fim_enabled: bool = True

    def __post_init__(self):
        if self.sample_rate_hz <= 0:
            raise ValueError("sample_rate_hz must be positive")
        if self.replan_interval_s <= 0:
            raise ValueError("replan_interval_s must be positive")
        if self.r_t_m <= 0:
            raise ValueError("r_t_m must be positive")
        if self.tf_max_s <= 0:
            raise ValueError("tf_max_s must be positive")
        if not self.zeta_max > self.zeta_min:
            raise ValueError("zeta_max must exceed zeta_min")
        for name in ("target_pos", "vehicle_start"):
            value = getattr(self, name)
            if len(value) != 2 or not all(math.isfinite(v) for v in value):
                raise ValueError(f"{name} must be a finite 2-vector")
        tx, ty = self.target_pos
        if not (self.zeta_min <= tx <= self.zeta_max and self.zeta_min <= ty <= self.zeta_max):
            raise ValueError("target_pos must lie inside the search area")
        if min(self.w1, self.w2, self.w3, self.w4) < 0:
            raise ValueError("weights must be non-negative")
        if self.v_max <= 0:
            raise ValueError("v_max must be positive")
        if self.degree_d < 3:
            raise ValueError("degree_d must be at least 3")

    @property
    def weights(self) -> tuple[float, float, float, float]:
        return (self.w1, self.w2, self.w3, self.w4)


@dataclass(frozen=True)
class EpochRecord:
    """One estimation epoch: fix, error, and fitted/raw density spreads."""

    t: float
    p_hat: np.ndarray
    err: float
    residual_rms: float
    solver_converged: bool
    degraded: bool
    sigma_x: float
    sigma_y: float
    raw_sigma_x: float
    raw_sigma_y: float


@dataclass(frozen=True)
class PlanRecord:
    """One (re)planning event; poly is None when the planner faulted."""

    t_i: float
    poly: object
    cost_breakdown: dict
    fault: bool


@dataclass
class MissionLog:
    config: MissionConfig
    measurements: list[RangeMeasurement] = field(default_factory=list)
    estimates: list[EpochRecord] = field(default_factory=list)
    track: list[tuple[float, float, float, float, float]] = field(default_factory=list)
    plans: list[PlanRecord] = field(default_factory=list)
    densities: list[tuple[float, DensityModel]] = field(default_factory=list)
    termination: tuple[str, float] = ("", 0.0)
    final_error: float = float("nan")

    def error_series(self) -> np.ndarray:
        return np.array([(e.t, e.err) for e in self.estimates])

    def time_averaged_error(self) -> float:
        if not self.estimates:
            return float("nan")
        return float(np.mean([e.err for e in self.estimates]))


def _grid_probe(positions, ranges, zeta_min, zeta_max, points_per_axis=12) -> np.ndarray:
    """Best cell center of a coarse residual scan over the search area.

    Range-only least squares has mirror local minima while the vantage
    geometry is thin; a deterministic grid probe supplies a restart point
    once the residual exposes a wrong-basin fix.
    """
    ticks = zeta_min + (zeta_max - zeta_min) * (np.arange(points_per_axis) + 0.5) / points_per_axis
    gx, gy = np.meshgrid(ticks, ticks)
    grid = np.column_stack([gx.ravel(), gy.ravel()])
    d = np.hypot(
        positions[:, None, 0] - grid[None, :, 0],
        positions[:, None, 1] - grid[None, :, 1],
    )
    cost = np.sum((d - ranges[:, None]) ** 2, axis=0)
    return grid[int(np.argmin(cost))]


def _pre_plan_trajectory(config: MissionConfig) -> Trajectory:
    """Deterministic pre-plan motion: cruise toward the search-area center."""
    start = np.asarray(config.vehicle_start, dtype=float)
    center = np.full(2, 0.5 * (config.zeta_min + config.zeta_max))
    dist = float(np.linalg.norm(center - start))
    cruise = 0.8 * config.v_max
    if dist < 1e-9:
        horizon = max(config.tf_max_s, 1.0 / config.sample_rate_hz)
        poly = straight_line(start, start, 0.0, horizon, config.degree_d)
    else:
        poly = straight_line(start, center, 0.0, dist / cruise, config.degree_d)
    return Trajectory(poly, {})


def run(config: MissionConfig) -> MissionLog:
    """Execute one mission and return its full deterministic trace."""
    rng = np.random.default_rng(config.rng_seed)
    log = MissionLog(config=config)
    target = np.asarray(config.target_pos, dtype=float)
    center = np.full(2, 0.5 * (config.zeta_min + config.zeta_max))
    dt = 1.0 / config.sample_rate_hz
    weights = config.weights if config.fim_enabled else (config.w1, config.w2, config.w3, 0.0)

    active = _pre_plan_trajectory(config)
    log.plans.append(PlanRecord(t_i=0.0, poly=active.poly, cost_breakdown={}, fault=False))

    positions: list[np.ndarray] = []
    ranges: list[float] = []
    fixes: list[np.ndarray] = []
    prev_fix = center
    next_replan = config.replan_interval_s
    density = None
    termination = None

    k = 1
    while True:
        t = k * dt
        pos = active.position_at(t)
        vel = active.velocity_at(t)
        log.track.append((t, float(pos[0]), float(pos[1]), float(vel[0]), float(vel[1])))

        measurement = sample_measurement(pos, target, t, config.channel, rng)
        log.measurements.append(measurement)
        positions.append(np.asarray(measurement.vehicle_pos))
        ranges.append(measurement.range)

        pos_arr = np.array(positions)
        rng_arr = np.array(ranges)
        estimate = estimate_position_xy(pos_arr, rng_arr, t, prev_fix, _ESTIMATOR_OPTS)
        if (
            len(ranges) >= 8
            and estimate.residual_rms > max(2.0 * config.channel.noise_sigma0, 1e-3)
        ):
            restart = _grid_probe(pos_arr, rng_arr, config.zeta_min, config.zeta_max)
            retry = estimate_position_xy(pos_arr, rng_arr, t, restart, _ESTIMATOR_OPTS)
            if retry.residual_rms < estimate.residual_rms:
                estimate = retry
        prev_fix = estimate.p_hat
        fixes.append(estimate.p_hat)
        fix_arr = np.array(fixes)

        density = fit_density(fix_arr, config.zeta_min, config.zeta_max)
        try:
            (_, sigma_x), (_, sigma_y) = density_stats(density)
        except DegenerateDensityError:
            sigma_x = sigma_y = float("inf")

        log.estimates.append(
            EpochRecord(
                t=t,
                p_hat=estimate.p_hat,
                err=float(np.linalg.norm(estimate.p_hat - target)),
                residual_rms=estimate.residual_rms,
                solver_converged=estimate.solver_converged,
                degraded=estimate.degraded,
                sigma_x=sigma_x,
                sigma_y=sigma_y,
                raw_sigma_x=float(np.std(fix_arr[:, 0])),
                raw_sigma_y=float(np.std(fix_arr[:, 1])),
            )
        )

        if 2.0 * sigma_x <= config.r_t_m and 2.0 * sigma_y <= config.r_t_m:
            termination = (TERMINATION_CONFIDENCE, t)
            break

        if t + 1e-9 >= next_replan and t < config.tf_max_s:
            next_replan += config.replan_interval_s
            ctx = PlanContext(
                t_i=t,
                p_ti=pos,
                v_ti=vel,
                p_hat=estimate.p_hat,
                density=density,
                # the 1/sigma^2 prefactor only shifts the log-det term, so a
                # floor keeps noiseless channels well defined without moving
                # the minimizer
                sigma=max(config.channel.noise_sigma0, 1e-6),
                weights=weights,
                v_max=config.v_max,
                degree=config.degree_d,
                tf_bounds=(
                    t + config.replan_interval_s,
                    max(config.tf_max_s, t + config.replan_interval_s),
                ),
            )
            warm = active if active.cost_breakdown else None
            try:
                active = plan(ctx, warm=warm)
                log.plans.append(
                    PlanRecord(
                        t_i=t,
                        poly=active.poly,
                        cost_breakdown=dict(active.cost_breakdown),
                        fault=False,
                    )
                )
            except PlanningFailure:
                log.plans.append(
                    PlanRecord(t_i=t, poly=None, cost_breakdown={}, fault=True)
                )
            log.densities.append((t, density))

        if t + dt > config.tf_max_s + 1e-9:
            termination = (TERMINATION_TIMEOUT, min(t + dt, config.tf_max_s))
            break
        k += 1

    log.termination = termination
    if density is not None and (not log.densities or log.densities[-1][0] != t):
        log.densities.append((t, density))
    if fixes:
        log.final_error = float(np.linalg.norm(fixes[-1] - target))
    return log


# ---------------------------------------------------------------------------
# two-mode comparison
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RunStats:
    seed: int
    fim_enabled: bool
    termination: str
    termination_time: float
    final_error: float
    time_avg_error: float


@dataclass
class ComparisonSummary:
    runs: list[RunStats]
    logs: dict
    median_final_error: dict
    median_time_avg_error: dict
    median_termination_time: dict
    confidence_fraction: dict


def _run_variant(args) -> tuple[int, bool, MissionLog]:
    config, seed, fim = args
    variant = replace(config, rng_seed=seed, fim_enabled=fim)
    return seed, fim, run(variant)


def compare_modes(config: MissionConfig, seeds, workers: int = 1) -> ComparisonSummary:
    """Run every seed with and without the information term, same noise stream.

    Measurement noise draws depend only on the seed and epoch index, so
    the k-th draw is shared between the two modes of a seed even though
    the vehicle paths differ.
    """
    seeds = list(seeds)
    jobs = [(config, seed, fim) for seed in seeds for fim in (True, False)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_variant, jobs))
    else:
        results = [_run_variant(job) for job in jobs]

    logs = {(seed, fim): log for seed, fim, log in results}
    runs = [
        RunStats(
            seed=seed,
            fim_enabled=fim,
            termination=log.termination[0],
            termination_time=log.termination[1],
            final_error=log.final_error,
            time_avg_error=log.time_averaged_error(),
        )
        for seed, fim, log in results
    ]

    def per_mode(fn):
        out = {}
        for fim in (True, False):
            vals = [fn(r) for r in runs if r.fim_enabled == fim]
            out[fim] = float(np.median(vals)) if vals else float("nan")
        return out

    confidence = {
        fim: float(
            np.mean(
                [r.termination == TERMINATION_CONFIDENCE for r in runs if r.fim_enabled == fim]
            )
        )
        for fim in (True, False)
    }
    return ComparisonSummary(
        runs=runs,
        logs=logs,
        median_final_error=per_mode(lambda r: r.final_error),
        median_time_avg_error=per_mode(lambda r: r.time_avg_error),
        median_termination_time=per_mode(lambda r: r.termination_time),
        confidence_fraction=confidence,
    )
