"""Range-only beacon localization with Bernstein-polynomial machinery.

The package simulates a vehicle that localizes a static beacon from
noisy RSSI-derived ranges: a least-squares position estimator feeds
Bernstein-smoothed distribution models, an information-weighted planner
replans trajectories online, and a mission loop ties them together
until a confidence-based stop fires.
"""

from .bernstein import BernsteinPoly, basis, coeff_bounds, degree_elevate, diff_matrix
from .estimation import (
    BernsteinCdfEstimator,
    DensityModel,
    PositionEstimate,
    RangeLocalizer,
    density_stats,
    empirical_cdf,
    estimate_position,
    fit_density,
    smoothing_degree,
)
from .mission import MissionConfig, MissionLog, compare_modes, run
from .planning import PlanContext, Trajectory, fisher_information, plan, terminal_cost
from .sensing import ChannelParams, RangeMeasurement, range_from_rssi, rssi_from_range
from .solvers import SolveOptions, SolveReport, minimize_constrained, minimize_unconstrained

__version__ = "0.1.0"

__all__ = [
    "BernsteinPoly",
    "basis",
    "coeff_bounds",
    "degree_elevate",
    "diff_matrix",
    "BernsteinCdfEstimator",
    "DensityModel",
    "PositionEstimate",
    "RangeLocalizer",
    "density_stats",
    "empirical_cdf",
    "estimate_position",
    "fit_density",
    "smoothing_degree",
    "MissionConfig",
    "MissionLog",
    "compare_modes",
    "run",
    "PlanContext",
    "Trajectory",
    "fisher_information",
    "plan",
    "terminal_cost",
    "ChannelParams",
    "RangeMeasurement",
    "range_from_rssi",
    "rssi_from_range",
    "SolveOptions",
    "SolveReport",
    "minimize_constrained",
    "minimize_unconstrained",
]
