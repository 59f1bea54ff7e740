"""Trajectory planning over Bernstein coefficients.

Each plan solves a small nonlinear program: the decision variables are
the free control points (the first two are pinned by the boundary
position and velocity) plus the final time.  The cost trades mission
time, actuation effort, attraction of the endpoint toward the current
density estimate, and the log-determinant of the Fisher information the
path collects about the estimated beacon position.  The speed limit is
enforced through the convex-hull property: every coefficient of the
squared-speed polynomial stays at or below the squared limit, which is
sufficient for the whole time interval.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .bernstein import BernsteinPoly, _binom_row, basis, diff_matrix, speed_squared
from .estimation import DensityModel
from .solvers import SolveOptions, minimize_constrained

__all__ = [
    "SingularGeometryError",
    "PlanningFailure",
    "PlanContext",
    "Trajectory",
    "fisher_information",
    "terminal_cost",
    "velocity_residuals",
    "plan",
    "straight_line",
]

FIM_QUAD_NODES = 30
_RESIDUAL_ACCEPT = 1e-6


class SingularGeometryError(ValueError):
    """Raised when a path touches the estimate and the information integrand blows up."""


class PlanningFailure(RuntimeError):
    """Raised when no acceptable trajectory could be computed."""


# ---------------------------------------------------------------------------
# cached per-degree machinery
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def _quad_rule(n_nodes: int):
    x, w = np.polynomial.legendre.leggauss(n_nodes)
    u = 0.5 * (x + 1.0)
    wu = 0.5 * w
    u.setflags(write=False)
    wu.setflags(write=False)
    return u, wu


@lru_cache(maxsize=None)
def _basis_matrix(degree: int, n_nodes: int) -> np.ndarray:
    u, _ = _quad_rule(n_nodes)
    mat = np.column_stack([basis(j, degree, u) for j in range(degree + 1)])
    mat.setflags(write=False)
    return mat


@lru_cache(maxsize=None)
def _unit_diff(degree: int) -> np.ndarray:
    return diff_matrix(degree, 0.0, 1.0).entries


@lru_cache(maxsize=None)
def _dot_tensor(degree: int) -> np.ndarray:
    """W[k, j, i] weights so that coefficients of <f, g> are einsum(W, F, G)."""
    bm = _binom_row(degree)
    b2 = _binom_row(2 * degree)
    w = np.zeros((2 * degree + 1, degree + 1, degree + 1))
    for j in range(degree + 1):
        for i in range(degree + 1):
            w[j + i, j, i] = bm[j] * bm[i] / b2[j + i]
    w.setflags(write=False)
    return w


# ---------------------------------------------------------------------------
# public building blocks
# ---------------------------------------------------------------------------

def fisher_information(traj, p_hat, sigma: float, n_nodes: int = FIM_QUAD_NODES) -> np.ndarray:
    """Information matrix accumulated along a path about a fixed position.

    Gauss-Legendre quadrature of the unit-bearing outer product divided
    by the measurement variance.  Raises SingularGeometryError if any
    quadrature node lies on the estimate.
    """
    poly = traj.poly if isinstance(traj, Trajectory) else traj
    p_hat = np.asarray(p_hat, dtype=float)
    _, wu = _quad_rule(n_nodes)
    pts = _basis_matrix(poly.degree, n_nodes) @ poly._c2d()
    delta = pts - p_hat
    r2 = delta[:, 0] ** 2 + delta[:, 1] ** 2
    if np.min(r2) < 1e-18:
        raise SingularGeometryError("path passes through the estimated position")
    span = poly.tf - poly.t0
    weights = wu * span / (sigma**2)
    ratio = weights / r2
    i_xx = float(np.sum(ratio * delta[:, 0] ** 2))
    i_xy = float(np.sum(ratio * delta[:, 0] * delta[:, 1]))
    i_yy = float(np.sum(ratio * delta[:, 1] ** 2))
    return np.array([[i_xx, i_xy], [i_xy, i_yy]])


def terminal_cost(endpoint, density: DensityModel) -> float:
    """Density-weighted squared distance of the endpoint, in closed form.

    Per axis this is the exact integral of (endpoint - z)^2 against the
    fitted pdf, expanded through the pdf moments.
    """
    endpoint = np.asarray(endpoint, dtype=float)
    total = 0.0
    for value, (mass, first, second) in (
        (endpoint[0], density.moments_x),
        (endpoint[1], density.moments_y),
    ):
        total += value**2 * mass - 2.0 * value * first + second
    return max(total, 0.0)


def velocity_residuals(traj, v_max: float) -> np.ndarray:
    """Squared-speed coefficients minus the squared limit; all <= 0 is sufficient."""
    poly = traj.poly if isinstance(traj, Trajectory) else traj
    return speed_squared(poly).coeffs - v_max**2


def straight_line(p0, p1, t0: float, tf: float, degree: int) -> BernsteinPoly:
    """Constant-velocity segment represented at the requested degree."""
    p0 = np.asarray(p0, dtype=float)
    p1 = np.asarray(p1, dtype=float)
    fracs = np.linspace(0.0, 1.0, degree + 1)[:, None]
    return BernsteinPoly(p0 + fracs * (p1 - p0), t0, tf)


# ---------------------------------------------------------------------------
# plan context and result
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PlanContext:
    """Boundary data, current beliefs, weights, and limits for one replan."""

    t_i: float
    p_ti: np.ndarray
    v_ti: np.ndarray
    p_hat: np.ndarray
    density: DensityModel
    sigma: float
    weights: tuple[float, float, float, float]
    v_max: float
    degree: int = 5
    tf_bounds: tuple[float, float] = (0.0, 0.0)
    obstacles: tuple = ()
    solve_opts: SolveOptions | None = None

    def __post_init__(self):
        if any(w < 0 for w in self.weights):
            raise ValueError("weights must be non-negative")
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")
        if self.v_max <= 0:
            raise ValueError("v_max must be positive")
        if self.degree < 3:
            raise ValueError("trajectory degree must be at least 3")
        lo, hi = self.tf_bounds
        if not (lo > self.t_i and hi >= lo):
            raise ValueError("tf_bounds must satisfy t_i < lo <= hi")


class Trajectory:
    """Planned path with its cost breakdown and clamped-hold kinematics."""

    def __init__(self, poly: BernsteinPoly, cost_breakdown: dict | None = None):
        self.poly = poly
        self.cost_breakdown = cost_breakdown or {}
        self._deriv = None

    @property
    def t0(self) -> float:
        return self.poly.t0

    @property
    def tf(self) -> float:
        return self.poly.tf

    def _derivative(self):
        if self._deriv is None:
            self._deriv = self.poly.derivative()
        return self._deriv

    def position_at(self, t: float) -> np.ndarray:
        """Position at t; the endpoint is held outside the time interval."""
        t = min(max(t, self.poly.t0), self.poly.tf)
        return np.asarray(self.poly(t), dtype=float)

    def velocity_at(self, t: float) -> np.ndarray:
        """Velocity at t; zero outside the time interval (hover)."""
        if t < self.poly.t0 or t > self.poly.tf:
            return np.zeros(2)
        return np.asarray(self._derivative()(t), dtype=float)


# ---------------------------------------------------------------------------
# the planner
# ---------------------------------------------------------------------------

def _assemble_controls(z, ctx: PlanContext):
    d = ctx.degree
    span = z[-1] - ctx.t_i
    controls = np.empty((d + 1, 2))
    controls[0] = ctx.p_ti
    controls[1] = ctx.p_ti + ctx.v_ti * span / d
    controls[2:] = z[:-1].reshape(d - 1, 2)
    return controls, span


def _initial_guess(ctx: PlanContext, warm: Trajectory | None) -> np.ndarray:
    lo, hi = ctx.tf_bounds
    d = ctx.degree
    if warm is not None and warm.poly.degree == d:
        free = warm.poly.coeffs[2:].copy()
        tf0 = min(max(warm.tf, lo), hi)
    else:
        span = float(np.linalg.norm(ctx.p_hat - ctx.p_ti))
        cruise = 0.8 * ctx.v_max
        tf0 = min(max(ctx.t_i + span / cruise if span > 1e-9 else lo, lo), hi)
        fracs = np.linspace(0.0, 1.0, d + 1)[2:, None]
        free = ctx.p_ti + fracs * (ctx.p_hat - ctx.p_ti)
    return np.append(free.ravel(), tf0)


def plan(ctx: PlanContext, warm: Trajectory | None = None) -> Trajectory:
    """Solve the replan NLP and return the best feasible trajectory.

    Decision variables are the free control points (index 2..degree) and
    the final time; the first two control points are eliminated by the
    boundary position and velocity, so continuity with the previous
    trajectory is exact by construction.  Raises PlanningFailure when
    the solve cannot produce coefficients within the speed-limit
    acceptance band.
    """
    w1, w2, w3, w4 = ctx.weights
    d = ctx.degree
    dot_full = _dot_tensor(d)
    diff_unit = _unit_diff(d)
    basis_mat = _basis_matrix(d, FIM_QUAD_NODES)
    u_nodes, wu = _quad_rule(FIM_QUAD_NODES)
    p_hat = np.asarray(ctx.p_hat, dtype=float)
    vmax2 = ctx.v_max**2
    sigma2 = ctx.sigma**2
    mx, my = ctx.density.moments_x, ctx.density.moments_y

    def cost_terms(z):
        controls, span = _assemble_controls(z, ctx)
        if span <= 0:
            return None
        time_term = span
        vel_ctrl = (diff_unit @ controls) / span
        acc_ctrl = (diff_unit @ vel_ctrl) / span
        acc_sq = np.einsum("kji,jm,im->k", dot_full, acc_ctrl, acc_ctrl)
        effort = span * acc_sq.sum() / (2 * d + 1)
        end = controls[-1]
        terminal = max(
            end[0] ** 2 * mx[0] - 2 * end[0] * mx[1] + mx[2]
            + end[1] ** 2 * my[0] - 2 * end[1] * my[1] + my[2],
            0.0,
        )
        info = 0.0
        if w4 > 0.0:
            pts = basis_mat @ controls
            delta = pts - p_hat
            r2 = delta[:, 0] ** 2 + delta[:, 1] ** 2
            if np.min(r2) < 1e-18:
                return None
            ratio = wu * span / (sigma2 * r2)
            i_xx = np.sum(ratio * delta[:, 0] ** 2)
            i_xy = np.sum(ratio * delta[:, 0] * delta[:, 1])
            i_yy = np.sum(ratio * delta[:, 1] ** 2)
            trace = i_xx + i_yy
            eps = 1e-9 * trace
            det = (i_xx + eps) * (i_yy + eps) - i_xy**2
            if det <= 0:
                return None
            info = -math.log(det)
        return time_term, effort, terminal, info, vel_ctrl

    def objective(z):
        terms = cost_terms(z)
        if terms is None:
            return np.inf
        time_term, effort, terminal, info, _ = terms
        return w1 * time_term + w2 * effort + w3 * terminal + w4 * info

    def inequality(z):
        controls, span = _assemble_controls(z, ctx)
        if span <= 0:
            return np.full(2 * d + 1, np.inf)
        vel_ctrl = (diff_unit @ controls) / span
        speed_sq = np.einsum("kji,jm,im->k", dot_full, vel_ctrl, vel_ctrl)
        residuals = [speed_sq - vmax2]
        for center, radius in ctx.obstacles:
            offset = controls - np.asarray(center, dtype=float)
            dist_sq = np.einsum("kji,jm,im->k", dot_full, offset, offset)
            residuals.append(radius**2 - dist_sq)
        return np.concatenate(residuals)

    # the boundary velocity fixes the first squared-speed coefficient, so
    # feasibility cannot be driven below that inherited floor
    floor = max(0.0, float(ctx.v_ti @ ctx.v_ti) - vmax2)
    opts = ctx.solve_opts or SolveOptions(
        max_iters=120,
        grad_tol=1e-5,
        step_tol=1e-10,
        penalty_init=10.0,
        penalty_growth=10.0,
        feas_tol=max(1e-7, floor * (1 + 1e-9) + 1e-15),
        max_outer=9,
    )

    x0 = _initial_guess(ctx, warm)
    n_vars = x0.size
    bounds = [None] * (n_vars - 1) + [ctx.tf_bounds]
    report = minimize_constrained(
        objective, x0, inequality=inequality, bounds=bounds, opts=opts
    )

    controls, span = _assemble_controls(report.x_opt, ctx)
    poly = BernsteinPoly(controls, ctx.t_i, float(report.x_opt[-1]))
    residuals = velocity_residuals(poly, ctx.v_max)
    if residuals.max() > max(_RESIDUAL_ACCEPT, floor + 1e-12):
        raise PlanningFailure(
            f"velocity residuals {residuals.max():.3e} above acceptance band"
        )

    terms = cost_terms(report.x_opt)
    if terms is None:
        raise PlanningFailure("optimizer returned a degenerate trajectory")
    time_term, effort, terminal, info, _ = terms
    breakdown = {
        "time": time_term,
        "effort": effort,
        "terminal": terminal,
        "information": info,
        "objective": w1 * time_term + w2 * effort + w3 * terminal + w4 * info,
    }
    return Trajectory(poly, breakdown)
