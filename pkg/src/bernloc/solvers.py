"""In-repo numerical optimizers: BFGS descent and a quadratic-penalty wrapper.

Gradients are central finite differences, so callers only supply plain
objective callables.  Non-finite objective values encountered during a
line search are treated as +inf and the step is rejected, which lets
objectives with restricted domains (log-determinants near singular
matrices) be minimized without special casing.  Everything is
deterministic: identical inputs produce identical reports.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "SolveOptions",
    "SolveReport",
    "minimize_unconstrained",
    "minimize_constrained",
]

_ARMIJO_C1 = 1e-4
_MAX_BACKTRACKS = 60


@dataclass(frozen=True)
class SolveOptions:
    max_iters: int = 200
    grad_tol: float = 1e-6
    step_tol: float = 1e-11
    penalty_init: float = 10.0
    penalty_growth: float = 10.0
    finite_diff_step: float = 1e-6
    feas_tol: float = 1e-4
    max_outer: int = 12

    def __post_init__(self):
        if min(self.grad_tol, self.step_tol, self.finite_diff_step, self.feas_tol) <= 0:
            raise ValueError("tolerances must be positive")
        if self.penalty_growth <= 1:
            raise ValueError("penalty_growth must exceed 1")
        if self.penalty_init <= 0:
            raise ValueError("penalty_init must be positive")


@dataclass
class SolveReport:
    x_opt: np.ndarray
    f_opt: float
    iterations: int
    converged: bool
    max_constraint_violation: float = 0.0
    outer_history: list = field(default_factory=list)


def _fd_gradient(objective, x, f_x, rel_step):
    """Central-difference gradient with one-sided fallback near domain edges."""
    n = x.size
    g = np.empty(n)
    for i in range(n):
        h = rel_step * max(1.0, abs(x[i]))
        xp = x.copy()
        xm = x.copy()
        xp[i] += h
        xm[i] -= h
        fp = objective(xp)
        fm = objective(xm)
        if np.isfinite(fp) and np.isfinite(fm):
            g[i] = (fp - fm) / (2 * h)
        elif np.isfinite(fp):
            g[i] = (fp - f_x) / h
        elif np.isfinite(fm):
            g[i] = (f_x - fm) / h
        else:
            raise RuntimeError(
                f"objective non-finite on both sides of x[{i}]={x[i]!r}; "
                "cannot form a finite-difference gradient"
            )
    return g


def minimize_unconstrained(objective, x0, opts: SolveOptions | None = None) -> SolveReport:
    """BFGS with backtracking line search and finite-difference gradients.

    Stops when the gradient infinity-norm falls below ``grad_tol`` or the
    accepted step falls below ``step_tol`` (relative to the iterate size);
    hitting ``max_iters`` reports ``converged=False``.
    """
    opts = opts or SolveOptions()
    x = np.atleast_1d(np.asarray(x0, dtype=float)).copy()
    f = float(objective(x))
    if not np.isfinite(f):
        raise ValueError(f"objective must be finite at the start point, got {f}")

    g = _fd_gradient(objective, x, f, opts.finite_diff_step)
    n = x.size
    eye = np.eye(n)
    h_inv = eye.copy()
    iters = 0
    converged = bool(np.max(np.abs(g)) <= opts.grad_tol)

    while not converged and iters < opts.max_iters:
        d = -h_inv @ g
        gd = float(g @ d)
        if not np.isfinite(gd) or gd >= 0.0:
            h_inv = eye.copy()
            d = -g
            gd = -float(g @ g)
        if gd == 0.0:
            converged = True
            break

        step = 1.0
        accepted = False
        for _ in range(_MAX_BACKTRACKS):
            x_new = x + step * d
            f_new = float(objective(x_new))
            if np.isfinite(f_new) and f_new <= f + _ARMIJO_C1 * step * gd:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            converged = bool(np.max(np.abs(g)) <= opts.grad_tol)
            break

        g_new = _fd_gradient(objective, x_new, f_new, opts.finite_diff_step)
        s = x_new - x
        y = g_new - g
        sy = float(s @ y)
        if sy > 1e-12 * np.linalg.norm(s) * np.linalg.norm(y):
            if iters == 0:
                h_inv = (sy / float(y @ y)) * eye
            rho = 1.0 / sy
            v = eye - rho * np.outer(s, y)
            h_inv = v @ h_inv @ v.T + rho * np.outer(s, s)

        x, f, g = x_new, f_new, g_new
        iters += 1
        if np.max(np.abs(g)) <= opts.grad_tol:
            converged = True
        elif np.max(np.abs(s)) <= opts.step_tol * (1.0 + np.max(np.abs(x))):
            converged = True

    return SolveReport(x_opt=x, f_opt=f, iterations=iters, converged=converged)


def _bound_arrays(bounds, n):
    lo = np.full(n, -np.inf)
    hi = np.full(n, np.inf)
    if bounds is not None:
        for i, pair in enumerate(bounds):
            if pair is None:
                continue
            lo_i, hi_i = pair
            if lo_i is not None:
                lo[i] = lo_i
            if hi_i is not None:
                hi[i] = hi_i
    return lo, hi


def minimize_constrained(
    objective,
    x0,
    inequality=None,
    equality=None,
    bounds=None,
    opts: SolveOptions | None = None,
) -> SolveReport:
    """Quadratic-penalty outer loop around :func:`minimize_unconstrained`.

    ``inequality(x) <= 0`` and ``equality(x) == 0`` define feasibility;
    ``bounds`` is an optional sequence of per-variable (lo, hi) pairs.
    The penalty weight starts at ``penalty_init`` and grows by
    ``penalty_growth`` each outer iteration, warm-starting from the
    previous solution, until the worst violation is at most ``feas_tol``.
    """
    opts = opts or SolveOptions()
    x = np.atleast_1d(np.asarray(x0, dtype=float)).copy()
    lo, hi = _bound_arrays(bounds, x.size)

    def violations(z):
        parts = [np.maximum(lo - z, 0.0), np.maximum(z - hi, 0.0)]
        if inequality is not None:
            parts.append(np.maximum(np.atleast_1d(inequality(z)), 0.0))
        if equality is not None:
            parts.append(np.abs(np.atleast_1d(equality(z))))
        return np.concatenate(parts)

    def max_violation(z):
        v = violations(z)
        return float(v.max()) if v.size else 0.0

    mu = opts.penalty_init
    history = []
    total_iters = 0
    best = None  # (feasible, viol, f, x)
    converged = False

    for _ in range(opts.max_outer):
        mu_now = mu

        def penalized(z, _mu=mu_now):
            f = objective(z)
            if not np.isfinite(f):
                return np.inf
            v = violations(z)
            return f + _mu * float(v @ v)

        inner = minimize_unconstrained(penalized, x, opts)
        x = inner.x_opt
        total_iters += inner.iterations
        f_x = float(objective(x))
        viol = max_violation(x)
        history.append({"mu": mu_now, "x": x.copy(), "f": f_x, "violation": viol})

        feasible = viol <= opts.feas_tol
        key = (not feasible, viol if not feasible else f_x)
        if best is None or key < best[0]:
            best = (key, x.copy(), f_x, viol)

        if feasible and inner.converged:
            converged = True
            break
        mu *= opts.penalty_growth

    _, x_best, f_best, viol_best = best
    return SolveReport(
        x_opt=x_best,
        f_opt=f_best,
        iterations=total_iters,
        converged=converged,
        max_constraint_violation=viol_best,
        outer_history=history,
    )
