"""Target position estimation and Bernstein-smoothed distribution models.

Two layers live here.  The functional core (`estimate_position`,
`empirical_cdf`, `fit_density`, `density_stats`) is what the mission
loop drives at every measurement epoch.  On top of it sit two
scikit-learn compatible estimators (`RangeLocalizer`,
`BernsteinCdfEstimator`) so the same algorithms compose with pipelines,
`clone`, and grid search in the wider ecosystem.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .bernstein import BernsteinPoly, poly_product
from .solvers import SolveOptions, minimize_unconstrained

__all__ = [
    "DegenerateDensityError",
    "PositionEstimate",
    "DensityModel",
    "EmpiricalCdf",
    "empirical_cdf",
    "smoothing_degree",
    "estimate_position",
    "estimate_position_xy",
    "fit_density",
    "density_stats",
    "RangeLocalizer",
    "BernsteinCdfEstimator",
]


class DegenerateDensityError(ValueError):
    """Raised when a fitted density carries (numerically) zero total mass."""


@dataclass(frozen=True)
class PositionEstimate:
    """Least-squares position fix at one epoch plus residual diagnostics."""

    t: float
    p_hat: np.ndarray
    residual_rms: float
    solver_converged: bool
    degraded: bool


# ---------------------------------------------------------------------------
# position estimation
# ---------------------------------------------------------------------------

def _range_residual_objective(positions: np.ndarray, ranges: np.ndarray):
    def objective(p):
        d = np.hypot(positions[:, 0] - p[0], positions[:, 1] - p[1])
        r = d - ranges
        return float(r @ r)

    return objective


def _is_degraded(positions: np.ndarray) -> bool:
    """True when the vantage points cannot pin down a unique fix."""
    if positions.shape[0] < 3:
        return True
    centered = positions - positions.mean(axis=0)
    s = np.linalg.svd(centered, compute_uv=False)
    return bool(s[-1] <= 1e-9 * max(1.0, s[0]))


def estimate_position_xy(
    positions,
    ranges,
    t: float,
    init,
    opts: SolveOptions | None = None,
) -> PositionEstimate:
    """Array-based core of :func:`estimate_position`.

    Minimizes the sum of squared range residuals over candidate target
    positions, warm-started at ``init``.
    """
    positions = np.asarray(positions, dtype=float)
    ranges = np.asarray(ranges, dtype=float)
    if positions.ndim != 2 or positions.shape[1] != 2:
        raise ValueError("positions must have shape (n, 2)")
    if ranges.shape != (positions.shape[0],):
        raise ValueError("ranges must match the number of positions")
    if positions.shape[0] == 0:
        raise ValueError("at least one measurement is required")

    objective = _range_residual_objective(positions, ranges)
    report = minimize_unconstrained(objective, np.asarray(init, dtype=float), opts)
    rms = math.sqrt(max(report.f_opt, 0.0) / positions.shape[0])
    return PositionEstimate(
        t=float(t),
        p_hat=report.x_opt,
        residual_rms=rms,
        solver_converged=report.converged,
        degraded=_is_degraded(positions),
    )


def estimate_position(measurements, init, opts: SolveOptions | None = None) -> PositionEstimate:
    """Solve the range-residual least-squares fix from measurement records."""
    if not measurements:
        raise ValueError("at least one measurement is required")
    positions = np.array([m.vehicle_pos for m in measurements], dtype=float)
    ranges = np.array([m.range for m in measurements], dtype=float)
    return estimate_position_xy(positions, ranges, measurements[-1].t, init, opts)


# ---------------------------------------------------------------------------
# distribution models
# ---------------------------------------------------------------------------

class EmpiricalCdf:
    """Right-continuous step CDF of samples clipped to [zeta_min, zeta_max]."""

    def __init__(self, samples, zeta_min: float, zeta_max: float):
        samples = np.asarray(samples, dtype=float).ravel()
        if samples.size == 0:
            raise ValueError("empirical CDF needs at least one sample")
        if not zeta_max > zeta_min:
            raise ValueError("zeta_max must exceed zeta_min")
        self.zeta_min = float(zeta_min)
        self.zeta_max = float(zeta_max)
        self._sorted = np.sort(np.clip(samples, zeta_min, zeta_max))
        self.n = samples.size

    def __call__(self, zeta):
        zeta = np.asarray(zeta, dtype=float)
        counts = np.searchsorted(self._sorted, zeta, side="right")
        out = counts / self.n
        return float(out) if out.ndim == 0 else out


def empirical_cdf(samples, zeta_min: float, zeta_max: float) -> EmpiricalCdf:
    """Step-function distribution estimate from scalar samples."""
    return EmpiricalCdf(samples, zeta_min, zeta_max)


def smoothing_degree(n_samples: int) -> int:
    """Polynomial order for CDF smoothing: ceil(n^(3/4)) + 2.

    Stays inside the consistency window n^(2/3) <= m <= (n / log n)^2.
    """
    if n_samples < 1:
        raise ValueError("need at least one sample")
    return math.ceil(n_samples**0.75 - 1e-9) + 2


@dataclass(frozen=True)
class _AxisDensity:
    cdf: BernsteinPoly
    pdf: BernsteinPoly
    moments: tuple[float, float, float]  # integrals of pdf, z*pdf, z^2*pdf


def _fit_axis(samples, zeta_min: float, zeta_max: float, degree: int) -> _AxisDensity:
    step = empirical_cdf(samples, zeta_min, zeta_max)
    grid = np.linspace(zeta_min, zeta_max, degree + 1)
    cdf = BernsteinPoly(step(grid), zeta_min, zeta_max)
    pdf = cdf.derivative()
    # non-negativity can only be lost to float round-off; clamp inside the
    # moment integrands, never in the stored polynomial
    clamped = BernsteinPoly(np.maximum(pdf.coeffs, 0.0), zeta_min, zeta_max)
    zeta = BernsteinPoly([zeta_min, zeta_max], zeta_min, zeta_max)
    first = poly_product(zeta, clamped)
    second = poly_product(zeta, first)
    moments = (clamped.integral(), first.integral(), second.integral())
    return _AxisDensity(cdf=cdf, pdf=pdf, moments=moments)


@dataclass(frozen=True)
class DensityModel:
    """Per-axis Bernstein CDF/PDF estimates over the search interval."""

    cdf_x: BernsteinPoly
    cdf_y: BernsteinPoly
    pdf_x: BernsteinPoly
    pdf_y: BernsteinPoly
    degree: int
    n_samples: int
    zeta_min: float
    zeta_max: float
    moments_x: tuple[float, float, float]
    moments_y: tuple[float, float, float]


def fit_density(points, zeta_min: float, zeta_max: float, degree: int | None = None) -> DensityModel:
    """Fit per-axis smoothed CDFs (and their derivative PDFs) to 2-D points.

    ``points`` is an (n, 2) array or a sequence of position estimates.
    Samples are clipped into the search interval before the empirical CDF
    is built.  ``degree`` defaults to :func:`smoothing_degree`.
    """
    if hasattr(points, "__len__") and len(points) and hasattr(points[0], "p_hat"):
        points = [e.p_hat for e in points]
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError("points must have shape (n, 2)")
    if pts.shape[0] == 0:
        raise ValueError("need at least one point")
    n = pts.shape[0]
    m = smoothing_degree(n) if degree is None else int(degree)
    if m < 1:
        raise ValueError("degree must be at least 1")
    ax_x = _fit_axis(pts[:, 0], zeta_min, zeta_max, m)
    ax_y = _fit_axis(pts[:, 1], zeta_min, zeta_max, m)
    return DensityModel(
        cdf_x=ax_x.cdf,
        cdf_y=ax_y.cdf,
        pdf_x=ax_x.pdf,
        pdf_y=ax_y.pdf,
        degree=m,
        n_samples=n,
        zeta_min=float(zeta_min),
        zeta_max=float(zeta_max),
        moments_x=ax_x.moments,
        moments_y=ax_y.moments,
    )


def _axis_stats(moments: tuple[float, float, float]) -> tuple[float, float]:
    mass, first, second = moments
    if mass <= 1e-12:
        raise DegenerateDensityError(f"density mass {mass} is numerically zero")
    mean = first / mass
    var = second / mass - mean**2
    return mean, math.sqrt(max(var, 0.0))


def density_stats(model: DensityModel) -> tuple[tuple[float, float], tuple[float, float]]:
    """Per-axis (mean, sigma) of the fitted PDFs, via exact moment integrals."""
    return _axis_stats(model.moments_x), _axis_stats(model.moments_y)


# ---------------------------------------------------------------------------
# scikit-learn surface
# ---------------------------------------------------------------------------

class RangeLocalizer(RegressorMixin, BaseEstimator):
    """Range-only localizer with the scikit-learn fit/predict contract.

    ``fit(X, y)`` takes vantage points ``X`` of shape (n, 2) and measured
    ranges ``y``; the fitted parameter is the emitter position.
    ``predict(X)`` returns the ranges the fitted position would produce.
    """

    def __init__(self, init=None, max_iters=200):
        self.init = init
        self.max_iters = max_iters

    def fit(self, X, y):
        X = check_array(X)
        y = np.asarray(y, dtype=float).ravel()
        if X.shape[1] != 2:
            raise ValueError(f"X must have exactly 2 columns, got {X.shape[1]}")
        if y.shape[0] != X.shape[0]:
            raise ValueError("X and y disagree on the number of measurements")
        init = np.mean(X, axis=0) if self.init is None else np.asarray(self.init, float)
        opts = SolveOptions(max_iters=self.max_iters)
        est = estimate_position_xy(X, y, t=0.0, init=init, opts=opts)
        self.position_ = est.p_hat
        self.residual_rms_ = est.residual_rms
        self.converged_ = est.solver_converged
        self.degraded_ = est.degraded
        self.n_features_in_ = 2
        return self

    def predict(self, X):
        check_is_fitted(self, "position_")
        X = check_array(X)
        return np.hypot(X[:, 0] - self.position_[0], X[:, 1] - self.position_[1])


class BernsteinCdfEstimator(BaseEstimator):
    """Smooth per-column CDF/PDF estimator on a fixed support interval.

    Each column of ``X`` gets its own Bernstein-smoothed empirical CDF;
    ``cdf`` and ``pdf`` evaluate them column-wise.
    """

    def __init__(self, support=(0.0, 1.0), degree=None):
        self.support = support
        self.degree = degree

    def fit(self, X, y=None):
        X = check_array(X, ensure_min_samples=1)
        lo, hi = self.support
        m = smoothing_degree(X.shape[0]) if self.degree is None else int(self.degree)
        axes = [_fit_axis(X[:, k], lo, hi, m) for k in range(X.shape[1])]
        self.cdfs_ = [a.cdf for a in axes]
        self.pdfs_ = [a.pdf for a in axes]
        stats = [_axis_stats(a.moments) for a in axes]
        self.means_ = np.array([s[0] for s in stats])
        self.sigmas_ = np.array([s[1] for s in stats])
        self.degree_ = m
        self.n_features_in_ = X.shape[1]
        return self

    def _eval_columns(self, polys, X):
        X = check_array(X)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(
                f"X has {X.shape[1]} columns; estimator was fitted with {self.n_features_in_}"
            )
        return np.column_stack([polys[k](X[:, k]) for k in range(X.shape[1])])

    def cdf(self, X):
        check_is_fitted(self, "cdfs_")
        return self._eval_columns(self.cdfs_, X)

    def pdf(self, X):
        check_is_fitted(self, "pdfs_")
        return self._eval_columns(self.pdfs_, X)
