"""Bernstein-form polynomial algebra on an arbitrary interval.

Polynomials are stored by their Bernstein coefficients (control points)
together with the interval [t0, tf] they live on.  Evaluation uses the
de Casteljau convex-combination recursion, so values always stay inside
the convex hull of the coefficients and endpoint values equal the first
and last coefficients exactly.  All values are immutable after
construction and every operation is a pure function.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

# Degrees beyond this approach float64 binomial overflow (C(1030, 515) ~ 2.8e308).
MAX_DEGREE = 1020

__all__ = [
    "MAX_DEGREE",
    "BernsteinPoly",
    "DiffMatrix",
    "basis",
    "diff_matrix",
    "poly_sum",
    "poly_product",
    "poly_dot",
    "degree_elevate",
    "speed_squared",
    "accel_squared",
    "offset_squared",
    "coeff_bounds",
]


@lru_cache(maxsize=None)
def _binom_row(m: int) -> np.ndarray:
    """Row of binomial coefficients C(m, 0..m) via multiplicative recurrence."""
    if m < 0:
        raise ValueError(f"degree must be non-negative, got {m}")
    if m > MAX_DEGREE:
        raise ValueError(f"degree {m} exceeds supported maximum {MAX_DEGREE}")
    row = np.empty(m + 1)
    row[0] = 1.0
    for k in range(1, m + 1):
        row[k] = row[k - 1] * (m - k + 1) / k
    row.setflags(write=False)
    return row


def _check_interval(t0: float, tf: float) -> tuple[float, float]:
    t0, tf = float(t0), float(tf)
    if not np.isfinite(t0) or not np.isfinite(tf) or not tf > t0:
        raise ValueError(f"invalid interval [{t0}, {tf}]: need tf > t0")
    return t0, tf


def basis(j: int, degree: int, t, t0: float = 0.0, tf: float = 1.0):
    """Evaluate the degree-`degree` Bernstein basis function of index j at t.

    Raises ValueError if j is out of range or t lies outside [t0, tf].
    """
    t0, tf = _check_interval(t0, tf)
    if not 0 <= j <= degree:
        raise ValueError(f"basis index {j} out of range for degree {degree}")
    t = np.asarray(t, dtype=float)
    span = tf - t0
    if np.any(t < t0) or np.any(t > tf):
        raise ValueError(f"t outside interval [{t0}, {tf}]")
    value = (
        _binom_row(degree)[j]
        * (t - t0) ** j
        * (tf - t) ** (degree - j)
        / span**degree
    )
    return float(value) if value.ndim == 0 else value


class BernsteinPoly:
    """Polynomial in Bernstein form: coefficients on an interval [t0, tf].

    `coeffs` is either shape (m+1,) for a scalar-valued polynomial or
    (m+1, d) for a d-dimensional curve.  Coefficients are copied and
    frozen; instances are safe to share across threads and workers.
    """

    __slots__ = ("coeffs", "t0", "tf", "_scalar")

    def __init__(self, coeffs, t0: float, tf: float):
        arr = np.array(coeffs, dtype=float)
        if arr.ndim not in (1, 2) or arr.shape[0] < 1:
            raise ValueError("coeffs must be a non-empty 1-D or 2-D array")
        if arr.ndim == 2 and arr.shape[1] < 1:
            raise ValueError("coefficient vectors need dimension >= 1")
        if arr.shape[0] - 1 > MAX_DEGREE:
            raise ValueError(
                f"degree {arr.shape[0] - 1} exceeds supported maximum {MAX_DEGREE}"
            )
        if not np.all(np.isfinite(arr)):
            raise ValueError("coefficients must be finite")
        t0, tf = _check_interval(t0, tf)
        arr.setflags(write=False)
        object.__setattr__(self, "coeffs", arr)
        object.__setattr__(self, "t0", t0)
        object.__setattr__(self, "tf", tf)
        object.__setattr__(self, "_scalar", arr.ndim == 1)

    def __setattr__(self, name, value):  # pragma: no cover - guard
        raise AttributeError("BernsteinPoly is immutable")

    def __reduce__(self):
        return (BernsteinPoly, (np.asarray(self.coeffs), self.t0, self.tf))

    # -- shape -----------------------------------------------------------

    @property
    def degree(self) -> int:
        return self.coeffs.shape[0] - 1

    @property
    def dim(self) -> int:
        return 1 if self._scalar else self.coeffs.shape[1]

    @property
    def is_scalar(self) -> bool:
        return self._scalar

    def _c2d(self) -> np.ndarray:
        c = self.coeffs
        return c[:, None] if self._scalar else c

    def __repr__(self) -> str:
        return (
            f"BernsteinPoly(degree={self.degree}, dim={self.dim}, "
            f"interval=[{self.t0}, {self.tf}])"
        )

    # -- evaluation ------------------------------------------------------

    def _normalize(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        span = self.tf - self.t0
        tol = 1e-9 * span
        if np.any(t < self.t0 - tol) or np.any(t > self.tf + tol):
            raise ValueError(f"t outside interval [{self.t0}, {self.tf}]")
        u = (t - self.t0) / span
        return np.clip(u, 0.0, 1.0)

    def eval(self, t):
        """Evaluate at scalar or array t by the de Casteljau recursion."""
        u = self._normalize(t)
        scalar_t = u.ndim == 0
        uu = np.atleast_1d(u)
        m = self.degree
        work = np.repeat(self._c2d()[:, None, :], uu.size, axis=1)
        one_minus = 1.0 - uu
        for r in range(1, m + 1):
            work[: m - r + 1] = (
                one_minus[None, :, None] * work[: m - r + 1]
                + uu[None, :, None] * work[1 : m - r + 2]
            )
        out = work[0]  # (k, d)
        if self._scalar:
            out = out[:, 0]
        return (out[0] if out.ndim <= 1 else out[0, :]) if scalar_t else out

    __call__ = eval

    # -- calculus --------------------------------------------------------

    def derivative(self) -> "BernsteinPoly":
        """Time derivative, represented at the same degree.

        The degree-lowered difference coefficients are elevated back one
        level so repeated application (second derivatives, squared-norm
        compositions) keeps a uniform degree.  A degree-0 input yields
        the zero polynomial.
        """
        m = self.degree
        if m == 0:
            return BernsteinPoly(np.zeros_like(self.coeffs), self.t0, self.tf)
        c = self._c2d()
        lowered = m * (c[1:] - c[:-1]) / (self.tf - self.t0)
        raised = _elevate_once(lowered)
        if self._scalar:
            raised = raised[:, 0]
        return BernsteinPoly(raised, self.t0, self.tf)

    def integral(self):
        """Definite integral over [t0, tf]: (tf-t0)/(m+1) times the coefficient sum."""
        w = (self.tf - self.t0) / (self.degree + 1)
        total = w * self.coeffs.sum(axis=0)
        return float(total) if self._scalar else total

    # -- arithmetic ------------------------------------------------------

    def _require_same_interval(self, other: "BernsteinPoly") -> None:
        scale = max(1.0, abs(self.t0), abs(self.tf))
        if abs(self.t0 - other.t0) > 1e-12 * scale or abs(self.tf - other.tf) > 1e-12 * scale:
            raise ValueError(
                f"interval mismatch: [{self.t0}, {self.tf}] vs [{other.t0}, {other.tf}]"
            )

    def elevated(self, levels: int) -> "BernsteinPoly":
        """Degree-elevated copy, pointwise identical to self."""
        if levels < 0:
            raise ValueError("elevation levels must be >= 0")
        c = self._c2d()
        for _ in range(levels):
            c = _elevate_once(c)
        if self._scalar:
            c = c[:, 0]
        return BernsteinPoly(c, self.t0, self.tf)

    def __add__(self, other):
        if not isinstance(other, BernsteinPoly):
            return NotImplemented
        return poly_sum(self, other)

    def __sub__(self, other):
        if not isinstance(other, BernsteinPoly):
            return NotImplemented
        return poly_sum(self, other.scaled(-1.0))

    def __neg__(self):
        return self.scaled(-1.0)

    def scaled(self, factor: float) -> "BernsteinPoly":
        return BernsteinPoly(self.coeffs * float(factor), self.t0, self.tf)

    def __mul__(self, other):
        if isinstance(other, BernsteinPoly):
            return poly_product(self, other)
        if isinstance(other, (int, float, np.floating, np.integer)):
            return self.scaled(float(other))
        return NotImplemented

    __rmul__ = __mul__


def _elevate_once(c2d: np.ndarray) -> np.ndarray:
    """One degree-elevation step on (m+1, d) coefficients."""
    m = c2d.shape[0] - 1
    out = np.empty((m + 2, c2d.shape[1]))
    out[0] = c2d[0]
    out[-1] = c2d[-1]
    if m >= 1:
        i = np.arange(1, m + 1)
        alpha = (i / (m + 1))[:, None]
        out[1:-1] = alpha * c2d[:-1] + (1.0 - alpha) * c2d[1:]
    return out


def degree_elevate(p: BernsteinPoly, levels: int) -> BernsteinPoly:
    """Functional alias for :meth:`BernsteinPoly.elevated`."""
    return p.elevated(levels)


@dataclass(frozen=True)
class DiffMatrix:
    """Square map from Bernstein coefficients to same-degree derivative coefficients.

    Each row sums to zero: differentiating a constant gives the zero
    polynomial.
    """

    entries: np.ndarray
    t0: float
    tf: float

    def apply(self, coeffs) -> np.ndarray:
        return self.entries @ np.asarray(coeffs, dtype=float)


def diff_matrix(degree: int, t0: float, tf: float) -> DiffMatrix:
    """Differentiation matrix for degree-`degree` polynomials on [t0, tf].

    Built as degree-lowering differences followed by one elevation, so the
    output representation matches :meth:`BernsteinPoly.derivative`.
    """
    t0, tf = _check_interval(t0, tf)
    m = degree
    if m < 0:
        raise ValueError("degree must be non-negative")
    if m == 0:
        entries = np.zeros((1, 1))
    else:
        lower = np.zeros((m, m + 1))
        scale = m / (tf - t0)
        for i in range(m):
            lower[i, i] = -scale
            lower[i, i + 1] = scale
        lift = np.zeros((m + 1, m))
        lift[0, 0] = 1.0
        lift[m, m - 1] = 1.0
        for i in range(1, m):
            lift[i, i - 1] = i / m
            lift[i, i] = 1.0 - i / m
        entries = lift @ lower
    entries.setflags(write=False)
    return DiffMatrix(entries=entries, t0=t0, tf=tf)


def poly_sum(f: BernsteinPoly, g: BernsteinPoly) -> BernsteinPoly:
    """Pointwise sum; the lower-degree operand is elevated automatically."""
    f._require_same_interval(g)
    if f.dim != g.dim:
        raise ValueError(f"dimension mismatch: {f.dim} vs {g.dim}")
    if f.degree < g.degree:
        f = f.elevated(g.degree - f.degree)
    elif g.degree < f.degree:
        g = g.elevated(f.degree - g.degree)
    return BernsteinPoly(f.coeffs + g.coeffs, f.t0, f.tf)


def _product_coeffs(fc: np.ndarray, gc: np.ndarray) -> np.ndarray:
    """Coefficient convolution for the product of two scalar coefficient rows."""
    m, n = fc.shape[0] - 1, gc.shape[0] - 1
    num = np.convolve(_binom_row(m) * fc, _binom_row(n) * gc)
    return num / _binom_row(m + n)


def poly_product(f: BernsteinPoly, g: BernsteinPoly) -> BernsteinPoly:
    """Pointwise product; degrees m and n combine to degree m + n.

    Scalar polynomials multiply directly; a scalar operand broadcasts
    across a vector one; equal-dimension operands multiply per component.
    """
    f._require_same_interval(g)
    if f.is_scalar and g.is_scalar:
        return BernsteinPoly(_product_coeffs(f.coeffs, g.coeffs), f.t0, f.tf)
    if f.is_scalar or g.is_scalar:
        scalar, vector = (f, g) if f.is_scalar else (g, f)
        cols = [
            _product_coeffs(scalar.coeffs, vector.coeffs[:, k])
            for k in range(vector.dim)
        ]
        return BernsteinPoly(np.stack(cols, axis=1), f.t0, f.tf)
    if f.dim != g.dim:
        raise ValueError(f"dimension mismatch: {f.dim} vs {g.dim}")
    cols = [
        _product_coeffs(f.coeffs[:, k], g.coeffs[:, k]) for k in range(f.dim)
    ]
    return BernsteinPoly(np.stack(cols, axis=1), f.t0, f.tf)


def poly_dot(f: BernsteinPoly, g: BernsteinPoly) -> BernsteinPoly:
    """Scalar polynomial of the pointwise dot product of two curves."""
    f._require_same_interval(g)
    if f.dim != g.dim:
        raise ValueError(f"dimension mismatch: {f.dim} vs {g.dim}")
    fc, gc = f._c2d(), g._c2d()
    acc = _product_coeffs(fc[:, 0], gc[:, 0])
    for k in range(1, fc.shape[1]):
        acc = acc + _product_coeffs(fc[:, k], gc[:, k])
    return BernsteinPoly(acc, f.t0, f.tf)


def speed_squared(p: BernsteinPoly) -> BernsteinPoly:
    """Squared speed of a curve as a scalar polynomial of degree 2m."""
    dp = p.derivative()
    return poly_dot(dp, dp)


def accel_squared(p: BernsteinPoly) -> BernsteinPoly:
    """Squared acceleration magnitude as a scalar polynomial of degree 2m."""
    ddp = p.derivative().derivative()
    return poly_dot(ddp, ddp)


def offset_squared(p: BernsteinPoly, point) -> BernsteinPoly:
    """Squared distance from a fixed point as a scalar polynomial of degree 2m."""
    point = np.asarray(point, dtype=float)
    if point.ndim == 0:
        point = point[None]
    if point.shape != (p.dim,):
        raise ValueError(f"point must have dimension {p.dim}")
    shifted = BernsteinPoly(p._c2d() - point[None, :], p.t0, p.tf)
    return poly_dot(shifted, shifted)


def coeff_bounds(p: BernsteinPoly) -> tuple[float, float]:
    """Convex-hull bounds (min coeff, max coeff) enclosing a scalar polynomial."""
    if not p.is_scalar:
        raise ValueError("coefficient bounds apply to scalar polynomials")
    return float(p.coeffs.min()), float(p.coeffs.max())
