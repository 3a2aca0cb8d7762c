"""Planar cubic B-spline curves, least-squares fitting, and curve metrics.

Curves are clamped cubic B-splines with uniform interior knots on the
normalized domain [0, 1]. Fitting uses chord-length parameterization by
default, interpolates the first and last data points exactly, and solves
the interior control points by linear least squares. Distances between
two curves are L_p norms of the pointwise distance signal t -> |y1(t) - y2(t)|
evaluated on a uniform parameter grid (trapezoid quadrature; sup for p = inf).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import BSpline

from .signals import SampledSignal

__all__ = [
    "DEGREE",
    "Spline2D",
    "FitResult",
    "CurveMetricParams",
    "TooFewPoints",
    "DegenerateInput",
    "DomainError",
    "InvalidOrder",
    "uniform_clamped_knots",
    "chord_params",
    "fit_spline",
    "eval_spline",
    "pointwise_distance_signal",
    "distance_lp",
    "spline_to_json",
    "spline_from_json",
]

DEGREE = 3


class TooFewPoints(ValueError):
    pass


class DegenerateInput(ValueError):
    pass


class DomainError(ValueError):
    pass


class InvalidOrder(ValueError):
    pass


def uniform_clamped_knots(n_ctrl: int, degree: int = DEGREE) -> np.ndarray:
    """Clamped knot vector on [0, 1] with uniformly spaced interior knots."""
    if n_ctrl < degree + 1:
        raise TooFewPoints(f"need at least {degree + 1} control points, got {n_ctrl}")
    n_interior = n_ctrl - degree - 1
    interior = np.linspace(0.0, 1.0, n_interior + 2)[1:-1]
    return np.concatenate([np.zeros(degree + 1), interior, np.ones(degree + 1)])


@dataclass(frozen=True, eq=False)
class Spline2D:
    """Clamped cubic B-spline in the plane over t in [0, 1]."""

    control_points: np.ndarray
    closed: bool = False
    _bspline: BSpline = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        cp = np.asarray(self.control_points, dtype=float)
        if cp.ndim != 2 or cp.shape[1] != 2:
            raise ValueError("control_points must be an (n, 2) array")
        if len(cp) < DEGREE + 1:
            raise TooFewPoints(f"spline needs at least {DEGREE + 1} control points")
        if not np.all(np.isfinite(cp)):
            raise ValueError("control points must be finite")
        object.__setattr__(self, "control_points", cp)
        knots = uniform_clamped_knots(len(cp))
        object.__setattr__(self, "_bspline", BSpline(knots, cp, DEGREE, extrapolate=False))

    @property
    def n_ctrl(self) -> int:
        return len(self.control_points)

    @property
    def knots(self) -> np.ndarray:
        return self._bspline.t

    def __call__(self, t) -> np.ndarray:
        """Evaluate at parameter(s) t in [0, 1]; scalar in gives shape (2,)."""
        t = np.asarray(t, dtype=float)
        if np.any(t < 0.0) or np.any(t > 1.0):
            raise DomainError("parameter outside [0, 1]")
        # clamped basis is left-continuous at t=1; nudge inside to avoid NaN
        return self._bspline(np.clip(t, 0.0, np.nextafter(1.0, 0.0)))

    def derivative(self, order: int = 1) -> BSpline:
        return self._bspline.derivative(order)


def eval_spline(spline: Spline2D, t) -> np.ndarray:
    """Point on the curve at t; t=0 and t=1 hit the clamped endpoints."""
    return spline(t)


def chord_params(points: np.ndarray) -> np.ndarray:
    """Normalized cumulative chord-length parameters of an ordered point list."""
    pts = np.asarray(points, dtype=float)
    seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    total = seg.sum()
    if total <= 0.0:
        raise DegenerateInput("all points coincide")
    u = np.concatenate([[0.0], np.cumsum(seg)]) / total
    u[-1] = 1.0
    return u


@dataclass(frozen=True)
class FitResult:
    spline: Spline2D
    residual: float          # max euclidean deviation at the fit parameters
    params: np.ndarray       # parameter assigned to each input point


def fit_spline(points, n_ctrl: int, params=None, closed: bool = False) -> FitResult:
    """Least-squares cubic B-spline through an ordered point list.

    Parameters default to chord length; pass `params` to fit at an explicit
    grid instead. The first and last data points are interpolated exactly and
    the interior control points minimize the squared residual at the fit
    parameters.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError("points must be an (m, 2) array")
    if not np.all(np.isfinite(pts)):
        raise ValueError("points must be finite")
    if n_ctrl < DEGREE + 1:
        raise TooFewPoints(f"n_ctrl must be at least {DEGREE + 1}")
    if len(pts) < n_ctrl:
        raise TooFewPoints(f"need at least n_ctrl={n_ctrl} points, got {len(pts)}")

    u = chord_params(pts) if params is None else np.asarray(params, dtype=float)
    if len(u) != len(pts):
        raise ValueError("params must match the number of points")

    knots = uniform_clamped_knots(n_ctrl)
    u_eval = np.clip(u, 0.0, np.nextafter(1.0, 0.0))
    design = BSpline.design_matrix(u_eval, knots, DEGREE, extrapolate=False).toarray()

    # pin the endpoints, solve the interior columns
    rhs = pts - np.outer(design[:, 0], pts[0]) - np.outer(design[:, -1], pts[-1])
    interior, *_ = np.linalg.lstsq(design[:, 1:-1], rhs, rcond=None)
    ctrl = np.vstack([pts[0], interior, pts[-1]])

    spline = Spline2D(ctrl, closed=closed)
    residual = float(np.linalg.norm(spline(u) - pts, axis=1).max())
    return FitResult(spline=spline, residual=residual, params=u)


@dataclass(frozen=True)
class CurveMetricParams:
    p: float = 2.0
    samples: int = 1024

    def __post_init__(self):
        if not (self.p >= 1.0 or math.isinf(self.p)):
            raise InvalidOrder(f"L_p order must satisfy p >= 1, got {self.p}")
        if self.samples < 2:
            raise ValueError("samples must be >= 2")


def pointwise_distance_signal(y1: Spline2D, y2: Spline2D, samples: int) -> SampledSignal:
    """The signal d1: t_k -> |y1(t_k) - y2(t_k)| on a uniform grid over [0, 1]."""
    if samples < 2:
        raise ValueError("samples must be >= 2")
    t = np.linspace(0.0, 1.0, samples)
    d = np.linalg.norm(y1(t) - y2(t), axis=1)
    return SampledSignal("d1", t, d)


def distance_lp(y1: Spline2D, y2: Spline2D, params: CurveMetricParams | None = None) -> float:
    """d_p between two curves on the shared parameter domain [0, 1].

    d_p = (integral of |y1(t) - y2(t)|^p dt)^(1/p) by trapezoid quadrature;
    d_inf is the sup of the pointwise distance over the sample grid.
    """
    if params is None:
        params = CurveMetricParams()
    sig = pointwise_distance_signal(y1, y2, params.samples)
    if math.isinf(params.p):
        return float(sig.values.max())
    integral = float(np.trapezoid(sig.values ** params.p, sig.timestamps))
    return float(integral ** (1.0 / params.p))


def spline_to_json(spline: Spline2D) -> str:
    """Serialize as {"closed": bool, "control_points": [[x, y], ...]}."""
    obj = {"closed": bool(spline.closed), "control_points": spline.control_points.tolist()}
    return json.dumps(obj)


def spline_from_json(text: str) -> Spline2D:
    obj = json.loads(text)
    if not isinstance(obj, dict) or "control_points" not in obj:
        raise ValueError("spline JSON must contain 'control_points'")
    cp = obj["control_points"]
    if not isinstance(cp, list) or len(cp) < 4:
        raise TooFewPoints("spline JSON needs at least 4 control points")
    return Spline2D(np.asarray(cp, dtype=float), closed=bool(obj.get("closed", False)))
