"""Discrete differential geometry of closed polygonal curves in R^N.

Curves are stored as ``(M, N)`` arrays of points on a periodic parameter
grid. Scalar fields are ``(M,)`` arrays and vector fields ``(M, N)`` arrays
aligned with that grid.

Discretization
--------------
Second derivatives in arc length use the three-point formula normalized
by the adjacent chord lengths ``h_-`` and ``h_+``::

    x_ss[i] = 2 / (h_- + h_+) * ((x[i+1] - x[i]) / h_+ - (x[i] - x[i-1]) / h_-)

It is exact on circles sampled with equal chords and second order on
smooth constant-speed curves. Integrals use the trapezoid rule with nodal
weights ``(h_- + h_+) / 2``, which sum to the polygon length.
"""
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import kernels
from .errors import AncientFlowError

__all__ = [
    "ClosedCurve",
    "resample_constant_speed",
    "resample_with_params",
    "transport_field",
    "arc_length",
    "position_laplacian",
    "field_laplacian",
    "arc_derivative",
    "element_gradient",
    "unit_tangent",
    "normal_tangential_split",
    "turning_number",
    "check_field",
]

MIN_POINTS = 8


@dataclass(frozen=True, eq=False)
class ClosedCurve:
    """A closed polygon sampled on a uniform periodic parameter grid.

    Parameters
    ----------
    points : array_like, shape (M, N)
        Ordered positions; point ``M`` wraps to point ``0``.
    param_period : float
        Length of the parameter interval, ``2*pi`` by default.
    metadata : dict
        Free-form labels carried through IO.
    """

    points: np.ndarray
    param_period: float = 2.0 * np.pi
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        pts = np.array(self.points, dtype=np.float64, order="C")
        if pts.ndim != 2:
            raise AncientFlowError("invalid-curve", f"points must be 2-D, got shape {pts.shape}")
        m, n = pts.shape
        if m < MIN_POINTS:
            raise AncientFlowError("invalid-curve", f"need at least {MIN_POINTS} points, got {m}")
        if n < 2:
            raise AncientFlowError("invalid-curve", f"ambient dimension must be >= 2, got {n}")
        if not np.all(np.isfinite(pts)):
            raise AncientFlowError("invalid-curve", "non-finite coordinates")
        if not (np.isfinite(self.param_period) and self.param_period > 0):
            raise AncientFlowError("invalid-curve", "param_period must be positive")
        if np.min(kernels.segment_lengths(pts)) <= 0.0:
            raise AncientFlowError("invalid-curve", "consecutive points coincide")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "param_period", float(self.param_period))
        object.__setattr__(self, "metadata", dict(self.metadata))

    @property
    def M(self):
        return self.points.shape[0]

    @property
    def N(self):
        return self.points.shape[1]

    @cached_property
    def segments(self):
        """Chord lengths ``|x[i+1] - x[i]|``."""
        return kernels.segment_lengths(self.points)

    @cached_property
    def node_weights(self):
        """Trapezoid weights ``(h_- + h_+) / 2``; they sum to the polygon length."""
        h = self.segments
        return 0.5 * (h + np.roll(h, 1))

    @property
    def params(self):
        return np.arange(self.M) * (self.param_period / self.M)

    def with_points(self, points, **metadata):
        meta = dict(self.metadata)
        meta.update(metadata)
        return ClosedCurve(points, self.param_period, meta)

    def scaled(self, factor):
        return self.with_points(self.points * factor)


def check_field(curve, values, ndim=1):
    """Validate that ``values`` is aligned with ``curve``'s grid."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != ndim or arr.shape[0] != curve.M:
        raise AncientFlowError(
            "grid-mismatch", f"field of shape {arr.shape} does not match curve with M={curve.M}"
        )
    if not np.all(np.isfinite(arr)):
        raise AncientFlowError("invalid-field", "non-finite field values")
    return arr


def resample_with_params(curve, m=None, tol=1e-14):
    """Equal-chord resampling that also returns the parameter map.

    Returns
    -------
    curve : ClosedCurve
        The resampled curve with ``m`` points.
    params : ndarray
        Positions of the new points in the cumulative-chord parameter of
        the input, for carrying fields along with :func:`transport_field`.
    """
    m = curve.M if m is None else int(m)
    if m < MIN_POINTS:
        raise AncientFlowError("invalid-curve", f"need at least {MIN_POINTS} points, got {m}")
    if not np.sum(curve.segments) > 0.0:
        raise AncientFlowError("degenerate-curve", "zero total length")
    pts, params, _, _, _ = kernels.equal_chord_resample(curve.points, m, tol)
    return curve.with_points(pts), params


def resample_constant_speed(curve, m=None):
    """Resample ``curve`` to ``m`` points equally spaced in arc length.

    The new points lie on the periodic cubic spline through the input
    (parametrized by cumulative chord length), with all chords equal and
    the first point fixed. An input that already has equal chords is
    returned unchanged when ``m`` equals its size.
    """
    return resample_with_params(curve, m)[0]


def transport_field(values, curve, params):
    """Evaluate a field on ``curve`` at cumulative-chord positions ``params``."""
    vals = check_field(curve, values, np.ndim(values))
    two_d = vals.ndim == 2
    vals = np.ascontiguousarray(vals if two_d else vals[:, None])
    knots = np.concatenate([[0.0], np.cumsum(curve.segments)])
    m2 = kernels.periodic_spline_m2(knots, vals)
    out = kernels.periodic_spline_eval(knots, vals, m2, np.ascontiguousarray(params, dtype=np.float64), 0)
    return out if two_d else out[:, 0]


def arc_length(curve):
    """Polygon length, the sum of the chord lengths."""
    return float(np.sum(curve.segments))


def position_laplacian(curve):
    """Discrete ``x_ss``; under the flow convention this is ``-H``."""
    return kernels.laplacian(curve.points, curve.points)


def field_laplacian(curve, values):
    """Discrete Laplace-Beltrami operator of a scalar or vector field."""
    vals = np.asarray(values, dtype=np.float64)
    two_d = vals.ndim == 2
    vals = np.ascontiguousarray(vals if two_d else vals[:, None])
    out = kernels.laplacian(curve.points, vals)
    return out if two_d else out[:, 0]


def arc_derivative(curve, values):
    """Central difference ``(u[i+1] - u[i-1]) / (h_- + h_+)`` at the nodes."""
    vals = np.asarray(values, dtype=np.float64)
    h = curve.segments
    denom = h + np.roll(h, 1)
    diff = np.roll(vals, -1, axis=0) - np.roll(vals, 1, axis=0)
    return diff / (denom if vals.ndim == 1 else denom[:, None])


def element_gradient(curve, values):
    """Derivative ``(u[i+1] - u[i]) / h_i`` on each segment."""
    vals = np.asarray(values, dtype=np.float64)
    h = curve.segments
    diff = np.roll(vals, -1, axis=0) - vals
    return diff / (h if vals.ndim == 1 else h[:, None])


def unit_tangent(curve):
    d = np.roll(curve.points, -1, axis=0) - np.roll(curve.points, 1, axis=0)
    return d / np.linalg.norm(d, axis=1)[:, None]


def normal_tangential_split(curve, vector_field):
    """Split a vector field into normal and tangential parts.

    The tangential part is the projection onto the central-difference unit
    tangent; the normal part is the remainder, so the two sum back to the
    input up to roundoff.
    """
    v = check_field(curve, vector_field, 2)
    if v.shape[1] != curve.N:
        raise AncientFlowError("grid-mismatch", "vector field dimension differs from the curve's")
    t = unit_tangent(curve)
    tangential = np.sum(v * t, axis=1)[:, None] * t
    return v - tangential, tangential


def turning_number(curve, plane=(0, 1)):
    """Winding count of the tangent direction of the projection to ``plane``."""
    a, b = plane
    if not (0 <= a < curve.N and 0 <= b < curve.N and a != b):
        raise AncientFlowError("invalid-plane", f"plane {plane} invalid for N={curve.N}")
    d = np.roll(curve.points, -1, axis=0) - curve.points
    proj = d[:, a] + 1j * d[:, b]
    mag = np.abs(proj)
    if np.min(mag) <= 1e-12 * np.max(np.abs(d)):
        raise AncientFlowError("singular-projection", "projected tangent vanishes", index=int(np.argmin(mag)))
    ang = np.angle(proj)
    turn = np.angle(np.exp(1j * (np.roll(ang, -1) - ang)))
    return int(np.rint(np.sum(turn) / (2.0 * np.pi)))
