"""Explicit ancient solutions whose coordinate pairs rotate at integer speeds.

For frequencies ``k_1 < ... < k_m`` the curve in R^(2m) with pairs::

    r^(k_j^2) * (cos k_j theta, sin k_j theta)

moves by the flow exactly when ``dr/dt = -r / sum_j k_j^2 r^(2 k_j^2)``.
Fixing extinction at ``t = 0`` integrates this to
``sum_j r^(2 k_j^2) = -2 t``.
"""
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .errors import AncientFlowError
from .flow import FlowSample, FlowTrajectory, graph_projection
from .geometry import ClosedCurve, position_laplacian
from .spectrum import MultiCircle

__all__ = [
    "TorusCurveParams",
    "check_freqs",
    "radius_ode_rhs",
    "solve_radius",
    "sample",
    "sample_at",
    "flow_residual",
    "rescaled_distance_to_circle",
    "dominant_reference",
    "DecayFit",
    "graph_decay_exponent",
    "exact_trajectory",
]


def check_freqs(freqs):
    ks = tuple(int(k) for k in freqs)
    if not ks or any(k < 1 for k in ks) or any(b <= a for a, b in zip(ks, ks[1:])):
        raise AncientFlowError("invalid-freqs", f"frequencies must be strictly increasing positive integers, got {freqs}")
    if any(k != f for k, f in zip(ks, freqs)):
        raise AncientFlowError("invalid-freqs", f"frequencies must be integers, got {freqs}")
    return ks


@dataclass(frozen=True)
class TorusCurveParams:
    freqs: tuple
    r: float

    def __post_init__(self):
        object.__setattr__(self, "freqs", check_freqs(self.freqs))
        r = float(self.r)
        if not (np.isfinite(r) and r > 0.0):
            raise AncientFlowError("invalid-radius", f"r must be positive, got {self.r}")
        object.__setattr__(self, "r", r)

    @classmethod
    def at_time(cls, freqs, t):
        return cls(freqs, solve_radius(freqs, t))

    @property
    def speed_sq(self):
        """``|gamma_theta|^2 = sum k^2 r^(2k^2)``, the same at every theta."""
        k = np.array(self.freqs, dtype=float)
        return float(np.sum(k * k * self.r ** (2.0 * k * k)))

    @property
    def radius_sq(self):
        """``|gamma|^2 = sum r^(2k^2)``."""
        k = np.array(self.freqs, dtype=float)
        return float(np.sum(self.r ** (2.0 * k * k)))


def radius_ode_rhs(r, freqs):
    """``dr/dt = -r / sum_j k_j^2 r^(2 k_j^2)``."""
    r = float(r)
    if not r > 0.0:
        raise AncientFlowError("invalid-radius", f"r must be positive, got {r}")
    k = np.array(check_freqs(freqs), dtype=float)
    return -r / float(np.sum(k * k * r ** (2.0 * k * k)))


def solve_radius(freqs, t):
    """The ``r > 0`` with ``sum_j r^(2 k_j^2) = -2 t``.

    Bisection in ``log r`` on a bracket built from the smallest and largest
    exponents, then two Newton steps.
    """
    t = float(t)
    if not t < 0.0:
        raise AncientFlowError("invalid-time", f"t must be negative, got {t}")
    k2 = np.array(check_freqs(freqs), dtype=float) ** 2
    target = np.log(-2.0 * t)

    def excess(log_r):
        # log(sum exp(2 k^2 log r)) - log(-2t), stable for any size of r
        e = 2.0 * k2 * log_r
        top = np.max(e)
        return top + np.log(np.sum(np.exp(e - top))) - target

    # Each term is below the sum, so log r <= target / (2 k^2) for the
    # smallest useful k; the sum is at most m times its largest term.
    m = len(k2)
    lo = min((target - np.log(m)) / (2.0 * k) for k in k2)
    hi = max(target / (2.0 * k) for k in k2)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if excess(mid) > 0.0:
            hi = mid
        else:
            lo = mid
        if hi - lo <= 1e-12 * max(1.0, abs(mid)):
            break
    log_r = 0.5 * (lo + hi)
    for _ in range(2):
        e = 2.0 * k2 * log_r
        w = np.exp(e - np.max(e))
        slope = float(np.sum(2.0 * k2 * w) / np.sum(w))
        log_r -= excess(log_r) / slope
    return float(np.exp(log_r))


def sample(params, m):
    """The curve on the uniform grid ``theta_i = 2 pi i / M`` in R^(2m)."""
    m = int(m)
    theta = 2.0 * np.pi * np.arange(m) / m
    cols = []
    for k in params.freqs:
        amp = params.r ** (k * k)
        cols += [amp * np.cos(k * theta), amp * np.sin(k * theta)]
    return ClosedCurve(np.column_stack(cols), metadata={"kind": "torus", "freqs": list(params.freqs), "r": params.r})


def sample_at(freqs, t, m, rescale=False):
    """Sample at time ``t``; with ``rescale`` the curve is divided by ``sqrt(-t)``."""
    curve = sample(TorusCurveParams.at_time(freqs, t), m)
    if rescale:
        curve = curve.with_points(curve.points / np.sqrt(-float(t)), t=float(t))
    else:
        curve = curve.with_points(curve.points, t=float(t))
    return curve


def flow_residual(freqs, t, m):
    """Max-norm of ``d gamma / dt - gamma_ss`` with the exact time derivative."""
    params = TorusCurveParams.at_time(freqs, t)
    curve = sample(params, m)
    r = params.r
    drdt = radius_ode_rhs(r, params.freqs)
    theta = 2.0 * np.pi * np.arange(m) / m
    dgdt = np.empty_like(curve.points)
    for j, k in enumerate(params.freqs):
        rate = k * k * r ** (k * k - 1) * drdt
        dgdt[:, 2 * j] = rate * np.cos(k * theta)
        dgdt[:, 2 * j + 1] = rate * np.sin(k * theta)
    return float(np.max(np.linalg.norm(dgdt - position_laplacian(curve), axis=1)))


def _pair_index(freqs, k):
    freqs = check_freqs(freqs)
    if int(k) not in freqs:
        raise AncientFlowError("invalid-multiplicity", f"k={k} is not one of the frequencies {freqs}")
    return freqs.index(int(k))


def rescaled_distance_to_circle(freqs, t, k, m=512):
    """Sup distance from ``gamma_t / sqrt(-t)`` to the ``k``-covered circle.

    The circle has radius sqrt(2), lies in the plane of the frequency-``k``
    pair and is traversed as ``sqrt(2) (cos k theta, sin k theta)``.
    """
    j = _pair_index(freqs, k)
    curve = sample_at(freqs, t, m, rescale=True)
    theta = 2.0 * np.pi * np.arange(m) / m
    target = np.zeros_like(curve.points)
    target[:, 2 * j] = np.sqrt(2.0) * np.cos(k * theta)
    target[:, 2 * j + 1] = np.sqrt(2.0) * np.sin(k * theta)
    return float(np.max(np.linalg.norm(curve.points - target, axis=1)))


def dominant_reference(freqs):
    """The ``k_m``-covered circle of radius sqrt(2) in the last pair's plane."""
    freqs = check_freqs(freqs)
    n = 2 * len(freqs)
    return MultiCircle(freqs[-1], plane=(n - 2, n - 1), ambient_dim=n)


@dataclass(frozen=True)
class DecayFit:
    freqs: tuple
    window: tuple
    slope: float
    stderr: float
    times: np.ndarray
    eps: np.ndarray


def graph_decay_exponent(freqs, window=(-1e8, -1e4), n_times=17, m=512):
    """Fitted slope of ``log eps(t)`` against ``log(-t)``.

    ``eps(t)`` is the C0 graph height of ``gamma_t / sqrt(-t)`` over the
    ``k_m``-covered circle, at ``n_times`` log-spaced times in ``window``.
    """
    freqs = check_freqs(freqs)
    if len(freqs) < 2:
        raise AncientFlowError("no-graph-deviation", "a single frequency is an exact shrinking circle")
    t_lo, t_hi = float(window[0]), float(window[1])
    if not t_lo < t_hi < 0.0:
        raise AncientFlowError("invalid-window", f"need t_lo < t_hi < 0, got {window}")
    reference = dominant_reference(freqs)
    times = -np.logspace(np.log10(-t_lo), np.log10(-t_hi), n_times)
    eps = np.array([graph_projection(sample_at(freqs, t, m, rescale=True), reference).eps_c0 for t in times])
    fit = stats.linregress(np.log(-times), np.log(eps))
    return DecayFit(freqs, (t_lo, t_hi), float(fit.slope), float(fit.stderr), times, eps)


def exact_trajectory(freqs, times, m, fields=None):
    """A trajectory of exact samples at increasing ``times``.

    ``fields`` maps names to callables ``f(points) -> values``, for example
    a coordinate function, which are evaluated on every sample.
    """
    times = np.asarray(times, dtype=float)
    if np.any(np.diff(times) <= 0.0):
        raise AncientFlowError("invalid-window", "times must be strictly increasing")
    samples = []
    for i, t in enumerate(times):
        curve = sample_at(freqs, t, m)
        vals = {name: np.asarray(f(curve.points), dtype=float) for name, f in (fields or {}).items()}
        samples.append(FlowSample(float(t), curve, vals, i))
    return FlowTrajectory(samples, "exact")
