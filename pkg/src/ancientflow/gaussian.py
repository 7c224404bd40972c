"""Gaussian-weighted integrals on curves.

With ``t < 0`` the time-``t`` inner product is::

    J_t(u, v) = (-4 pi t)^(-1/2) * integral of u v exp(|x|^2 / (4 t)) ds

and ``I_u(t) = J_t(u, u)``. The F-functional and entropy use the static
weight ``(4 pi)^(-1/2) exp(-|x|^2 / 4)``. The intrinsic dimension is fixed
at 1.
"""
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .errors import AncientFlowError
from .geometry import check_field, element_gradient

__all__ = [
    "LAMBDA_CIRCLE",
    "gaussian_weights",
    "gaussian_measure",
    "weighted_inner_product",
    "weighted_norm_sq",
    "gradient_norm_sq",
    "f_functional",
    "EntropyOptions",
    "EntropyResult",
    "entropy",
]

#: Entropy of the round circle, sqrt(2 pi / e).
LAMBDA_CIRCLE = float(np.sqrt(2.0 * np.pi / np.e))


def _check_time(t):
    t = float(t)
    if not t < 0.0:
        raise AncientFlowError("invalid-time", f"t must be negative, got {t}")
    return t


def gaussian_weights(curve, t):
    """Nodal quadrature weights of ``J_t``."""
    t = _check_time(t)
    r2 = np.sum(curve.points ** 2, axis=1)
    return (-4.0 * np.pi * t) ** -0.5 * np.exp(r2 / (4.0 * t)) * curve.node_weights


def gaussian_measure(curve, t):
    """``J_t(1, 1)``, the Gaussian-weighted length at time ``t``."""
    return float(np.sum(gaussian_weights(curve, t)))


def weighted_inner_product(u, v, curve, t):
    u = check_field(curve, u)
    v = check_field(curve, v)
    return float(np.sum(gaussian_weights(curve, t) * u * v))


def weighted_norm_sq(u, curve, t):
    """``I_u(t)``."""
    return weighted_inner_product(u, u, curve, t)


def gradient_norm_sq(u, curve, t):
    """``I_{|grad u|}(t)``; the gradient is constant on each segment and the
    Gaussian factor is averaged over the segment's endpoints."""
    t = _check_time(t)
    u = check_field(curve, u)
    g = np.exp(np.sum(curve.points ** 2, axis=1) / (4.0 * t))
    ge = 0.5 * (g + np.roll(g, -1))
    du = element_gradient(curve, u)
    return float((-4.0 * np.pi * t) ** -0.5 * np.sum(ge * du * du * curve.segments))


def f_functional(curve, s, y=None):
    """Gaussian integral of the curve dilated by ``s`` and shifted by ``y``."""
    s = float(s)
    if not s > 0.0:
        raise AncientFlowError("invalid-scale", f"scale must be positive, got {s}")
    x = s * curve.points
    if y is not None:
        x = x + np.asarray(y, dtype=float)
    r2 = np.sum(x * x, axis=1)
    return float((4.0 * np.pi) ** -0.5 * s * np.sum(np.exp(-r2 / 4.0) * curve.node_weights))


@dataclass(frozen=True)
class EntropyOptions:
    """Settings of the entropy optimizer.

    The scale grid spans ``scale_span`` decades either side of
    ``sqrt(2) / rms_radius``; the simplex stage runs ``restarts`` starts
    (``y = 0``, the centred shift, then seeded random shifts).
    """

    grid_points: int = 121
    scale_span: float = 3.0
    restarts: int = 8
    seed: int = 0
    xatol: float = 1e-9
    fatol: float = 1e-13
    max_evals: int = 4000


@dataclass
class EntropyResult:
    value: float
    argmax_scale: float
    argmax_shift: np.ndarray
    optimizer_trace: list = field(default_factory=list, repr=False)

    def to_json(self):
        return {
            "value": self.value,
            "s": self.argmax_scale,
            "y": [float(v) for v in self.argmax_shift],
            "trace_len": len(self.optimizer_trace),
        }


def entropy(curve, opts=None):
    """Estimate ``lambda(curve)``, the sup of the F-functional over scales and shifts.

    Stage one scans a log grid of scales at ``y = 0`` and refines the best
    bracket by golden-section search in ``log s``. Stage two runs
    Nelder-Mead over ``(log s, y)`` from several starts, with the shift
    confined to a ball of radius ``4 + diameter`` (of the dilated curve)
    around the dilated centroid. The result is the best value evaluated
    anywhere, so it is a certified lower bound.

    Raises
    ------
    AncientFlowError
        ``"optimizer-nonconvergence"`` when no simplex run converges; the
        best-so-far result is attached as ``context["best"]``.
    """
    opts = opts or EntropyOptions()
    pts = curve.points
    n = curve.N
    rms = float(np.sqrt(np.mean(np.sum(pts ** 2, axis=1))))
    s_ref = np.sqrt(2.0) / rms
    diameter = float(np.max(np.linalg.norm(pts[:, None, :] - pts[None, ::max(1, curve.M // 64), :], axis=2)))
    centroid = np.mean(pts, axis=0)
    trace = []
    best = {"value": -np.inf, "s": s_ref, "y": np.zeros(n)}

    def evaluate(log_s, y):
        s = float(np.exp(log_s))
        radius = 4.0 + s * diameter
        offset = y + s * centroid
        norm = float(np.linalg.norm(offset))
        if norm > radius:
            y = offset * (radius / norm) - s * centroid
        value = f_functional(curve, s, y)
        trace.append((s, np.array(y, dtype=float), value))
        if value > best["value"]:
            best.update(value=value, s=s, y=np.array(y, dtype=float))
        return value

    zero = np.zeros(n)
    half = opts.grid_points // 2
    log_grid = np.log(s_ref) + np.linspace(-1.0, 1.0, 2 * half + 1) * opts.scale_span * np.log(10.0)
    values = np.array([evaluate(ls, zero) for ls in log_grid])
    k = int(np.clip(np.argmax(values), 1, len(log_grid) - 2))
    optimize.minimize_scalar(
        lambda ls: -evaluate(ls, zero),
        bracket=(log_grid[k - 1], log_grid[k], log_grid[k + 1]),
        method="golden",
        options={"xtol": 1e-10},
    )

    rng = np.random.default_rng(opts.seed)
    starts = [np.concatenate([[np.log(best["s"])], zero])]
    s0 = best["s"]
    starts.append(np.concatenate([[np.log(s0)], -s0 * centroid]))
    while len(starts) < opts.restarts:
        jitter = rng.normal(scale=0.5, size=n)
        starts.append(np.concatenate([[np.log(s0) + rng.normal(scale=0.3)], -s0 * centroid + jitter]))

    converged = False
    for x0 in starts[: opts.restarts]:
        res = optimize.minimize(
            lambda z: -evaluate(z[0], z[1:]),
            x0,
            method="Nelder-Mead",
            options={"xatol": opts.xatol, "fatol": opts.fatol, "maxfev": opts.max_evals, "adaptive": True},
        )
        converged = converged or bool(res.success)

    result = EntropyResult(best["value"], best["s"], best["y"], trace)
    if not converged:
        raise AncientFlowError("optimizer-nonconvergence", "no simplex run converged", best=result)
    return result
