"""Drift-Laplacian spectra on compact shrinker curves.

The weighted Dirichlet form ``int <grad u, grad v> exp(-|x|^2/4)`` and the
weighted L2 form ``int u v exp(-|x|^2/4)`` (both normalized by
``(4 pi)^(-1/2)``) define the operator that is self-adjoint for the
Gaussian weight; eigenvalues are reported for ``-L`` and are therefore
non-negative. On the m-covered circle of radius sqrt(2) they are
``k^2 / (2 m^2)``, each nonzero value twice.

Forms are assembled with linear elements on the periodic grid: the
stiffness uses the segment-averaged Gaussian factor and the mass is the
lumped (trapezoid) form, identical to the nodal quadrature of ``J_t``.
"""
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from . import kernels
from .errors import AncientFlowError
from .geometry import ClosedCurve, check_field, element_gradient

__all__ = [
    "MultiCircle",
    "SpectrumResult",
    "RayleighResult",
    "drift_forms",
    "spectrum",
    "rayleigh_check",
    "transplant",
    "group_multiplicities",
]

SQRT2 = float(np.sqrt(2.0))


@dataclass(frozen=True)
class MultiCircle:
    """The circle of ``radius`` traversed ``multiplicity`` times in ``plane``."""

    multiplicity: int
    radius: float = SQRT2
    plane: tuple = (0, 1)
    ambient_dim: int = 2

    def __post_init__(self):
        if int(self.multiplicity) < 1:
            raise AncientFlowError("invalid-multiplicity", "multiplicity must be >= 1")
        if not self.radius > 0:
            raise AncientFlowError("invalid-radius", "radius must be positive")
        a, b = self.plane
        if a == b or not (0 <= a < self.ambient_dim and 0 <= b < self.ambient_dim):
            raise AncientFlowError("invalid-plane", f"plane {self.plane} invalid in R^{self.ambient_dim}")
        object.__setattr__(self, "multiplicity", int(self.multiplicity))
        object.__setattr__(self, "plane", (int(a), int(b)))

    @property
    def is_shrinker(self):
        return abs(self.radius - SQRT2) <= 1e-12

    def angles(self, m):
        """Lifted in-plane angle of each grid point, in ``[0, 2 pi multiplicity)``."""
        return 2.0 * np.pi * self.multiplicity * np.arange(m) / m

    def sample(self, m):
        theta = self.angles(m)
        pts = np.zeros((m, self.ambient_dim))
        pts[:, self.plane[0]] = self.radius * np.cos(theta)
        pts[:, self.plane[1]] = self.radius * np.sin(theta)
        return ClosedCurve(pts, metadata={"kind": "multicircle", "multiplicity": self.multiplicity,
                                          "radius": self.radius})


def _static_weights(curve):
    g = np.exp(-np.sum(curve.points ** 2, axis=1) / 4.0) / np.sqrt(4.0 * np.pi)
    return g


def drift_forms(curve):
    """Weighted stiffness and mass matrices on ``curve``.

    Returns
    -------
    stiffness : ndarray, shape (M, M)
        Symmetric positive semidefinite; annihilates constants.
    mass : ndarray, shape (M, M)
        Diagonal, positive definite.
    """
    m = curve.M
    if m < 16:
        raise AncientFlowError("grid-too-coarse", f"need M >= 16, got {m}")
    g = _static_weights(curve)
    ke = 0.5 * (g + np.roll(g, -1)) / curve.segments
    idx = np.arange(m)
    nxt = np.roll(idx, -1)
    stiffness = np.zeros((m, m))
    np.add.at(stiffness, (idx, idx), ke)
    np.add.at(stiffness, (nxt, nxt), ke)
    np.add.at(stiffness, (idx, nxt), -ke)
    np.add.at(stiffness, (nxt, idx), -ke)
    mass = np.diag(g * curve.node_weights)
    return stiffness, mass


def group_multiplicities(eigenvalues, rel_tol=1e-6):
    """Run-length grouping of a sorted eigenvalue list; returns group labels."""
    labels = []
    group = 0
    for i, lam in enumerate(eigenvalues):
        if i > 0 and abs(lam - eigenvalues[i - 1]) > rel_tol * max(1.0, abs(lam)):
            group += 1
        labels.append(group)
    return labels


@dataclass
class SpectrumResult:
    """Lowest eigenpairs of ``-L`` on a shrinker curve.

    ``eigenvalues[0]`` is the zero eigenvalue of the constants; the paired
    nonzero eigenvalues follow in non-decreasing order. ``eigenfunctions``
    has shape ``(K + 1, M)`` and is orthonormal in the weighted mass form.
    """

    curve: ClosedCurve
    eigenvalues: np.ndarray
    eigenfunctions: np.ndarray
    groups: list = field(default_factory=list)
    residual: float = 0.0

    @property
    def multiplicities(self):
        return [self.groups.count(g) for g in sorted(set(self.groups))]

    def gram(self):
        w = _static_weights(self.curve) * self.curve.node_weights
        return (self.eigenfunctions * w) @ self.eigenfunctions.T


def spectrum(curve, count, group_tol=1e-6):
    """Lowest ``count + 1`` eigenpairs of the weighted drift Laplacian."""
    count = int(count)
    if count < 1 or count > curve.M // 4:
        raise AncientFlowError("invalid-count", f"count must be in [1, M/4], got {count}")
    stiffness, mass = drift_forms(curve)
    d = np.sqrt(np.diag(mass))
    a = stiffness / np.outer(d, d)
    try:
        vals, vecs = linalg.eigh(a, subset_by_index=[0, count], check_finite=False)
    except linalg.LinAlgError as exc:
        raise AncientFlowError("eigensolver-failure", str(exc))
    funcs = (vecs / d[:, None]).T
    # Fix signs so each eigenfunction's largest entry is positive.
    sign = np.sign(funcs[np.arange(len(vals)), np.argmax(np.abs(funcs), axis=1)])
    funcs = funcs * sign[:, None]
    residual = float(np.max(np.abs(stiffness @ funcs.T - (mass @ funcs.T) * vals)))
    if not residual < 1e-6 * max(1.0, float(np.max(np.abs(stiffness)))):
        raise AncientFlowError("eigensolver-failure", "large residual", residual=residual)
    vals = np.maximum(vals, 0.0)
    return SpectrumResult(curve, vals, funcs, group_multiplicities(vals, group_tol), residual)


@dataclass(frozen=True)
class RayleighResult:
    lhs: float
    rhs: float
    holds: bool


def rayleigh_check(u, spec, l):
    """Check ``int u^2 <= (1 / lambda_{l+1}) int |grad u|^2`` on the shrinker.

    ``u`` is first projected off eigenfunctions ``0..l`` in the weighted
    mass form, so ``l = 0`` bounds by the first nonzero eigenvalue.
    """
    l = int(l)
    if l < 0 or l + 1 >= len(spec.eigenvalues):
        raise AncientFlowError("invalid-level", f"need 0 <= l < {len(spec.eigenvalues) - 1}, got {l}")
    curve = spec.curve
    u = check_field(curve, u)
    g = _static_weights(curve)
    w = g * curve.node_weights
    basis = spec.eigenfunctions[: l + 1]
    u = u - basis.T @ (basis @ (w * u))
    lhs = float(np.sum(w * u * u))
    ge = 0.5 * (g + np.roll(g, -1))
    du = element_gradient(curve, u)
    energy = float(np.sum(ge * du * du * curve.segments))
    lam = float(spec.eigenvalues[l + 1])
    rhs = energy / lam if lam > 0 else np.inf
    return RayleighResult(lhs, rhs, bool(lhs <= rhs * (1.0 + 1e-6)))


def _plane_phase(points, frame):
    """Unit complex direction of each point in the plane spanned by ``frame``."""
    z = points @ frame[0] + 1j * (points @ frame[1])
    mag = np.abs(z)
    if np.min(mag) <= 1e-12 * np.max(mag):
        return None
    return z / mag


def _winding(phase):
    steps = np.angle(np.roll(phase, -1) / phase)
    return int(np.rint(np.sum(steps) / (2.0 * np.pi)))


def _spline_at(values, period, query):
    m = values.shape[0]
    knots = np.arange(m + 1) * (period / m)
    col = np.ascontiguousarray(values.reshape(m, -1))
    m2 = kernels.periodic_spline_m2(knots, col)
    return kernels.periodic_spline_eval(knots, col, m2, np.ascontiguousarray(query, dtype=np.float64), 0)


def transplant(values, source, target):
    """Carry a field from ``source`` to ``target`` along the parameter map.

    Both curves are read as functions of their own uniform parameter with a
    shared period, and values are interpolated with a periodic cubic
    spline. The curves must wind the same number of times around the
    origin of ``source``'s principal plane, and corresponding parameters
    must point within a quarter turn of each other in that plane.
    """
    vals = check_field(source, values)
    if source.N != target.N or abs(source.param_period - target.param_period) > 1e-12:
        raise AncientFlowError("no-graph-correspondence", "ambient dimension or parameter period differ")
    _, _, vt = np.linalg.svd(source.points, full_matrices=False)
    src = _plane_phase(source.points, vt[:2])
    tgt = _plane_phase(target.points, vt[:2])
    if src is None or tgt is None:
        raise AncientFlowError("no-graph-correspondence", "curve passes through the plane's origin")
    wind = _winding(src)
    if wind == 0 or wind != _winding(tgt):
        raise AncientFlowError("no-graph-correspondence", "incompatible winding")
    carried = _spline_at(np.column_stack([src.real, src.imag]), source.param_period, target.params)
    if np.min(carried[:, 0] * tgt.real + carried[:, 1] * tgt.imag) <= 0.0:
        raise AncientFlowError("no-graph-correspondence", "parametrizations are out of phase")
    return _spline_at(vals, source.param_period, target.params)[:, 0]
