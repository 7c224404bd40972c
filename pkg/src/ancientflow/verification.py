"""Numerical checks of weighted inequalities, identities and growth rates.

Every checker returns plain numbers; :func:`make_verdict` wraps them in a
JSON-ready record and :func:`append_suite_row` collects records into a
suite table.
"""
import hashlib
import os
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, stats

from .errors import AncientFlowError
from .flow import FlowOptions, graph_projection, phi_field, run_rescaled
from .gaussian import gaussian_weights, gradient_norm_sq, weighted_inner_product, weighted_norm_sq
from .geometry import ClosedCurve, arc_derivative, check_field, element_gradient, field_laplacian, unit_tangent
from .io import atomic_write, dumps, fmt

__all__ = [
    "CodimReport",
    "effective_codimension",
    "GramSchmidtResult",
    "gram_schmidt_at",
    "InequalityResult",
    "poincare_verify",
    "LinearCaloric",
    "drift_identity_check",
    "GrowthFit",
    "growth_fit",
    "carleman_sides",
    "carleman_verify",
    "RigidityResult",
    "rigidity_experiment",
    "ANCHORS",
    "make_verdict",
    "write_verdict",
    "append_suite_row",
]


@dataclass(frozen=True)
class CodimReport:
    singular_values: np.ndarray
    spatial_rank: int
    codimension: int
    rel_threshold: float


def effective_codimension(curve, t, rel_threshold=1e-6):
    """Rank of the Gaussian-weighted span of the coordinate functions, minus one.

    The matrix is ``J_t(x_i - c_i, x_j - c_j) / J_t(1, 1)`` with ``c`` the
    weighted centroid; a singular value counts when it is at least
    ``rel_threshold`` times the largest.
    """
    w = gaussian_weights(curve, t)
    w = w / np.sum(w)
    centred = curve.points - w @ curve.points
    moment = (centred * w[:, None]).T @ centred
    sv = np.linalg.svd(moment, compute_uv=False)
    rank = int(np.sum(sv >= rel_threshold * sv[0])) if sv[0] > 0 else 0
    return CodimReport(sv, rank, max(rank - 1, 0), float(rel_threshold))


@dataclass(frozen=True)
class GramSchmidtResult:
    """``orthonormal[i] = w_i / sqrt(I_{w_i})`` with
    ``w_i = u_i - sum_{j<i} coefficients[j, i] u_j``."""

    orthonormal: np.ndarray
    coefficients: np.ndarray
    norms: np.ndarray


def gram_schmidt_at(fields, curve, t, rel_tol=1e-12):
    """Orthonormalize ``fields`` in ``J_t``, reporting coefficients in the input basis.

    Raises
    ------
    AncientFlowError
        ``"rank-deficient"`` when a field is within ``rel_tol`` (in squared
        norm) of the span of the earlier ones; ``context["index"]`` names it.
    """
    u = np.array([check_field(curve, f) for f in fields])
    k = u.shape[0]
    w = gaussian_weights(curve, t)
    basis = np.eye(k)
    out = np.zeros_like(u)
    norms = np.zeros(k)
    for i in range(k):
        vec = u[i].copy()
        comb = basis[i].copy()
        # Two passes keep J_t-orthogonality near roundoff.
        for _ in range(2):
            for j in range(i):
                c = np.sum(w * vec * out[j])
                vec -= c * out[j]
                comb -= c * basis[j]
        norm_sq = float(np.sum(w * vec * vec))
        if norm_sq <= rel_tol * float(np.sum(w * u[i] * u[i])):
            raise AncientFlowError("rank-deficient", f"field {i} depends on the earlier fields", index=i)
        norms[i] = np.sqrt(norm_sq)
        out[i] = vec / norms[i]
        basis[i] = comb / norms[i]
    # w_i = norms[i] * sum_j basis[i, j] u_j and basis[i, i] = 1 / norms[i].
    coeffs = -(basis * norms[:, None]).T
    np.fill_diagonal(coeffs, 0.0)
    return GramSchmidtResult(out, np.triu(coeffs, 1), norms)


@dataclass(frozen=True)
class InequalityResult:
    lhs: float
    rhs: float
    holds: bool
    tolerance: float = 0.0


def poincare_verify(curve, u, t, spec, level=0, mu=0.0, psi=None, orth_tol=1e-8):
    """Check ``(1 - mu) I_u(t) <= (-t / lambda_{l+1}) I_{|grad u|}(t)``.

    ``u`` must be ``J_t``-orthogonal to the constants and, when
    ``level > 0``, to each of the ``level`` functions in ``psi``.

    Raises
    ------
    AncientFlowError
        ``"not-orthogonal"`` listing the normalized residual inner products.
    """
    u = check_field(curve, u)
    level = int(level)
    if level < 0 or level + 1 >= len(spec.eigenvalues):
        raise AncientFlowError("invalid-level", f"need 0 <= l < {len(spec.eigenvalues) - 1}, got {level}")
    tests = [np.ones(curve.M)]
    if level > 0:
        if psi is None or len(psi) != level:
            raise AncientFlowError("not-orthogonal", f"need {level} near-eigenfunctions, got {0 if psi is None else len(psi)}")
        tests += [check_field(curve, p) for p in psi]
    iu = weighted_norm_sq(u, curve, t)
    residuals = [weighted_inner_product(u, p, curve, t) / np.sqrt(max(iu * weighted_norm_sq(p, curve, t), 1e-300))
                 for p in tests]
    if max(abs(r) for r in residuals) > orth_tol:
        raise AncientFlowError("not-orthogonal", "u is not orthogonal to the required functions",
                               residuals=[float(r) for r in residuals])
    lhs = (1.0 - mu) * iu
    rhs = -float(t) / float(spec.eigenvalues[level + 1]) * gradient_norm_sq(u, curve, t)
    return InequalityResult(lhs, rhs, bool(lhs <= rhs * (1.0 + 1e-6)), 1e-6)


@dataclass(frozen=True)
class LinearCaloric:
    """The coordinate function ``<x, U>`` on ``curve``."""

    direction: np.ndarray
    curve: ClosedCurve

    def __post_init__(self):
        d = np.asarray(self.direction, dtype=float)
        if d.shape != (self.curve.N,):
            raise AncientFlowError("grid-mismatch", f"direction must have {self.curve.N} entries")
        object.__setattr__(self, "direction", d)

    @property
    def field(self):
        return self.curve.points @ self.direction


def drift_identity_check(lin, t):
    """Sup-norm of ``L_t u - u / (2t) + <Phi, U>`` for ``u = <x, U>``.

    ``L_t u = u_ss + <x, T> u_s / (2t)`` with central differences for
    ``u_s``; the residual is second order in the grid spacing.
    """
    curve = lin.curve
    t = float(t)
    u = lin.field
    drift = np.sum(curve.points * unit_tangent(curve), axis=1) * arc_derivative(curve, u)
    lu = field_laplacian(curve, u) + drift / (2.0 * t)
    phi = phi_field(curve, t).vectors @ lin.direction
    return float(np.max(np.abs(lu - u / (2.0 * t) + phi)))


@dataclass(frozen=True)
class GrowthFit:
    """``I_u(t) <= C (1 - t)^d`` on the fitted window."""

    exponent_d: float
    constant_C: float
    window: tuple
    residual: float
    stderr: float = 0.0


def growth_fit(trajectory, field_name, min_samples=8, min_decades=2.0):
    """Least-squares ``d`` from ``log I_u`` against ``log(1 - t)``.

    ``C`` is the smallest constant with the envelope holding at every
    sample, so the bound is exact on the data.
    """
    samples = trajectory.samples
    if len(samples) < min_samples:
        raise AncientFlowError("too-few-samples", f"need at least {min_samples} samples, got {len(samples)}")
    t = np.array([s.t for s in samples])
    if np.any(t >= 0.0):
        raise AncientFlowError("invalid-window", "growth fits need negative times")
    if np.log10(np.max(-t) / np.min(-t)) < min_decades - 1e-9:
        raise AncientFlowError("invalid-window", f"window spans fewer than {min_decades} decades of -t")
    values = np.array([weighted_norm_sq(s.fields[field_name], s.curve, s.t) for s in samples])
    x = np.log1p(-t)
    y = np.log(values)
    fit = stats.linregress(x, y)
    d = float(fit.slope)
    c = float(np.max(values / np.exp(d * x)))
    resid = float(np.sqrt(np.mean((y - fit.intercept - d * x) ** 2)))
    return GrowthFit(d, c, (float(t.min()), float(t.max())), resid, float(fit.stderr))


def _time_derivative(u, times):
    return np.gradient(u, times, axis=0, edge_order=2)


def carleman_sides(u, curve, times, alpha, delta):
    """Both sides of the space-time Carleman inequality by quadrature.

    ``u`` has shape ``(Nt, M)`` on the tensor grid of ``times`` and the
    curve's points; the measure on the curve is plain arc length.
    """
    u = np.asarray(u, dtype=float)
    times = np.asarray(times, dtype=float)
    if u.shape != (times.size, curve.M):
        raise AncientFlowError("grid-mismatch", f"u has shape {u.shape}, expected {(times.size, curve.M)}")
    weight_t = np.exp(-alpha * times)
    nodal = curve.node_weights
    seg = curve.segments
    grad = element_gradient(curve, u.T).T
    lap = field_laplacian(curve, u.T).T
    defect = _time_derivative(u, times) - lap
    spatial_l = (alpha - 1.0 / delta) * (u * u) @ nodal + 2.0 * (grad * grad) @ seg
    spatial_r = delta * (defect * defect) @ nodal
    lhs = float(integrate.trapezoid(spatial_l * weight_t, times))
    rhs = float(integrate.trapezoid(spatial_r * weight_t, times) + (u[0] * u[0]) @ nodal * weight_t[0])
    return lhs, rhs


def carleman_verify(u, curve, times, alpha, delta, max_rel_change=0.1):
    """Check the Carleman inequality on ``curve`` x ``[times[0], times[-1]]``.

    The sides are recomputed on the grid coarsened by two in space and time;
    if either changes by more than ``max_rel_change`` (relative to the
    larger side) the data are under-resolved. Otherwise the difference,
    scaled for a second-order rule, is the error estimate and the check
    passes when ``lhs <= rhs + 2 * error``.
    """
    if not alpha > 0.0 or not delta > 0.0:
        raise AncientFlowError("invalid-parameter", "alpha and delta must be positive")
    times = np.asarray(times, dtype=float)
    if times.size < 5 or np.any(np.diff(times) <= 0.0) or not times[-1] < 0.0:
        raise AncientFlowError("invalid-window", "need at least 5 increasing negative times")
    u = np.asarray(u, dtype=float)
    lhs, rhs = carleman_sides(u, curve, times, alpha, delta)
    scale = max(abs(lhs), abs(rhs))
    error = 0.0
    if scale > 0.0:
        nt = times.size - (1 - times.size % 2)
        coarse_curve = curve.with_points(curve.points[::2]) if curve.M >= 16 and curve.M % 2 == 0 else curve
        step = 2 if coarse_curve is not curve else 1
        lc, rc = carleman_sides(u[:nt:2, ::step], coarse_curve, times[:nt:2], alpha, delta)
        lf, rf = carleman_sides(u[:nt], curve, times[:nt], alpha, delta)
        change = max(abs(lf - lc), abs(rf - rc))
        if change > max_rel_change * scale:
            raise AncientFlowError("under-resolved", f"refinement changed the sides by {change / scale:.3g} relative",
                                   lhs=lhs, rhs=rhs)
        error = (abs(lf - lc) + abs(rf - rc)) / 3.0
    return InequalityResult(lhs, rhs, bool(lhs <= rhs + 2.0 * error), 2.0 * error)


@dataclass
class RigidityResult:
    """Growth of a radial perturbation of a shrinking circle under the rescaled flow.

    ``rate`` is fitted to ``log |a(tau)|`` where ``a`` is the coefficient of
    the initial profile in the graph height; ``norm_rate`` uses the RMS
    height instead. ``status`` is ``"stable-zero"`` when the height never
    exceeds ``zero_tol``, otherwise ``"unstable"`` or ``"stable"`` by the
    sign of the rate.
    """

    rate: float
    stderr: float
    norm_rate: float
    status: str
    taus: np.ndarray
    amplitudes: np.ndarray
    norms: np.ndarray = field(repr=False, default=None)


def rigidity_experiment(reference, perturbation, amplitude, tau_window=(0.0, 1.0), opts=None, m=None,
                        zero_tol=1e-8):
    """Run the rescaled flow from ``reference`` pushed radially by ``perturbation``.

    ``perturbation`` is a profile on the reference grid (normalized to unit
    max-norm internally); ``amplitude`` must not exceed 5% of the radius.
    """
    profile = np.asarray(perturbation, dtype=float)
    m = profile.size if m is None else int(m)
    if profile.shape != (m,):
        raise AncientFlowError("grid-mismatch", f"perturbation must have {m} values")
    if not 0.0 <= amplitude <= 0.05 * reference.radius:
        raise AncientFlowError("invalid-amplitude", "amplitude must lie in [0, 0.05 * radius]")
    peak = np.max(np.abs(profile))
    shape = profile / peak if peak > 0.0 else profile
    base = reference.sample(m)
    radial = base.points / reference.radius
    start = base.with_points(base.points + (amplitude * shape)[:, None] * radial, kind="perturbed")
    opts = opts or FlowOptions(dt=1e-3, record_every=20)
    traj = run_rescaled(start, tau_window[0], tau_window[1], opts)
    taus, amps, norms = [], [], []
    denom = float(np.sum(shape * shape))
    for s in traj.samples:
        try:
            g = graph_projection(s.curve, reference, m)
        except AncientFlowError as exc:
            last = taus[-1] if taus else None
            raise AncientFlowError(exc.code, f"graph lost at tau={s.t:.6g}: {exc}", last_valid_tau=last) from exc
        taus.append(s.t)
        norms.append(float(np.sqrt(np.mean(g.phi ** 2))))
        amps.append(float(np.sum(g.phi * shape) / denom) if denom > 0.0 else 0.0)
    taus, amps, norms = np.array(taus), np.array(amps), np.array(norms)
    if np.max(norms) <= zero_tol:
        return RigidityResult(float("nan"), float("nan"), float("nan"), "stable-zero", taus, amps, norms)
    fit = stats.linregress(taus, np.log(np.abs(amps)))
    norm_fit = stats.linregress(taus, np.log(norms))
    status = "unstable" if fit.slope > 0.0 else "stable"
    return RigidityResult(float(fit.slope), float(fit.stderr), float(norm_fit.slope), status, taus, amps, norms)


#: Claim each verdict tests, keyed by operation name.
ANCHORS = {
    "flow_residual": "torus-curves-solve-the-flow",
    "solve_radius": "torus-radius-law",
    "entropy": "torus-entropy-limit",
    "rescaled_distance": "torus-tangent-flows",
    "graph_decay": "torus-graph-decay",
    "spectrum": "multicircle-spectrum",
    "rayleigh": "rayleigh-inequality",
    "poincare": "poincare-near-shrinker",
    "drift": "drift-identity-linear",
    "growth": "polynomial-growth-class",
    "carleman": "carleman-inequality",
    "rigidity": "shrinker-rigidity",
    "codim": "codimension-preserved",
    "monotonicity": "weighted-norm-monotone",
    "phi_decay": "phi-weighted-decay",
}


def inputs_digest(inputs):
    """First 16 hex digits of the SHA-256 of the canonical JSON of ``inputs``."""
    return hashlib.sha256(dumps(inputs).encode()).hexdigest()[:16]


def make_verdict(op, inputs, lhs=None, rhs=None, holds=None, fit=None, tolerance=None):
    record = {
        "op": op,
        "inputs_digest": inputs_digest(inputs),
        "lhs": lhs,
        "rhs": rhs,
        "tolerance": tolerance,
        "anchor": ANCHORS.get(op, op),
    }
    if holds is not None:
        record["holds"] = bool(holds)
    if fit is not None:
        record["fit"] = fit
    return record


def write_verdict(path, verdict):
    atomic_write(path, dumps(verdict, indent=1) + "\n")


SUITE_HEADER = ["op", "anchor", "inputs_digest", "lhs", "rhs", "holds", "tolerance"]


def append_suite_row(path, verdict):
    """Append ``verdict`` to a suite CSV, writing the header for a new file."""
    cells = []
    for key in SUITE_HEADER:
        value = verdict.get(key)
        if value is None and key == "holds":
            value = verdict.get("fit")
        cells.append("" if value is None else (fmt(value) if isinstance(value, (bool, int, float, np.number))
                                                 else str(value)))
    lines = []
    if os.path.exists(path):
        with open(path) as fh:
            lines = fh.read().splitlines()
    if not lines:
        lines = [",".join(SUITE_HEADER)]
    lines.append(",".join(cells))
    atomic_write(path, "\n".join(lines) + "\n")
