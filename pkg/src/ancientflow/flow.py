"""Curve shortening flow, rescaled flow and caloric fields on moving curves.

Conventions: ``H = -x_ss`` so the flow is ``dx/dt = x_ss``; the rescaled
flow ``x / sqrt(-t)`` obeys ``dx/dtau = x_ss + x / 2`` with
``tau = -log(-t)``. After every step the curve is redistributed to equal
chords, which only moves points tangentially.
"""
import os
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import AncientFlowError
from .gaussian import gaussian_measure
from .geometry import (
    ClosedCurve,
    arc_length,
    check_field,
    normal_tangential_split,
    position_laplacian,
    resample_with_params,
    transport_field,
)
from .io import write_csv, write_curve
from .spectrum import MultiCircle

__all__ = [
    "SCHEMES",
    "stable_dt",
    "mcf_step",
    "rescaled_step",
    "caloric_step",
    "PhiField",
    "phi_field",
    "GraphDecomposition",
    "graph_projection",
    "FlowOptions",
    "FlowSample",
    "FlowTrajectory",
    "run_flow",
    "run_rescaled",
    "write_trajectory",
]

SCHEMES = ("explicit", "semi-implicit")
CFL = 0.4


def stable_dt(curve):
    """Largest explicit step, ``0.4 * min(h)^2``."""
    return CFL * float(np.min(curve.segments)) ** 2


def _laplacian_bands(curve):
    hp = curve.segments
    hm = np.roll(hp, 1)
    lo = 2.0 / ((hm + hp) * hm)
    up = 2.0 / ((hm + hp) * hp)
    return lo, up


def _implicit_solve(curve, values, dt):
    """Solve ``(I - dt L) y = values`` with ``L`` built from ``curve``'s chords."""
    lo, up = _laplacian_bands(curve)
    rhs = np.ascontiguousarray(values if values.ndim == 2 else values[:, None])
    out = kernels.cyclic_tridiag_solve(-dt * lo, 1.0 + dt * (lo + up), -dt * up, rhs)
    return out if values.ndim == 2 else out[:, 0]


@dataclass(frozen=True)
class _Advance:
    curve: ClosedCurve
    moved: ClosedCurve
    params: np.ndarray


def _advance(curve, dt, scheme, drift, min_length):
    if scheme not in SCHEMES:
        raise AncientFlowError("invalid-scheme", f"scheme must be one of {SCHEMES}, got {scheme!r}")
    if not dt > 0.0:
        raise AncientFlowError("invalid-step", f"step must be positive, got {dt}")
    if arc_length(curve) < min_length:
        raise AncientFlowError("extinct", "curve length below threshold", length=arc_length(curve))
    x = curve.points
    if scheme == "explicit":
        limit = stable_dt(curve)
        if dt > limit:
            raise AncientFlowError("cfl-violation", f"dt={dt:.3g} exceeds stable limit {limit:.3g}", limit=limit)
        new = x + dt * (position_laplacian(curve) + drift * x)
    else:
        new = _implicit_solve(curve, x * (1.0 + dt * drift), dt)
    if not np.all(np.isfinite(new)):
        raise AncientFlowError("extinct", "non-finite positions after step")
    try:
        moved = curve.with_points(new)
        fresh, params = resample_with_params(moved)
    except AncientFlowError as exc:
        raise AncientFlowError("extinct", f"step collapsed the curve: {exc}") from exc
    return _Advance(fresh, moved, params)


def mcf_step(curve, dt, scheme="semi-implicit", min_length=1e-6):
    """One step of ``dx/dt = x_ss`` followed by equal-chord redistribution.

    The explicit scheme is forward Euler and needs ``dt <= 0.4 * min(h)^2``.
    The semi-implicit scheme is backward Euler in the Laplacian with the
    chords frozen at the start of the step.

    Raises
    ------
    AncientFlowError
        ``"cfl-violation"`` for an unstable explicit step, ``"extinct"``
        when the curve is shorter than ``min_length`` or collapses.
    """
    return _advance(curve, dt, scheme, 0.0, min_length).curve


def rescaled_step(curve, dtau, scheme="semi-implicit", min_length=1e-6):
    """One step of ``dx/dtau = x_ss + x / 2``; the ``x / 2`` term is explicit."""
    return _advance(curve, dtau, scheme, 0.5, min_length).curve


def caloric_step(u, curve_before, curve_after, dt, carry=None):
    """One backward Euler step of ``du/dt = u_ss`` on the updated metric.

    Parameters
    ----------
    u : ndarray, shape (M,)
        Field on ``curve_before``.
    carry : tuple, optional
        ``(moved, params)`` from a redistributed geometric step: the field is
        first carried to the redistributed points by spline interpolation
        along ``moved``. Without it points are matched by index.

    Constants are preserved exactly.
    """
    u = check_field(curve_before, u)
    if curve_after.M != curve_before.M:
        raise AncientFlowError("grid-mismatch", "curves have different grid sizes")
    if not dt > 0.0:
        raise AncientFlowError("invalid-step", f"step must be positive, got {dt}")
    if carry is not None:
        moved, params = carry
        u = transport_field(u, moved, params)
    base = u[0]
    return base + _implicit_solve(curve_after, u - base, dt)


@dataclass(frozen=True)
class PhiField:
    """``Phi = H + x_perp / (2 t)`` at time ``t``."""

    vectors: np.ndarray
    t: float

    @property
    def norms(self):
        return np.linalg.norm(self.vectors, axis=1)


def phi_field(curve, t):
    t = float(t)
    if not t < 0.0:
        raise AncientFlowError("invalid-time", f"t must be negative, got {t}")
    h = -position_laplacian(curve)
    normal, _ = normal_tangential_split(curve, curve.points)
    return PhiField(h + normal / (2.0 * t), t)


@dataclass(frozen=True)
class GraphDecomposition:
    """A curve written as a normal graph over a multiply covered circle.

    ``phi`` is the radial height on the reference grid and ``out_of_plane``
    the remaining normal components, shape ``(M, N)`` with the plane's
    columns zero.
    """

    phi: np.ndarray
    out_of_plane: np.ndarray
    eps_c0: float
    eps_c1: float
    winding: int
    reference: MultiCircle

    def reconstruct(self):
        """Points ``x + phi n + out_of_plane`` over the reference grid."""
        ref = self.reference
        m = self.phi.shape[0]
        theta = ref.angles(m)
        pts = self.out_of_plane.copy()
        rad = ref.radius + self.phi
        pts[:, ref.plane[0]] = rad * np.cos(theta)
        pts[:, ref.plane[1]] = rad * np.sin(theta)
        return ClosedCurve(pts)


def graph_projection(curve, reference, m=None):
    """Write ``curve`` as a normal graph over ``reference``.

    The in-plane angle of the curve is lifted continuously along the
    parameter, so each sheet of the multiply covered circle is matched with
    the stretch of curve that winds over it. Radius and out-of-plane
    coordinates are interpolated as periodic cubic splines in the lifted
    angle and evaluated at the reference grid angles.

    Raises
    ------
    AncientFlowError
        ``"no-graph-correspondence"`` when the winding differs from the
        multiplicity, ``"not-a-graph"`` when the lifted angle is not
        monotone or the height reaches half the radius.
    """
    if curve.N != reference.ambient_dim:
        raise AncientFlowError("no-graph-correspondence",
                               f"curve lives in R^{curve.N}, reference in R^{reference.ambient_dim}")
    m = curve.M if m is None else int(m)
    a, b = reference.plane
    z = curve.points[:, a] + 1j * curve.points[:, b]
    rho = np.abs(z)
    if np.min(rho) <= 1e-12 * max(1.0, np.max(rho)):
        raise AncientFlowError("not-a-graph", "curve meets the axis of the reference plane")
    steps = np.angle(np.roll(z, -1) / z)
    winding = int(np.rint(np.sum(steps) / (2.0 * np.pi)))
    mult = reference.multiplicity
    if winding != mult:
        raise AncientFlowError("no-graph-correspondence", f"winding {winding} differs from multiplicity {mult}")
    if np.min(steps) <= 0.0:
        raise AncientFlowError("not-a-graph", "lifted angle is not monotone")
    start = float(np.mod(np.angle(z[0]), 2.0 * np.pi))
    knots = start + np.concatenate([[0.0], np.cumsum(steps)])
    # The sheets close after 2 pi m exactly, so pin the last knot to it.
    knots[-1] = start + 2.0 * np.pi * mult
    others = [j for j in range(curve.N) if j not in (a, b)]
    data = np.ascontiguousarray(np.column_stack([rho] + [curve.points[:, j] for j in others]))
    m2 = kernels.periodic_spline_m2(knots, data)
    theta = reference.angles(m)
    vals = kernels.periodic_spline_eval(knots, data, m2, theta, 0)
    phi = vals[:, 0] - reference.radius
    out = np.zeros((m, curve.N))
    out[:, others] = vals[:, 1:]
    height = np.sqrt(phi ** 2 + np.sum(out ** 2, axis=1))
    eps_c0 = float(np.max(height))
    if eps_c0 >= 0.5 * reference.radius:
        raise AncientFlowError("not-a-graph", f"height {eps_c0:.3g} reaches half the radius")
    ds = reference.radius * (theta[1] - theta[0])
    normal_vals = np.column_stack([phi, out[:, others]])
    grad = (np.roll(normal_vals, -1, axis=0) - np.roll(normal_vals, 1, axis=0)) / (2.0 * ds)
    eps_c1 = eps_c0 + float(np.max(np.sqrt(np.sum(grad ** 2, axis=1))))
    return GraphDecomposition(phi, out, eps_c0, eps_c1, winding, reference)


@dataclass(frozen=True)
class FlowOptions:
    """Integrator settings.

    ``dt`` is the nominal step (in ``t`` or ``tau``); the actual step is
    shrunk so the run lands exactly on its end time. A sample is recorded
    every ``record_every`` steps and at both ends.
    """

    dt: float = 1e-4
    scheme: str = "semi-implicit"
    record_every: int = 1
    min_length: float = 1e-6


@dataclass
class FlowSample:
    t: float
    curve: ClosedCurve
    fields: dict = field(default_factory=dict)
    step: int = 0


@dataclass
class FlowTrajectory:
    samples: list
    scheme: str
    step_stats: list = field(default_factory=list)
    time_variable: str = "t"

    @property
    def times(self):
        return np.array([s.t for s in self.samples])

    @property
    def curves(self):
        return [s.curve for s in self.samples]

    def field(self, name):
        return [s.fields[name] for s in self.samples]

    @property
    def final(self):
        return self.samples[-1]


def _run(initial, start, stop, opts, fields, drift, variable):
    if not stop > start:
        raise AncientFlowError("invalid-window", f"need start < stop, got {start} >= {stop}")
    if variable == "t" and not stop < 0.0:
        raise AncientFlowError("invalid-window", "flow times must be negative")
    if opts.record_every < 1:
        raise AncientFlowError("invalid-step", "record_every must be >= 1")
    fields = {k: check_field(initial, v).copy() for k, v in (fields or {}).items()}
    n_steps = max(1, int(np.ceil((stop - start) / opts.dt - 1e-9)))
    dt = (stop - start) / n_steps
    curve = initial
    samples = [FlowSample(float(start), curve, dict(fields), 0)]
    stats = []
    for step in range(1, n_steps + 1):
        now = start + (step - 1) * dt
        try:
            adv = _advance(curve, dt, opts.scheme, drift, opts.min_length)
        except AncientFlowError as exc:
            raise AncientFlowError(exc.code, str(exc), time=now, step=step) from exc
        fields = {k: caloric_step(v, curve, adv.curve, dt, (adv.moved, adv.params)) for k, v in fields.items()}
        stats.append({"dt": dt, "length_change": arc_length(adv.curve) - arc_length(curve)})
        curve = adv.curve
        if step % opts.record_every == 0 or step == n_steps:
            samples.append(FlowSample(float(start + step * dt), curve, dict(fields), step))
    return FlowTrajectory(samples, opts.scheme, stats, variable)


def run_flow(initial, t0, t1, opts=None, fields=None):
    """Integrate the flow from ``t0`` to ``t1 < 0`` carrying caloric ``fields``."""
    return _run(initial, float(t0), float(t1), opts or FlowOptions(), fields, 0.0, "t")


def run_rescaled(initial, tau0, tau1, opts=None):
    """Integrate the rescaled flow over ``[tau0, tau1]``."""
    return _run(initial, float(tau0), float(tau1), opts or FlowOptions(dt=1e-3), None, 0.5, "tau")


def write_trajectory(trajectory, directory, reference=None):
    """Write one curve file per sample and ``index.csv``.

    The Gaussian measure is taken at the sample time for physical runs and
    at ``t = -1`` (the static weight) for rescaled runs.
    """
    os.makedirs(directory, exist_ok=True)
    rows = []
    for i, sample in enumerate(trajectory.samples):
        name = f"curve_{i:05d}.json"
        write_curve(os.path.join(directory, name), sample.curve)
        t_gauss = sample.t if trajectory.time_variable == "t" else -1.0
        row = [sample.step, sample.t, arc_length(sample.curve), gaussian_measure(sample.curve, t_gauss)]
        if reference is not None:
            row.append(graph_projection(sample.curve, reference).eps_c0)
        rows.append(row)
    header = ["step", trajectory.time_variable, "length", "gaussian_measure"]
    if reference is not None:
        header.append("eps_c0")
    write_csv(os.path.join(directory, "index.csv"), header, rows)
    return rows
