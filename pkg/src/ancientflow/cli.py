"""Command-line experiments.

Every command writes its tables and curves under ``--out``, a
``verdict.json`` with the checks it ran and one ``suite.csv`` row per
check. Exit status is 0 when every check holds, 1 when one fails and 2 on
a usage error. Floats are written with 17 significant digits, so
identical arguments give byte-identical files.
"""
import argparse
import json
import os
import re
import sys

import numpy as np

from . import __version__
from .errors import AncientFlowError
from .flow import FlowOptions, run_flow, run_rescaled, write_trajectory
from .gaussian import LAMBDA_CIRCLE, EntropyOptions, entropy, gaussian_measure, weighted_inner_product, weighted_norm_sq
from .geometry import ClosedCurve, arc_length
from .io import atomic_write, dumps, read_curve, write_csv, write_curve
from .spectrum import MultiCircle, rayleigh_check, spectrum, transplant
from .torus import (
    TorusCurveParams,
    check_freqs,
    dominant_reference,
    exact_trajectory,
    graph_decay_exponent,
    rescaled_distance_to_circle,
    sample,
    sample_at,
    solve_radius,
)
from .verification import (
    LinearCaloric,
    append_suite_row,
    carleman_verify,
    drift_identity_check,
    effective_codimension,
    growth_fit,
    make_verdict,
    poincare_verify,
    rigidity_experiment,
)

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
GLOBAL_DEFAULTS = {"grid": None, "out": "out", "seed": 0, "config": None, "quiet": False}

# Errors that describe a failed check rather than bad input.
CHECK_FAILURES = {"under-resolved", "optimizer-nonconvergence", "extinct", "not-a-graph",
                  "no-graph-correspondence", "eigensolver-failure"}


class UsageError(Exception):
    pass


def _floats(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _freqs(text):
    try:
        return check_freqs([int(v) for v in text.split(",") if v.strip()])
    except (ValueError, AncientFlowError) as exc:
        raise argparse.ArgumentTypeError(f"bad frequency list {text!r}: {exc}")


def _window(text):
    parts = text.split(":")
    try:
        lo, hi = (float(p) for p in parts)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected LO:HI, got {text!r}")
    if not lo < hi:
        raise argparse.ArgumentTypeError(f"window must satisfy LO < HI, got {text!r}")
    return (lo, hi)


class Run:
    """Collects verdicts and writes the output directory."""

    def __init__(self, args):
        self.args = args
        self.out = args.out
        self.verdicts = []
        os.makedirs(self.out, exist_ok=True)

    def path(self, name):
        return os.path.join(self.out, name)

    def check(self, op, inputs, holds, lhs=None, rhs=None, fit=None, tolerance=None):
        verdict = make_verdict(op, inputs, lhs=lhs, rhs=rhs, holds=holds, fit=fit, tolerance=tolerance)
        self.verdicts.append(verdict)
        append_suite_row(self.path("suite.csv"), verdict)
        return verdict

    def finish(self):
        atomic_write(self.path("verdict.json"), dumps(self.verdicts, indent=1) + "\n")
        ok = all(v.get("holds", True) for v in self.verdicts)
        if not self.args.quiet:
            for v in self.verdicts:
                state = "INFO" if "holds" not in v else ("PASS" if v["holds"] else "FAIL")
                print(f"{state} {v['op']} [{v['anchor']}] lhs={v['lhs']} rhs={v['rhs']}")
        return EXIT_OK if ok else EXIT_FAIL


def _grid(args, default):
    m = default if args.grid is None else args.grid
    if m < 16:
        raise UsageError(f"--grid must be at least 16, got {m}")
    return m


def _log_times(window, n):
    lo, hi = window
    if not lo < hi < 0.0:
        raise UsageError(f"time window must be negative with LO < HI, got {window}")
    return -np.logspace(np.log10(-lo), np.log10(-hi), n)


# -- torus ---------------------------------------------------------------------

def cmd_torus(args, run):
    freqs = args.freqs
    m = _grid(args, 512)
    t = args.t
    params = TorusCurveParams.at_time(freqs, t)
    write_curve(run.path("curve.json"), sample_at(freqs, t, m))
    run.check("solve_radius", {"freqs": freqs, "t": t},
              abs(params.radius_sq + 2.0 * t) <= 1e-10 * max(1.0, -2.0 * t),
              lhs=params.radius_sq, rhs=-2.0 * t, tolerance=1e-10)

    times = _log_times(args.window, args.n_times)
    rows = [[tt, solve_radius(freqs, tt)] for tt in times]
    write_csv(run.path("radius.csv"), ["t", "r"], rows)
    if len(freqs) == 1:
        err = max(abs(r - np.sqrt(-2.0 * tt)) for tt, r in rows)
        run.check("solve_radius", {"freqs": freqs, "window": args.window}, err <= 1e-8, lhs=err, rhs=0.0,
                  tolerance=1e-8)

    k_lo, k_hi = freqs[0], freqs[-1]
    dist = [[tt, rescaled_distance_to_circle(freqs, tt, k_hi, m), rescaled_distance_to_circle(freqs, tt, k_lo, m)]
            for tt in times]
    write_csv(run.path("tangent.csv"), ["t", f"dist_k{k_hi}", f"dist_k{k_lo}"], dist)

    if len(freqs) >= 2:
        fit = graph_decay_exponent(freqs, args.window, args.n_times, m)
        expected = -(0.5 - freqs[-2] ** 2 / (2.0 * freqs[-1] ** 2))
        write_csv(run.path("decay.csv"), ["freqs", "t_lo", "t_hi", "slope", "stderr"],
                  [[" ".join(map(str, freqs)), fit.window[0], fit.window[1], fit.slope, fit.stderr]])
        run.check("graph_decay", {"freqs": freqs, "window": args.window, "grid": m},
                  abs(fit.slope - expected) <= 0.02, lhs=fit.slope, rhs=expected, fit=fit.slope, tolerance=0.02)

    if args.entropy_sweep is not None:
        opts = EntropyOptions(seed=args.seed)
        sweep = _log_times(args.entropy_sweep, args.sweep_points)
        erows = []
        for tt in sweep:
            res = entropy(sample_at(freqs, tt, m), opts)
            erows.append([tt, res.value, res.value / LAMBDA_CIRCLE])
        write_csv(run.path("entropy.csv"), ["t", "entropy", "ratio"], erows)
        target = k_hi * LAMBDA_CIRCLE
        final = erows[0][1]  # earliest time, closest to the backward limit
        run.check("entropy", {"freqs": freqs, "window": args.entropy_sweep, "grid": m, "seed": args.seed},
                  abs(final - target) <= 5e-3 * target, lhs=final, rhs=target, tolerance=5e-3)


# -- spectrum ------------------------------------------------------------------

def _reference(mult, radius=None):
    return MultiCircle(mult) if radius is None else MultiCircle(mult, radius=radius)


def cmd_spectrum(args, run):
    m = _grid(args, 1024)
    ref = _reference(args.multiplicity, args.radius)
    spec = spectrum(ref.sample(m), args.count)
    write_csv(run.path("spectrum.csv"), ["index", "eigenvalue", "group"],
              [[i, lam, g] for i, (lam, g) in enumerate(zip(spec.eigenvalues, spec.groups))])
    atomic_write(run.path("eigenfunctions.json"),
                 dumps({"grid": m, "multiplicity": ref.multiplicity, "fields": spec.eigenfunctions}, indent=1) + "\n")
    if ref.is_shrinker:
        exact = [0.0] + [((i + 1) // 2) ** 2 / (2.0 * ref.multiplicity ** 2) for i in range(1, args.count + 1)]
        err = float(np.max(np.abs(spec.eigenvalues - exact)))
        tol = 5e-4 * (1024.0 / m) ** 2 * max(1.0, exact[-1])
        run.check("spectrum", {"multiplicity": ref.multiplicity, "count": args.count, "grid": m},
                  err <= tol, lhs=err, rhs=tol, tolerance=tol)
    gram = spec.gram()
    gerr = float(np.max(np.abs(gram - np.eye(gram.shape[0]))))
    run.check("spectrum", {"orthonormality": True, "multiplicity": ref.multiplicity, "grid": m},
              gerr <= 1e-8, lhs=gerr, rhs=1e-8, tolerance=1e-8)


# -- flows ---------------------------------------------------------------------

def _initial(args, m, t):
    if args.curve is not None:
        return read_curve(args.curve)
    if args.torus is not None:
        return sample_at(args.torus, t, m)
    return _reference(args.circle_mult, np.sqrt(-2.0 * t)).sample(m)


def cmd_flow(args, run):
    m = _grid(args, 256)
    if not args.t0 < args.t1 < 0.0:
        raise UsageError("need t0 < t1 < 0")
    initial = _initial(args, m, args.t0)
    opts = FlowOptions(dt=args.dt, scheme=args.scheme, record_every=args.record_every)
    fields = {f"x{i + 1}": initial.points[:, i] for i in range(initial.N)}
    traj = run_flow(initial, args.t0, args.t1, opts, fields)
    write_trajectory(traj, run.path("trajectory"))
    lengths = np.array([arc_length(c) for c in traj.curves])
    worst = float(np.max(np.diff(lengths))) if lengths.size > 1 else 0.0
    run.check("flow_length", {"t0": args.t0, "t1": args.t1, "dt": args.dt, "grid": m, "scheme": args.scheme},
              worst < 1e-12, lhs=worst, rhs=0.0, tolerance=1e-12)
    _monotone_check(run, traj, sorted(fields), {"t0": args.t0, "t1": args.t1, "dt": args.dt, "grid": m})


def _monotone_check(run, traj, names, inputs):
    rows, worst = [], -np.inf
    series = {k: np.array([weighted_norm_sq(s.fields[k], s.curve, s.t) for s in traj.samples]) for k in names}
    for i, s in enumerate(traj.samples):
        rows.append([s.t] + [series[k][i] for k in names])
    for k in names:
        if series[k].size > 1:
            worst = max(worst, float(np.max(np.diff(series[k]) / np.abs(series[k][:-1]))))
    write_csv(run.path("weighted_norms.csv"), ["t"] + [f"I_{k}" for k in names], rows)
    run.check("monotonicity", inputs, worst <= 1e-6, lhs=worst, rhs=1e-6, tolerance=1e-6)


def cmd_rescaled(args, run):
    m = _grid(args, 512)
    if args.torus is not None:
        if not args.t < 0.0:
            raise UsageError("--t must be negative")
        initial = sample_at(args.torus, args.t, m, rescale=True)
        ref = dominant_reference(args.torus)
    else:
        ref = _reference(args.multiplicity)
        psi = ref.angles(m)
        base = ref.sample(m)
        bump = args.amplitude * np.cos(args.mode * psi / ref.multiplicity)
        initial = base.with_points(base.points * (1.0 + bump / ref.radius)[:, None])
    traj = run_rescaled(initial, args.tau0, args.tau1, FlowOptions(dt=args.dt, record_every=args.record_every))
    rows = write_trajectory(traj, run.path("trajectory"), ref)
    run.check("rescaled_graph", {"tau0": args.tau0, "tau1": args.tau1, "grid": m},
              True, lhs=rows[0][-1], rhs=rows[-1][-1])


def cmd_caloric(args, run):
    m = _grid(args, 256)
    if not args.t0 < args.t1 < 0.0:
        raise UsageError("need t0 < t1 < 0")
    initial = _initial(args, m, args.t0)
    rng = np.random.default_rng(args.seed)
    p = 2.0 * np.pi * np.arange(m) / m
    fields = {}
    for i in range(args.fields):
        coef = rng.normal(size=(args.max_mode + 1, 2))
        fields[f"u{i:02d}"] = sum(a * np.cos(k * p) + b * np.sin(k * p) for k, (a, b) in enumerate(coef))
    traj = run_flow(initial, args.t0, args.t1, FlowOptions(dt=args.dt, record_every=args.record_every), fields)
    _monotone_check(run, traj, sorted(fields), {"t0": args.t0, "t1": args.t1, "dt": args.dt, "grid": m,
                                                "seed": args.seed, "fields": args.fields})


# -- codim and entropy ---------------------------------------------------------

def cmd_codim(args, run):
    m = _grid(args, 512)
    if not args.t < 0.0:
        raise UsageError("--t must be negative")
    r = solve_radius(args.torus, args.t) if args.r is None else args.r
    curve = sample(TorusCurveParams(args.torus, r), m)
    rep = effective_codimension(curve, args.t, args.threshold)
    atomic_write(run.path("codim.json"), dumps({
        "freqs": list(args.torus), "t": args.t, "r": r, "singular_values": rep.singular_values,
        "spatial_rank": rep.spatial_rank, "codimension": rep.codimension, "rel_threshold": rep.rel_threshold,
    }, indent=1) + "\n")
    if not args.quiet:
        print(f"codimension {rep.codimension} (rank {rep.spatial_rank})")
    holds = None if args.expect is None else rep.codimension == args.expect
    run.check("codim", {"freqs": args.torus, "t": args.t, "r": r, "grid": m, "threshold": args.threshold},
              holds, lhs=rep.codimension, rhs=args.expect, tolerance=args.threshold)


def cmd_entropy(args, run):
    m = _grid(args, 512)
    if args.curve is not None:
        curve = read_curve(args.curve)
    elif args.torus is not None:
        curve = sample_at(args.torus, args.t, m)
    else:
        curve = _reference(args.circle_mult, args.radius).sample(m)
    res = entropy(curve, EntropyOptions(restarts=args.restarts, seed=args.seed))
    atomic_write(run.path("entropy.json"), dumps(res.to_json(), indent=1) + "\n")
    if not args.quiet:
        print(f"entropy {res.value:.17g} = {res.value / LAMBDA_CIRCLE:.17g} x circle")
    run.check("entropy", {"grid": m, "seed": args.seed, "restarts": args.restarts}, True, lhs=res.value,
              rhs=LAMBDA_CIRCLE)


# -- verify --------------------------------------------------------------------

def verify_rayleigh(args, run):
    m = _grid(args, 512)
    ref = _reference(args.sigma_mult)
    spec = spectrum(ref.sample(m), max(args.level + 2, 4))
    rng = np.random.default_rng(args.seed)
    psi = ref.angles(m) / ref.multiplicity
    failures, worst = 0, 0.0
    for _ in range(args.trials):
        coef = rng.normal(size=(8, 2))
        u = sum(a * np.cos(k * psi) + b * np.sin(k * psi) for k, (a, b) in enumerate(coef))
        res = rayleigh_check(u, spec, args.level)
        failures += not res.holds
        worst = max(worst, res.lhs / res.rhs)
    run.check("rayleigh", {"mult": ref.multiplicity, "level": args.level, "grid": m, "seed": args.seed,
                           "trials": args.trials}, failures == 0, lhs=worst, rhs=1.0, tolerance=1e-6)


def verify_poincare(args, run):
    m = _grid(args, 512)
    if args.torus is not None:
        ref = dominant_reference(args.torus)
    else:
        ref = _reference(args.sigma_mult)
    sigma = ref.sample(m)
    spec = spectrum(sigma, max(args.level + 2, 4))
    mode = args.mode if args.mode is not None else (args.level + 2) // 2
    u = np.cos(mode * ref.angles(m) / ref.multiplicity)
    curve, t = sigma, -1.0
    psi = list(spec.eigenfunctions[1:args.level + 1]) if args.level > 0 else None
    if args.torus is not None:
        curve = sample_at(args.torus, args.torus_t, m, rescale=True)
        u = transplant(u, sigma, curve)
        one = np.ones(m)
        u = u - weighted_inner_product(u, one, curve, t) / gaussian_measure(curve, t)
        if psi is not None:
            psi = [transplant(p, sigma, curve) for p in psi]
    res = poincare_verify(curve, u, t, spec, args.level, args.mu, psi)
    run.check("poincare", {"mult": ref.multiplicity, "level": args.level, "mu": args.mu, "mode": mode,
                           "torus": list(args.torus) if args.torus else None, "grid": m},
              res.holds, lhs=res.lhs, rhs=res.rhs, tolerance=res.tolerance)


def _trig_field(rng, psi, times, modes=4):
    out = np.zeros((times.size, psi.size))
    span = times[-1] - times[0]
    for k in range(modes + 1):
        for j in range(3):
            a, b = rng.normal(size=2)
            tpart = np.cos(np.pi * j * (times - times[0]) / span)
            out += np.outer(tpart, a * np.cos(k * psi) + b * np.sin(k * psi))
    return out


def verify_carleman(args, run):
    m = _grid(args, 256)
    ref = _reference(args.sigma_mult)
    sigma = ref.sample(m)
    times = np.linspace(args.t1, args.t2, args.nt)
    psi = ref.angles(m) / ref.multiplicity
    if args.trials:
        rng = np.random.default_rng(args.seed)
        failures, worst = 0, -np.inf
        for _ in range(args.trials):
            res = carleman_verify(_trig_field(rng, psi, times), sigma, times, args.alpha, args.delta)
            failures += not res.holds
            worst = max(worst, res.lhs / res.rhs)
        run.check("carleman", {"mult": ref.multiplicity, "alpha": args.alpha, "delta": args.delta, "grid": m,
                               "seed": args.seed, "trials": args.trials}, failures == 0, lhs=worst, rhs=1.0)
        return
    k = args.caloric_mode
    rate = k * k / (2.0 * ref.multiplicity ** 2)
    u = np.exp(-rate * times)[:, None] * np.cos(k * psi)[None, :]
    res = carleman_verify(u, sigma, times, args.alpha, args.delta)
    run.check("carleman", {"mult": ref.multiplicity, "alpha": args.alpha, "delta": args.delta, "mode": k,
                           "grid": m, "window": [args.t1, args.t2]}, res.holds, lhs=res.lhs, rhs=res.rhs,
              tolerance=res.tolerance)


def verify_drift(args, run):
    if args.grid is not None and args.grid < 128:
        raise UsageError("--grid must be at least 128 for the refinement study")
    grids = [64, 128, 256, 512] if args.grid is None else [args.grid // 8, args.grid // 4, args.grid // 2, args.grid]
    direction = np.array(args.direction)
    res = []
    for m in grids:
        if args.torus is not None:
            curve = sample_at(args.torus, args.t, m)
        else:
            p = 2.0 * np.pi * np.arange(m) / m
            curve = ClosedCurve(np.column_stack([1.3 * np.cos(p) + 0.2 * np.cos(2 * p) + 0.4, np.sin(p) + 0.1]))
        if direction.size != curve.N:
            raise UsageError(f"--direction needs {curve.N} entries")
        res.append(drift_identity_check(LinearCaloric(direction, curve), args.t))
    res = np.array(res)
    floor = 1e-10
    if np.all(res[-2:] > floor):
        slope = float(-np.polyfit(np.log(grids), np.log(res), 1)[0])
        holds = abs(slope - 2.0) <= 0.2
    else:
        slope = float("nan")
        holds = bool(res[-1] <= floor)
    write_csv(run.path("drift.csv"), ["grid", "residual"], [[g, r] for g, r in zip(grids, res)])
    run.check("drift", {"torus": list(args.torus) if args.torus else None, "t": args.t,
                        "direction": list(direction), "grids": grids}, holds, lhs=float(res[-1]), rhs=floor,
              fit=slope)


def verify_growth(args, run):
    m = _grid(args, 512)
    freqs = args.torus
    times = _log_times(args.window, args.n_times)
    idx = args.coordinate
    if not 0 <= idx < 2 * len(freqs):
        raise UsageError(f"--coordinate must be below {2 * len(freqs)}")
    fields = {"u": (lambda p: np.ones(p.shape[0])) if args.constant else (lambda p: p[:, idx])}
    fit = growth_fit(exact_trajectory(freqs, times, m, fields), "u")
    holds = True
    if args.expect is not None:
        holds = abs(fit.exponent_d - args.expect) <= args.tol
    run.check("growth", {"freqs": freqs, "window": args.window, "coordinate": idx, "constant": args.constant,
                         "grid": m}, holds, lhs=fit.exponent_d, rhs=args.expect, fit=fit.exponent_d,
              tolerance=args.tol)


def verify_rigidity(args, run):
    m = _grid(args, 512)
    ref = _reference(args.sigma_mult)
    profile = np.cos(args.mode * ref.angles(m) / ref.multiplicity)
    res = rigidity_experiment(ref, profile, args.amplitude, (0.0, args.tau), FlowOptions(dt=args.dt, record_every=20))
    expected = 1.0 - args.mode ** 2 / (2.0 * ref.multiplicity ** 2)
    write_csv(run.path("rigidity.csv"), ["tau", "amplitude", "rms"],
              [[a, b, c] for a, b, c in zip(res.taus, res.amplitudes, res.norms)])
    if res.status == "stable-zero":
        holds = args.amplitude == 0.0
    else:
        holds = abs(res.rate - expected) <= args.tol
    run.check("rigidity", {"mult": ref.multiplicity, "mode": args.mode, "amplitude": args.amplitude,
                           "tau": args.tau, "grid": m}, holds, lhs=res.rate, rhs=expected, fit=res.status,
              tolerance=args.tol)


VERIFIERS = {
    "poincare": verify_poincare,
    "rayleigh": verify_rayleigh,
    "carleman": verify_carleman,
    "drift": verify_drift,
    "growth": verify_growth,
    "rigidity": verify_rigidity,
}


# -- parser --------------------------------------------------------------------

def _add_initial(p, curve=True):
    if curve:
        p.add_argument("--curve", help="curve JSON file")
    p.add_argument("--torus", type=_freqs, help="torus curve frequencies, e.g. 1,2")
    p.add_argument("--circle-mult", type=int, default=1, help="multiplicity of a shrinking circle")


def build_parser():
    # Global flags may appear at any level; SUPPRESS keeps an inner parser
    # from overwriting a value given to an outer one.
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--grid", type=int, default=argparse.SUPPRESS, help="number of grid points")
    common.add_argument("--out", default=argparse.SUPPRESS, help="output directory (default: out)")
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="seed (default: 0)")
    common.add_argument("--config", default=argparse.SUPPRESS, help="JSON file of defaults; flags override it")
    common.add_argument("--quiet", action="store_true", default=argparse.SUPPRESS)

    parser = argparse.ArgumentParser(prog="ancientflow", parents=[common],
                                     description="Experiments with ancient curve shortening flows.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("torus", parents=[common], help="torus curve tables")
    p.add_argument("--freqs", type=_freqs, required=True)
    p.add_argument("--t", type=float, default=-1.0)
    p.add_argument("--window", type=_window, default=(-1e8, -1e4))
    p.add_argument("--n-times", type=int, default=17)
    p.add_argument("--entropy-sweep", type=_window)
    p.add_argument("--sweep-points", type=int, default=5)
    p.set_defaults(func=cmd_torus)

    p = sub.add_parser("spectrum", parents=[common], help="drift Laplacian spectrum of a covered circle")
    p.add_argument("--multiplicity", type=int, default=1)
    p.add_argument("--radius", type=float)
    p.add_argument("--count", type=int, default=6)
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("flow", parents=[common], help="curve shortening flow")
    _add_initial(p)
    p.add_argument("--t0", type=float, default=-1.0)
    p.add_argument("--t1", type=float, default=-0.5)
    p.add_argument("--dt", type=float, default=1e-4)
    p.add_argument("--scheme", choices=["explicit", "semi-implicit"], default="semi-implicit")
    p.add_argument("--record-every", type=int, default=100)
    p.set_defaults(func=cmd_flow)

    p = sub.add_parser("rescaled", parents=[common], help="rescaled flow near a covered circle")
    p.add_argument("--torus", type=_freqs)
    p.add_argument("--t", type=float, default=-1e6)
    p.add_argument("--multiplicity", type=int, default=1)
    p.add_argument("--mode", type=int, default=0)
    p.add_argument("--amplitude", type=float, default=0.01)
    p.add_argument("--tau0", type=float, default=0.0)
    p.add_argument("--tau1", type=float, default=1.0)
    p.add_argument("--dt", type=float, default=1e-3)
    p.add_argument("--record-every", type=int, default=50)
    p.set_defaults(func=cmd_rescaled)

    p = sub.add_parser("caloric", parents=[common], help="random caloric fields along a flow")
    _add_initial(p)
    p.add_argument("--t0", type=float, default=-1.0)
    p.add_argument("--t1", type=float, default=-0.5)
    p.add_argument("--dt", type=float, default=1e-3)
    p.add_argument("--fields", type=int, default=20)
    p.add_argument("--max-mode", type=int, default=4)
    p.add_argument("--record-every", type=int, default=1)
    p.set_defaults(func=cmd_caloric)

    p = sub.add_parser("codim", parents=[common], help="effective codimension of a torus curve")
    p.add_argument("--torus", type=_freqs, required=True)
    p.add_argument("--t", type=float, default=-1.0)
    p.add_argument("--r", type=float, help="radius parameter; taken from --t when omitted")
    p.add_argument("--r-from-t", action="store_true", help="take the radius from --t (the default)")
    p.add_argument("--threshold", type=float, default=1e-6)
    p.add_argument("--expect", type=int, help="expected codimension; without it the result is informational")
    p.set_defaults(func=cmd_codim)

    p = sub.add_parser("entropy", parents=[common], help="entropy of a curve")
    _add_initial(p)
    p.add_argument("--t", type=float, default=-1.0)
    p.add_argument("--radius", type=float)
    p.add_argument("--restarts", type=int, default=8)
    p.set_defaults(func=cmd_entropy)

    p = sub.add_parser("verify", parents=[common], help="inequality and rate checks")
    vsub = p.add_subparsers(dest="check", required=True)

    v = vsub.add_parser("poincare", parents=[common], help="weighted Poincare inequality near a covered circle")
    v.add_argument("--sigma-mult", type=int, default=2)
    v.add_argument("--level", type=int, default=0)
    v.add_argument("--mode", type=int)
    v.add_argument("--mu", type=float, default=0.0)
    v.add_argument("--torus", type=_freqs)
    v.add_argument("--torus-t", type=float, default=-1e6)

    v = vsub.add_parser("rayleigh", parents=[common], help="Rayleigh quotient bound on random fields")
    v.add_argument("--sigma-mult", type=int, default=2)
    v.add_argument("--level", type=int, default=0)
    v.add_argument("--trials", type=int, default=100)

    v = vsub.add_parser("carleman", parents=[common], help="space-time Carleman inequality")
    v.add_argument("--sigma-mult", type=int, default=2)
    v.add_argument("--alpha", type=float, default=4.0)
    v.add_argument("--delta", type=float, default=1.0)
    v.add_argument("--caloric-mode", type=int, default=1)
    v.add_argument("--t1", type=float, default=-2.0)
    v.add_argument("--t2", type=float, default=-1.0)
    v.add_argument("--nt", type=int, default=201)
    v.add_argument("--trials", type=int, default=0, help="random space-time fields instead of a caloric mode")

    v = vsub.add_parser("drift", parents=[common], help="drift identity for linear functions, with refinement order")
    v.add_argument("--torus", type=_freqs)
    v.add_argument("--t", type=float, default=-1.0)
    v.add_argument("--direction", type=_floats, default=[1.0, 0.0])

    v = vsub.add_parser("growth", parents=[common], help="polynomial growth exponent of a caloric field")
    v.add_argument("--torus", type=_freqs, default=(1, 2))
    v.add_argument("--window", type=_window, default=(-1e8, -1e4))
    v.add_argument("--n-times", type=int, default=17)
    v.add_argument("--coordinate", type=int, default=0)
    v.add_argument("--constant", action="store_true")
    v.add_argument("--expect", type=float)
    v.add_argument("--tol", type=float, default=0.02)

    v = vsub.add_parser("rigidity", parents=[common], help="mode growth rate under the rescaled flow")
    v.add_argument("--sigma-mult", type=int, default=1)
    v.add_argument("--mode", type=int, default=0)
    v.add_argument("--amplitude", type=float, default=0.01)
    v.add_argument("--tau", type=float, default=1.0)
    v.add_argument("--dt", type=float, default=1e-3)
    v.add_argument("--tol", type=float, default=0.05)
    for name, func in VERIFIERS.items():
        vsub.choices[name].set_defaults(func=func)
    return parser


def _subparser_for(parser, argv):
    """The innermost subparser named on the command line, for config defaults."""
    node = parser
    rest = list(argv)
    while True:
        subs = [a for a in node._actions if isinstance(a, argparse._SubParsersAction)]
        if not subs:
            return node
        names = subs[0].choices
        hit = next((i for i, a in enumerate(rest) if a in names), None)
        if hit is None:
            return node
        node = names[rest[hit]]
        rest = rest[hit + 1:]


def _apply_config(parser, argv):
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if known.config is None:
        return
    try:
        with open(known.config) as fh:
            config = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {known.config}: {exc}")
    if not isinstance(config, dict):
        raise UsageError("config must be a JSON object")
    target = _subparser_for(parser, argv)
    dests = {a.dest: a for a in target._actions if a.dest not in ("help", "config", "func")}
    values = {}
    for key, value in config.items():
        dest = key.replace("-", "_")
        if dest not in dests:
            raise UsageError(f"unknown config key {key!r}")
        action = dests[dest]
        if action.type is not None and isinstance(value, str):
            try:
                value = action.type(value)
            except argparse.ArgumentTypeError as exc:
                raise UsageError(f"config key {key!r}: {exc}")
        values[dest] = value
    target.set_defaults(**values)


_NEGATIVE = re.compile(r"^-(\d|\.\d)")


def _join_negative_values(argv):
    """Rewrite ``--opt -1e8:-1e4`` as ``--opt=-1e8:-1e4``.

    argparse only recognizes plain negative numbers as values, not
    exponents or windows.
    """
    out = []
    i = 0
    while i < len(argv):
        tok = argv[i]
        if tok.startswith("--") and "=" not in tok and i + 1 < len(argv) and _NEGATIVE.match(argv[i + 1]):
            out.append(f"{tok}={argv[i + 1]}")
            i += 2
        else:
            out.append(tok)
            i += 1
    return out


def main(argv=None):
    argv = _join_negative_values(sys.argv[1:] if argv is None else list(argv))
    parser = build_parser()
    try:
        _apply_config(parser, argv)
    except UsageError as exc:
        print(f"ancientflow: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    for key, value in GLOBAL_DEFAULTS.items():
        if not hasattr(args, key):
            setattr(args, key, value)
    try:
        run = Run(args)
        args.func(args, run)
        return run.finish()
    except UsageError as exc:
        print(f"ancientflow: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except AncientFlowError as exc:
        print(f"ancientflow: error: {exc}", file=sys.stderr)
        return EXIT_FAIL if exc.code in CHECK_FAILURES else EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
