"""Compare the compiled and numpy kernel backends.

Run with ``python benchmarks/bench_kernels.py``. Each kernel is timed on
random closed curves of several sizes, followed by a full flow run that
exercises the per-step solve and redistribution.
"""
import argparse
import timeit

import numpy as np

from ancientflow import kernels
from ancientflow.flow import FlowOptions, run_flow
from ancientflow.torus import sample_at


def _curve(m, rng):
    p = 2.0 * np.pi * np.arange(m) / m
    r = 1.0 + 0.1 * rng.normal(size=(4, 1)).T @ np.array([np.cos(k * p) for k in range(1, 5)])
    return np.ascontiguousarray(np.column_stack([r[0] * np.cos(p), r[0] * np.sin(p), 0.1 * np.sin(3 * p)]))


def _cases(m, rng):
    x = _curve(m, rng)
    h = kernels.segment_lengths(x)
    knots = np.concatenate([[0.0], np.cumsum(h)])
    m2 = kernels.periodic_spline_m2(knots, x)
    query = np.sort(rng.uniform(0.0, knots[-1], m))
    lo, up = 1.0 / h, 1.0 / np.roll(h, 1)
    return {
        "laplacian": lambda: kernels.laplacian(x, x),
        "cyclic_tridiag_solve": lambda: kernels.cyclic_tridiag_solve(-lo, 1.0 + lo + up, -up, x),
        "periodic_spline_eval": lambda: kernels.periodic_spline_eval(knots, x, m2, query, 0),
        "equal_chord_resample": lambda: kernels.equal_chord_resample(x, m),
    }


def bench(sizes, repeat):
    rows = []
    for m in sizes:
        for backend in ("python", "cython"):
            kernels.set_backend(backend)
            for name, fn in _cases(m, np.random.default_rng(0)).items():
                best = min(timeit.repeat(fn, number=20, repeat=repeat)) / 20
                rows.append((name, m, backend, best))
    for backend in ("python", "cython"):
        kernels.set_backend(backend)
        curve = sample_at((1, 2), -1.0, 512)
        best = min(timeit.repeat(lambda: run_flow(curve, -1.0, -0.9, FlowOptions(dt=1e-3, record_every=50)),
                                 number=1, repeat=repeat))
        rows.append(("run_flow(100 steps)", 512, backend, best))
    return rows


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", default="256,1024,4096")
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    try:
        kernels.get_backend("cython")
    except ImportError:
        raise SystemExit("compiled backend not built; run `pip install -e .` first")
    rows = bench([int(s) for s in args.sizes.split(",")], args.repeat)
    times = {(n, m, b): t for n, m, b, t in rows}
    print(f"{'kernel':<24}{'M':>6}{'python [us]':>14}{'cython [us]':>14}{'speedup':>9}")
    for (name, m) in dict.fromkeys((n, m) for n, m, _, _ in rows):
        py, cy = times[(name, m, "python")], times[(name, m, "cython")]
        print(f"{name:<24}{m:>6}{py * 1e6:>14.1f}{cy * 1e6:>14.1f}{py / cy:>9.1f}")


if __name__ == "__main__":
    main()
