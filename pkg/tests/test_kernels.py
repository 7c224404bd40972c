import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ancientflow import kernels

py = kernels.get_backend("python")
try:
    cy = kernels.get_backend("cython")
except ImportError:  # pragma: no cover - extension not built
    cy = None

needs_cython = pytest.mark.skipif(cy is None, reason="compiled backend not built")


def wobbly(m, seed, dim=2):
    rng = np.random.default_rng(seed)
    p = np.sort(rng.uniform(0.0, 2.0 * np.pi, m))
    r = 1.0 + 0.2 * np.sin(3 * p + rng.uniform())
    pts = np.zeros((m, dim))
    pts[:, 0], pts[:, 1] = r * np.cos(p), r * np.sin(p)
    if dim > 2:
        pts[:, 2:] = 0.1 * np.sin(np.outer(p, np.arange(1, dim - 1)))
    return pts


def dense_cyclic(lower, diag, upper):
    m = diag.size
    a = np.diag(diag)
    for i in range(m):
        a[i, (i - 1) % m] += lower[i]
        a[i, (i + 1) % m] += upper[i]
    return a


def test_backend_switch_round_trip():
    before = kernels.BACKEND
    prev = kernels.set_backend("python")
    assert prev == before
    assert kernels.BACKEND == "python"
    kernels.set_backend(before)
    assert kernels.BACKEND == before


def test_unknown_backend():
    with pytest.raises(ValueError):
        kernels.get_backend("fortran")


@pytest.mark.parametrize("mod", [py, pytest.param(cy, marks=needs_cython)], ids=["python", "cython"])
def test_cyclic_solve_matches_dense(mod, rng):
    m = 37
    lower, upper = rng.uniform(-1, 0, m), rng.uniform(-1, 0, m)
    diag = 3.0 + rng.uniform(0, 1, m)
    rhs = rng.normal(size=(m, 3))
    got = mod.cyclic_tridiag_solve(lower, diag, upper, rhs)
    want = np.linalg.solve(dense_cyclic(lower, diag, upper), rhs)
    np.testing.assert_allclose(got, want, rtol=0, atol=1e-12)


@pytest.mark.parametrize("mod", [py, pytest.param(cy, marks=needs_cython)], ids=["python", "cython"])
def test_spline_interpolates_and_is_periodic(mod):
    m = 24
    knots = np.concatenate([[0.0], np.cumsum(np.linspace(0.5, 1.5, m))])
    vals = np.ascontiguousarray(np.column_stack([np.sin(2 * np.pi * knots[:-1] / knots[-1])]))
    m2 = mod.periodic_spline_m2(knots, vals)
    np.testing.assert_array_equal(mod.periodic_spline_eval(knots, vals, m2, knots[:-1], 0), vals)
    q = np.array([0.3, 7.1])
    np.testing.assert_allclose(mod.periodic_spline_eval(knots, vals, m2, q + knots[-1], 0),
                               mod.periodic_spline_eval(knots, vals, m2, q, 0), atol=1e-13)


@pytest.mark.parametrize("mod", [py, pytest.param(cy, marks=needs_cython)], ids=["python", "cython"])
def test_laplacian_of_equal_chord_circle_is_exact(mod):
    th = 2 * np.pi * np.arange(50) / 50
    x = np.column_stack([np.cos(th), np.sin(th)]) * 3.0
    np.testing.assert_allclose(mod.laplacian(x, x), -x / 9.0, atol=1e-13)


@needs_cython
@settings(max_examples=30, deadline=None)
@given(m=st.integers(8, 200), seed=st.integers(0, 2 ** 31), dim=st.integers(2, 5))
def test_backends_agree(m, seed, dim):
    x = wobbly(m, seed, dim)
    np.testing.assert_allclose(cy.segment_lengths(x), py.segment_lengths(x), rtol=1e-14)
    np.testing.assert_allclose(cy.laplacian(x, x), py.laplacian(x, x), rtol=1e-10, atol=1e-9)
    h = py.segment_lengths(x)
    knots = np.concatenate([[0.0], np.cumsum(h)])
    m2c, m2p = cy.periodic_spline_m2(knots, x), py.periodic_spline_m2(knots, x)
    np.testing.assert_allclose(m2c, m2p, rtol=1e-9, atol=1e-9 * np.max(np.abs(m2p)))
    q = np.linspace(-1.0, knots[-1] + 1.0, 3 * m)
    for d in (0, 1):
        np.testing.assert_allclose(cy.periodic_spline_eval(knots, x, m2p, q, d),
                                   py.periodic_spline_eval(knots, x, m2p, q, d), atol=1e-11)
    pc, parc = cy.equal_chord_resample(x, m)[:2]
    pp, parp = py.equal_chord_resample(x, m)[:2]
    np.testing.assert_allclose(pc, pp, atol=1e-10)
    np.testing.assert_allclose(parc, parp, atol=1e-10)


@pytest.mark.parametrize("mod", [py, pytest.param(cy, marks=needs_cython)], ids=["python", "cython"])
def test_resample_gives_equal_chords(mod):
    x = wobbly(120, 3)
    pts = mod.equal_chord_resample(x, 90)[0]
    h = mod.segment_lengths(pts)
    assert np.ptp(h) <= 1e-12 * h.mean()
    np.testing.assert_array_equal(pts[0], x[0])
