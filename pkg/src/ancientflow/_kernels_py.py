"""Pure numpy fallback for the compiled kernels in ``_kernels.pyx``."""
import numpy as np
from scipy.linalg import solve_banded


def segment_lengths(x):
    x = np.asarray(x, dtype=np.float64)
    return np.sqrt(np.sum((np.roll(x, -1, axis=0) - x) ** 2, axis=1))


def laplacian(x, u):
    """Chord-normalized three-point Laplacian of ``u`` on the polygon ``x``."""
    u = np.asarray(u, dtype=np.float64)
    hp = segment_lengths(x)
    hm = np.roll(hp, 1)
    fwd = (np.roll(u, -1, axis=0) - u) / hp[:, None]
    bwd = (u - np.roll(u, 1, axis=0)) / hm[:, None]
    return (2.0 / (hm + hp))[:, None] * (fwd - bwd)


def cyclic_tridiag_solve(lower, diag, upper, rhs):
    """Solve ``lower[i] y[i-1] + diag[i] y[i] + upper[i] y[i+1] = rhs[i]`` cyclically."""
    lower = np.asarray(lower, dtype=np.float64)
    diag = np.asarray(diag, dtype=np.float64)
    upper = np.asarray(upper, dtype=np.float64)
    rhs = np.asarray(rhs, dtype=np.float64)
    m = diag.shape[0]
    alpha, beta = upper[m - 1], lower[0]
    g = -diag[0]
    d = diag.copy()
    d[0] -= g
    d[m - 1] -= alpha * beta / g
    ab = np.zeros((3, m))
    ab[0, 1:] = upper[:-1]
    ab[1] = d
    ab[2, :-1] = lower[1:]
    u = np.zeros((m, 1))
    u[0, 0] = g
    u[m - 1, 0] = alpha
    sol = solve_banded((1, 1), ab, np.hstack([rhs, u]), check_finite=False)
    y, z = sol[:, :-1], sol[:, -1]
    fact = (y[0] + beta * y[m - 1] / g) / (1.0 + z[0] + beta * z[m - 1] / g)
    return y - np.outer(z, fact)


def periodic_spline_m2(knots, values):
    """Second derivatives of the periodic cubic spline through ``values``."""
    knots = np.asarray(knots, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    hp = np.diff(knots)
    hm = np.roll(hp, 1)
    rhs = 6.0 * ((np.roll(values, -1, axis=0) - values) / hp[:, None]
                 - (values - np.roll(values, 1, axis=0)) / hm[:, None])
    return cyclic_tridiag_solve(hm, 2.0 * (hm + hp), hp, rhs)


def periodic_spline_eval(knots, values, m2, query, deriv=0):
    """Evaluate the periodic spline (``deriv`` 0 or 1) at ``query``."""
    knots = np.asarray(knots, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    m = values.shape[0]
    period = knots[m] - knots[0]
    q = np.fmod(np.asarray(query, dtype=np.float64) - knots[0], period)
    q = np.where(q < 0.0, q + period, q) + knots[0]
    i = np.clip(np.searchsorted(knots, q, side="right") - 1, 0, m - 1)
    ip = np.where(i + 1 < m, i + 1, 0)
    h = (knots[i + 1] - knots[i])[:, None]
    b = (q - knots[i])[:, None] / h
    a = 1.0 - b
    if deriv == 0:
        out = (a * values[i] + b * values[ip]
               + ((a ** 3 - a) * m2[i] + (b ** 3 - b) * m2[ip]) * h * h / 6.0)
        exact = b[:, 0] == 0.0
        out[exact] = values[i[exact]]
        return out
    return ((values[ip] - values[i]) / h
            - (3.0 * a * a - 1.0) / 6.0 * h * m2[i]
            + (3.0 * b * b - 1.0) / 6.0 * h * m2[ip])


def equal_chord_resample(x, m_out, tol=1e-14, maxiter=100):
    """Place ``m_out`` points on the spline through ``x`` with equal chords.

    Returns ``(points, params, knots, m2, iterations)``.
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    h = segment_lengths(x)
    knots = np.concatenate([[0.0], np.cumsum(h)])
    length = knots[-1]
    m2 = periodic_spline_m2(knots, x)
    p = np.arange(m_out) * length / m_out
    idx = np.arange(m_out)
    it = 0
    while True:
        pts = periodic_spline_eval(knots, x, m2, p, 0)
        chords = segment_lengths(pts)
        cum = np.concatenate([[0.0], np.cumsum(chords)[:-1]])
        total = np.sum(chords)
        err = np.max(np.abs(idx[1:] * total / m_out - cum[1:])) if m_out > 1 else 0.0
        if err <= tol * total or it >= maxiter:
            break
        der = periodic_spline_eval(knots, x, m2, p, 1)
        speed = np.sqrt(np.sum(der * der, axis=1))
        p[1:] += (idx[1:] * total / m_out - cum[1:]) / speed[1:]
        it += 1
    return pts, p, knots, m2, it
