# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels for periodic curve discretizations.

Every function here has a numpy twin in ``_kernels_py`` with the same
signature and the same floating-point algorithm; ``kernels`` picks one at
import time.
"""
import numpy as np
from libc.math cimport sqrt, fabs, fmod


cpdef segment_lengths(const double[:, ::1] x):
    cdef Py_ssize_t m = x.shape[0], n = x.shape[1], i, j, ip
    cdef double acc, d
    out = np.empty(m, dtype=np.float64)
    cdef double[::1] h = out
    for i in range(m):
        ip = i + 1 if i + 1 < m else 0
        acc = 0.0
        for j in range(n):
            d = x[ip, j] - x[i, j]
            acc += d * d
        h[i] = sqrt(acc)
    return out


cpdef laplacian(const double[:, ::1] x, const double[:, ::1] u):
    """Chord-normalized three-point Laplacian of ``u`` on the polygon ``x``."""
    cdef Py_ssize_t m = x.shape[0], k = u.shape[1], i, j, ip, im
    cdef double[::1] h = segment_lengths(x)
    out = np.empty((m, k), dtype=np.float64)
    cdef double[:, ::1] o = out
    cdef double hm, hp, s
    for i in range(m):
        ip = i + 1 if i + 1 < m else 0
        im = i - 1 if i > 0 else m - 1
        hm = h[im]
        hp = h[i]
        s = 2.0 / (hm + hp)
        for j in range(k):
            o[i, j] = s * ((u[ip, j] - u[i, j]) / hp - (u[i, j] - u[im, j]) / hm)
    return out


cdef void _cyclic_solve(double[::1] lo, double[::1] di, double[::1] up,
                        double[:, ::1] b, double[:, ::1] out,
                        double[::1] gam, double[::1] work, double[::1] z) nogil:
    # Sherman-Morrison on top of the Thomas algorithm.
    cdef Py_ssize_t m = di.shape[0], k = b.shape[1], i, j
    cdef double alpha = up[m - 1], beta = lo[0]
    cdef double g = -di[0]
    cdef double bet, fact
    # Factor once for the modified matrix.
    work[0] = di[0] - g
    for i in range(1, m - 1):
        work[i] = di[i]
    work[m - 1] = di[m - 1] - alpha * beta / g
    # u = (g, 0, ..., alpha); solve A' z = u
    bet = work[0]
    z[0] = g / bet
    for i in range(1, m):
        gam[i] = up[i - 1] / bet
        bet = work[i] - lo[i] * gam[i]
        z[i] = ((alpha if i == m - 1 else 0.0) - lo[i] * z[i - 1]) / bet
    for i in range(m - 2, -1, -1):
        z[i] -= gam[i + 1] * z[i + 1]
    for j in range(k):
        bet = work[0]
        out[0, j] = b[0, j] / bet
        for i in range(1, m):
            bet = work[i] - lo[i] * gam[i]
            out[i, j] = (b[i, j] - lo[i] * out[i - 1, j]) / bet
        for i in range(m - 2, -1, -1):
            out[i, j] -= gam[i + 1] * out[i + 1, j]
        fact = (out[0, j] + beta * out[m - 1, j] / g) / (1.0 + z[0] + beta * z[m - 1] / g)
        for i in range(m):
            out[i, j] -= fact * z[i]


cpdef cyclic_tridiag_solve(const double[::1] lower, const double[::1] diag,
                           const double[::1] upper, const double[:, ::1] rhs):
    """Solve ``lower[i] y[i-1] + diag[i] y[i] + upper[i] y[i+1] = rhs[i]`` cyclically."""
    cdef Py_ssize_t m = diag.shape[0]
    lo = np.ascontiguousarray(lower, dtype=np.float64)
    di = np.ascontiguousarray(diag, dtype=np.float64)
    up = np.ascontiguousarray(upper, dtype=np.float64)
    b = np.ascontiguousarray(rhs, dtype=np.float64)
    out = np.empty_like(b)
    gam = np.zeros(m, dtype=np.float64)
    work = np.empty(m, dtype=np.float64)
    z = np.empty(m, dtype=np.float64)
    _cyclic_solve(lo, di, up, b, out, gam, work, z)
    return out


cpdef periodic_spline_m2(const double[::1] knots, const double[:, ::1] values):
    """Second derivatives of the periodic cubic spline through ``values``.

    ``knots`` has ``M + 1`` entries; ``knots[M]`` closes the period.
    """
    cdef Py_ssize_t m = values.shape[0], k = values.shape[1], i, j, ip, im
    cdef double hm, hp
    lo = np.empty(m, dtype=np.float64)
    di = np.empty(m, dtype=np.float64)
    up = np.empty(m, dtype=np.float64)
    rhs = np.empty((m, k), dtype=np.float64)
    cdef double[::1] lov = lo, div = di, upv = up
    cdef double[:, ::1] r = rhs
    for i in range(m):
        ip = i + 1 if i + 1 < m else 0
        im = i - 1 if i > 0 else m - 1
        hm = knots[i] - knots[i - 1] if i > 0 else knots[m] - knots[m - 1]
        hp = knots[i + 1] - knots[i]
        lov[i] = hm
        div[i] = 2.0 * (hm + hp)
        upv[i] = hp
        for j in range(k):
            r[i, j] = 6.0 * ((values[ip, j] - values[i, j]) / hp - (values[i, j] - values[im, j]) / hm)
    return cyclic_tridiag_solve(lo, di, up, rhs)


cdef inline Py_ssize_t _locate(const double[::1] knots, double q) nogil:
    cdef Py_ssize_t lo = 0, hi = knots.shape[0] - 1, mid
    while hi - lo > 1:
        mid = (lo + hi) >> 1
        if knots[mid] <= q:
            lo = mid
        else:
            hi = mid
    return lo


cpdef periodic_spline_eval(const double[::1] knots, const double[:, ::1] values,
                           const double[:, ::1] m2, const double[::1] query, int deriv=0):
    """Evaluate the periodic spline (``deriv`` 0 or 1) at ``query``."""
    cdef Py_ssize_t m = values.shape[0], k = values.shape[1], nq = query.shape[0]
    cdef Py_ssize_t qi, i, ip, j
    cdef double period = knots[m] - knots[0]
    cdef double q, h, a, b
    out = np.empty((nq, k), dtype=np.float64)
    cdef double[:, ::1] o = out
    for qi in range(nq):
        q = fmod(query[qi] - knots[0], period)
        if q < 0.0:
            q += period
        q += knots[0]
        i = _locate(knots, q)
        if i >= m:
            i = m - 1
        ip = i + 1 if i + 1 < m else 0
        h = knots[i + 1] - knots[i]
        b = (q - knots[i]) / h
        a = 1.0 - b
        if deriv == 0:
            if b == 0.0:
                for j in range(k):
                    o[qi, j] = values[i, j]
            else:
                for j in range(k):
                    o[qi, j] = (a * values[i, j] + b * values[ip, j]
                                + ((a * a * a - a) * m2[i, j] + (b * b * b - b) * m2[ip, j]) * h * h / 6.0)
        else:
            for j in range(k):
                o[qi, j] = ((values[ip, j] - values[i, j]) / h
                            - (3.0 * a * a - 1.0) / 6.0 * h * m2[i, j]
                            + (3.0 * b * b - 1.0) / 6.0 * h * m2[ip, j])
    return out


cpdef equal_chord_resample(const double[:, ::1] x, Py_ssize_t m_out, double tol=1e-14, int maxiter=100):
    """Place ``m_out`` points on the spline through ``x`` with equal chords.

    Returns ``(points, params, knots, m2, iterations)`` where ``params`` are
    the new points' positions in the cumulative-chord parameter of ``x``.
    """
    cdef Py_ssize_t m = x.shape[0], n = x.shape[1], i, j, it, ip
    cdef double[::1] h = segment_lengths(x)
    knots_arr = np.empty(m + 1, dtype=np.float64)
    cdef double[::1] knots = knots_arr
    knots[0] = 0.0
    for i in range(m):
        knots[i + 1] = knots[i] + h[i]
    cdef double length = knots[m]
    m2 = periodic_spline_m2(knots_arr, x)
    params_arr = np.empty(m_out, dtype=np.float64)
    cdef double[::1] p = params_arr
    for i in range(m_out):
        p[i] = i * length / m_out
    cdef double[::1] cum = np.empty(m_out, dtype=np.float64)
    cdef double total, acc, d, err, speed, target
    cdef double[:, ::1] pts
    cdef double[:, ::1] der
    it = 0
    while True:
        pts_arr = periodic_spline_eval(knots_arr, x, m2, params_arr, 0)
        pts = pts_arr
        total = 0.0
        for i in range(m_out):
            cum[i] = total
            ip = i + 1 if i + 1 < m_out else 0
            acc = 0.0
            for j in range(n):
                d = pts[ip, j] - pts[i, j]
                acc += d * d
            total += sqrt(acc)
        err = 0.0
        for i in range(1, m_out):
            d = fabs(i * total / m_out - cum[i])
            if d > err:
                err = d
        if err <= tol * total or it >= maxiter:
            break
        der = periodic_spline_eval(knots_arr, x, m2, params_arr, 1)
        for i in range(1, m_out):
            acc = 0.0
            for j in range(n):
                acc += der[i, j] * der[i, j]
            speed = sqrt(acc)
            target = i * total / m_out
            p[i] += (target - cum[i]) / speed
        it += 1
    return pts_arr, params_arr, knots_arr, m2, it
