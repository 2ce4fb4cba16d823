# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops: projected Gauss-Seidel envelope sweeps and the
linear-time discrete Legendre transform."""

import numpy as np
cimport numpy as cnp
from libc.math cimport fabs

cnp.import_array()


cdef inline double _dmin(double a, double b) nogil:
    return a if a < b else b


cdef double _sweep_n1(double[::1] psi, const double[::1] h, int N, double dx2,
                      double omega) noexcept nogil:
    cdef int i, j, p, ip, im, jp, jm
    cdef double s, target, new, change = 0.0, d
    for i in range(N):
        ip = (i + 1) % N
        im = (i - 1 + N) % N
        for j in range(N):
            jp = (j + 1) % N
            jm = (j - 1 + N) % N
            p = i * N + j
            s = psi[ip * N + j] + psi[im * N + j] + psi[i * N + jp] + psi[i * N + jm]
            target = 0.25 * (s + dx2)
            new = psi[p] + omega * (target - psi[p])
            new = _dmin(new, h[p])
            d = fabs(new - psi[p])
            if d > change:
                change = d
            psi[p] = new
    return change


cdef double _sweep_n2(double[::1] psi, const double[::1] h, int N, double dx2,
                      double omega) noexcept nogil:
    cdef int a, b, c, d, ap, am, bp, bm, cp, cm, dp, dm
    cdef int N2 = N * N
    cdef int N3 = N2 * N
    cdef int p
    cdef double s, t, target, new, change = 0.0, diff
    for a in range(N):
        ap = ((a + 1) % N) * N3
        am = ((a - 1 + N) % N) * N3
        for b in range(N):
            bp = ((b + 1) % N) * N2
            bm = ((b - 1 + N) % N) * N2
            for c in range(N):
                cp = ((c + 1) % N) * N
                cm = ((c - 1 + N) % N) * N
                for d in range(N):
                    dp = (d + 1) % N
                    dm = (d - 1 + N) % N
                    p = a * N3 + b * N2 + c * N + d
                    # complex line z1
                    s = (psi[ap + b * N2 + c * N + d] + psi[am + b * N2 + c * N + d]
                         + psi[a * N3 + bp + c * N + d] + psi[a * N3 + bm + c * N + d])
                    target = 0.25 * (s + dx2)
                    # complex line z2
                    s = (psi[a * N3 + b * N2 + cp + d] + psi[a * N3 + b * N2 + cm + d]
                         + psi[a * N3 + b * N2 + c * N + dp] + psi[a * N3 + b * N2 + c * N + dm])
                    target = _dmin(target, 0.25 * (s + dx2))
                    # complex line z1 + z2
                    s = (psi[ap + b * N2 + cp + d] + psi[am + b * N2 + cm + d]
                         + psi[a * N3 + bp + c * N + dp] + psi[a * N3 + bm + c * N + dm])
                    target = _dmin(target, 0.25 * (s + 2.0 * dx2))
                    # complex line z1 - z2
                    s = (psi[ap + b * N2 + cm + d] + psi[am + b * N2 + cp + d]
                         + psi[a * N3 + bp + c * N + dm] + psi[a * N3 + bm + c * N + dp])
                    target = _dmin(target, 0.25 * (s + 2.0 * dx2))
                    # complex line z2 = i z1
                    s = (psi[ap + b * N2 + c * N + dp] + psi[am + b * N2 + c * N + dm]
                         + psi[a * N3 + bp + cm + d] + psi[a * N3 + bm + cp + d])
                    target = _dmin(target, 0.25 * (s + 2.0 * dx2))
                    # complex line z2 = -i z1
                    s = (psi[ap + b * N2 + c * N + dm] + psi[am + b * N2 + c * N + dp]
                         + psi[a * N3 + bp + cp + d] + psi[a * N3 + bm + cm + d])
                    target = _dmin(target, 0.25 * (s + 2.0 * dx2))
                    new = psi[p] + omega * (target - psi[p])
                    new = _dmin(new, h[p])
                    diff = fabs(new - psi[p])
                    if diff > change:
                        change = diff
                    psi[p] = new
    return change


def envelope_sweeps(double[::1] psi, const double[::1] h, int n, int N, double dx2,
                    double tol, int max_sweeps, double omega=1.0):
    """Run projected sweeps in place until the max update is <= tol.

    Returns ``(sweeps, history)`` where history holds the max update of each
    sweep.
    """
    cdef int k
    cdef double change
    history = []
    for k in range(max_sweeps):
        with nogil:
            if n == 1:
                change = _sweep_n1(psi, h, N, dx2, omega)
            else:
                change = _sweep_n2(psi, h, N, dx2, omega)
        history.append(change)
        if change <= tol:
            return k + 1, history
    return max_sweeps, history


def conjugate_sweep(const double[::1] t, const double[::1] w, const double[::1] s):
    """Discrete Legendre transform ``max_j (s t_j - w_j)`` for sorted t and s.

    Builds the lower convex hull of the samples, then walks the hull with a
    pointer that only moves forward as s increases.
    """
    cdef Py_ssize_t m = t.shape[0], q = s.shape[0]
    cdef Py_ssize_t[::1] hull = np.empty(m, dtype=np.intp)
    cdef Py_ssize_t top = 0, j, k, i0, i1, i2
    cdef double cross
    for j in range(m):
        while top >= 2:
            i1 = hull[top - 2]
            i2 = hull[top - 1]
            cross = (t[i2] - t[i1]) * (w[j] - w[i1]) - (w[i2] - w[i1]) * (t[j] - t[i1])
            if cross <= 0.0:
                top -= 1
            else:
                break
        hull[top] = j
        top += 1
    out = np.empty(q, dtype=np.float64)
    arg = np.empty(q, dtype=np.intp)
    cdef double[::1] o = out
    cdef Py_ssize_t[::1] ag = arg
    k = 0
    for j in range(q):
        while k + 1 < top:
            i0 = hull[k]
            i1 = hull[k + 1]
            if s[j] * t[i1] - w[i1] >= s[j] * t[i0] - w[i0]:
                k += 1
            else:
                break
        o[j] = s[j] * t[hull[k]] - w[hull[k]]
        ag[j] = hull[k]
    return out, arg
