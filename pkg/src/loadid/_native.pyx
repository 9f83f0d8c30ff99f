# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: composite-load RK4 simulation and the Fréchet DP.

Mirrors ``_purekernels`` operation for operation; see that module for the
reference semantics.
"""

from libc.math cimport isfinite

import numpy as np

cimport numpy as cnp

cnp.import_array()


cdef inline void _deriv(
    double ed, double eq, double w, double u,
    double rs, double xprime, double den, double dx, double tprime,
    double two_h, double ta, double tb, double tc, double t0,
    double *out,
) noexcept nogil:
    cdef double i_d = (rs * (u - ed) - xprime * eq) / den
    cdef double i_q = (-rs * eq - xprime * (u - ed)) / den
    out[0] = -(ed + dx * i_q) / tprime - (w - 1.0) * eq
    out[1] = -(eq - dx * i_d) / tprime + (w - 1.0) * ed
    out[2] = -(t0 * (ta * w * w + tb * w + tc) - (ed * i_d + eq * i_q)) / two_h


def simulate_pq(
    double[::1] v,
    double dt,
    int substeps,
    double v0,
    double pzip0,
    double qzip0,
    double ap,
    double bp,
    double cp,
    double aq,
    double bq,
    double cq,
    double rs,
    double xprime,
    double dx,
    double tprime,
    double two_h,
    double ta,
    double tb,
    double tc,
    double t0,
    double ed0,
    double eq0,
    double w0,
):
    cdef Py_ssize_t n = v.shape[0]
    p_arr = np.empty(n, dtype=np.float64)
    q_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] p_out = p_arr
    cdef double[::1] q_out = q_arr
    cdef double den = rs * rs + xprime * xprime
    cdef double h = dt / substeps
    cdef double ed = ed0, eq = eq0, w = w0
    cdef double u, r, i_d, i_q
    cdef double k1[3]
    cdef double k2[3]
    cdef double k3[3]
    cdef double k4[3]
    cdef Py_ssize_t k
    cdef int step
    cdef Py_ssize_t fail = -1

    with nogil:
        for k in range(n):
            u = v[k]
            if not (isfinite(ed) and isfinite(eq) and isfinite(w)):
                fail = k
                break
            i_d = (rs * (u - ed) - xprime * eq) / den
            i_q = (-rs * eq - xprime * (u - ed)) / den
            r = u / v0
            p_out[k] = pzip0 * (ap * r * r + bp * r + cp) + u * i_d
            q_out[k] = qzip0 * (aq * r * r + bq * r + cq) - u * i_q
            if k == n - 1:
                break
            for step in range(substeps):
                _deriv(ed, eq, w, u, rs, xprime, den, dx, tprime, two_h, ta, tb, tc, t0, k1)
                _deriv(ed + 0.5 * h * k1[0], eq + 0.5 * h * k1[1], w + 0.5 * h * k1[2],
                       u, rs, xprime, den, dx, tprime, two_h, ta, tb, tc, t0, k2)
                _deriv(ed + 0.5 * h * k2[0], eq + 0.5 * h * k2[1], w + 0.5 * h * k2[2],
                       u, rs, xprime, den, dx, tprime, two_h, ta, tb, tc, t0, k3)
                _deriv(ed + h * k3[0], eq + h * k3[1], w + h * k3[2],
                       u, rs, xprime, den, dx, tprime, two_h, ta, tb, tc, t0, k4)
                ed += h * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]) / 6.0
                eq += h * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]) / 6.0
                w += h * (k1[2] + 2.0 * k2[2] + 2.0 * k3[2] + k4[2]) / 6.0
    return p_arr, q_arr, fail


def frechet_dp(double[:, ::1] dist):
    cdef Py_ssize_t n = dist.shape[0]
    cdef Py_ssize_t m = dist.shape[1]
    row_arr = np.empty(m, dtype=np.float64)
    cdef double[::1] row = row_arr
    cdef Py_ssize_t i, j
    cdef double prev, best, dij

    with nogil:
        row[0] = dist[0, 0]
        for j in range(1, m):
            row[j] = max(row[j - 1], dist[0, j])
        for i in range(1, n):
            prev = row[0]
            row[0] = max(prev, dist[i, 0])
            for j in range(1, m):
                best = prev if prev < row[j] else row[j]
                if row[j - 1] < best:
                    best = row[j - 1]
                prev = row[j]
                dij = dist[i, j]
                row[j] = best if best > dij else dij
    return row_arr[m - 1]
