"""Pure-Python fallback for the compiled hot kernels.

Kept operation-for-operation identical to the Cython version in
``_native.pyx`` so either backend can be selected at import time. The inner
loops run on plain floats; the compiled twin is 40-100x faster (see
benchmarks/bench_kernels.py).
"""

from __future__ import annotations

import math

import numpy as np


def simulate_pq(
    v,
    dt,
    substeps,
    v0,
    pzip0,
    qzip0,
    ap,
    bp,
    cp,
    aq,
    bq,
    cq,
    rs,
    xprime,
    dx,
    tprime,
    two_h,
    ta,
    tb,
    tc,
    t0,
    ed0,
    eq0,
    w0,
):
    """RK4 trajectory of the composite load under a zero-order-hold voltage.

    Returns (p, q, fail_index); fail_index is -1 on success, otherwise the
    first sample index whose state is non-finite.
    """
    # plain Python floats throughout the loop: overflow quietly yields inf,
    # matching the C semantics (and avoiding numpy scalar overhead)
    v0, pzip0, qzip0 = float(v0), float(pzip0), float(qzip0)
    ap, bp, cp, aq, bq, cq = map(float, (ap, bp, cp, aq, bq, cq))
    rs, xprime, dx, tprime = float(rs), float(xprime), float(dx), float(tprime)
    two_h, ta, tb, tc, t0 = map(float, (two_h, ta, tb, tc, t0))
    n = len(v)
    p_out = np.empty(n, dtype=np.float64)
    q_out = np.empty(n, dtype=np.float64)
    volts = [float(x) for x in v]
    den = rs * rs + xprime * xprime
    h = float(dt) / substeps
    ed, eq, w = float(ed0), float(eq0), float(w0)
    fail = -1

    for k in range(n):
        u = volts[k]
        if not (math.isfinite(ed) and math.isfinite(eq) and math.isfinite(w)):
            fail = k
            break
        # outputs at the current sample
        i_d = (rs * (u - ed) - xprime * eq) / den
        i_q = (-rs * eq - xprime * (u - ed)) / den
        r = u / v0
        p_out[k] = pzip0 * (ap * r * r + bp * r + cp) + u * i_d
        q_out[k] = qzip0 * (aq * r * r + bq * r + cq) - u * i_q
        if k == n - 1:
            break
        # advance the state across [t_k, t_k + dt] with u held
        for _ in range(substeps):
            k1d, k1q, k1w = _deriv(ed, eq, w, u, rs, xprime, den, dx, tprime, two_h, ta, tb, tc, t0)
            k2d, k2q, k2w = _deriv(
                ed + 0.5 * h * k1d, eq + 0.5 * h * k1q, w + 0.5 * h * k1w,
                u, rs, xprime, den, dx, tprime, two_h, ta, tb, tc, t0,
            )
            k3d, k3q, k3w = _deriv(
                ed + 0.5 * h * k2d, eq + 0.5 * h * k2q, w + 0.5 * h * k2w,
                u, rs, xprime, den, dx, tprime, two_h, ta, tb, tc, t0,
            )
            k4d, k4q, k4w = _deriv(
                ed + h * k3d, eq + h * k3q, w + h * k3w,
                u, rs, xprime, den, dx, tprime, two_h, ta, tb, tc, t0,
            )
            ed += h * (k1d + 2.0 * k2d + 2.0 * k3d + k4d) / 6.0
            eq += h * (k1q + 2.0 * k2q + 2.0 * k3q + k4q) / 6.0
            w += h * (k1w + 2.0 * k2w + 2.0 * k3w + k4w) / 6.0
    return p_out, q_out, fail


def _deriv(ed, eq, w, u, rs, xprime, den, dx, tprime, two_h, ta, tb, tc, t0):
    i_d = (rs * (u - ed) - xprime * eq) / den
    i_q = (-rs * eq - xprime * (u - ed)) / den
    ded = -(ed + dx * i_q) / tprime - (w - 1.0) * eq
    deq = -(eq - dx * i_d) / tprime + (w - 1.0) * ed
    dw = -(t0 * (ta * w * w + tb * w + tc) - (ed * i_d + eq * i_q)) / two_h
    return ded, deq, dw


def frechet_dp(dist):
    """Discrete Fréchet distance from a pairwise-distance matrix.

    Standard coupling dynamic program: cell (i, j) holds the minimax cost of
    jointly walking the two curves up to points i and j.
    """
    n, m = dist.shape
    d = dist.tolist()
    row = [0.0] * m
    row[0] = d[0][0]
    for j in range(1, m):
        row[j] = max(row[j - 1], d[0][j])
    for i in range(1, n):
        prev = row[0]
        row[0] = max(prev, d[i][0])
        for j in range(1, m):
            best = prev if prev < row[j] else row[j]
            if row[j - 1] < best:
                best = row[j - 1]
            prev = row[j]
            dij = d[i][j]
            row[j] = best if best > dij else dij
    return row[m - 1]
