"""Dual block coordinate descent for the kernel rejection ERM.

Primal (representer form, ``h = K u``, ``g = K w`` on the training points)::

    min  s * sum_i xi_i + C_h u'Ku + C_g w'Kw
    s.t. xi_i >= 1 + (g_i - y_i h_i) / 2
         xi_i >= theta - c g_i,           c = theta / (1 - 2 theta)
         xi_i >= 0

with ``s = 1/m`` (mean) or ``s = 1`` (sum).  With multipliers ``a`` and ``b``
for the first two constraints the dual is::

    max  sum a + theta sum b - (a*y)'K(a*y) / (16 C_h) - v'Kv / (4 C_g)
    s.t. a, b >= 0,  a_i + b_i <= s,     v = a/2 - c b

and the primal is recovered as ``u = a*y / (4 C_h)``, ``w = -v / (2 C_g)``.
Each ``(a_i, b_i)`` block lives in a triangle and its 2x2 Hessian is positive
definite, so every block step is an exact minimisation.  The duality gap is
tracked each sweep and is the stopping certificate.
"""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def _triangle_step(ga, gb, haa, hab, hbb, a0, b0, s):
    det = haa * hbb - hab * hab
    a = a0 + (-ga * hbb + gb * hab) / det
    b = b0 + (-gb * haa + ga * hab) / det
    if a >= 0.0 and b >= 0.0 and a + b <= s:
        return a, b

    best = np.inf
    best_a = a0
    best_b = b0
    for edge in range(3):
        if edge == 0:
            a = 0.0
            b = b0 - (gb - hab * a0) / hbb
            b = min(max(b, 0.0), s)
        elif edge == 1:
            b = 0.0
            a = a0 - (ga - hab * b0) / haa
            a = min(max(a, 0.0), s)
        else:
            rest = s - a0 - b0
            curv = haa - 2.0 * hab + hbb
            t = -(ga - gb + (hab - hbb) * rest) / curv
            a = min(max(a0 + t, 0.0), s)
            b = s - a
        da = a - a0
        db = b - b0
        val = ga * da + gb * db + 0.5 * (haa * da * da + 2.0 * hab * da * db + hbb * db * db)
        if val < best:
            best = val
            best_a = a
            best_b = b
    return best_a, best_b


@njit(cache=True, nogil=True)
def _xorshift(state):
    state ^= (state << np.uint64(13)) & np.uint64(0xFFFFFFFFFFFFFFFF)
    state ^= state >> np.uint64(7)
    state ^= (state << np.uint64(17)) & np.uint64(0xFFFFFFFFFFFFFFFF)
    return state


@njit(cache=True, nogil=True)
def _objectives(K, y, a, b, p, q, theta, c_h, c_g, s):
    c = theta / (1.0 - 2.0 * theta)
    m = y.shape[0]
    reg_h = 0.0
    reg_g = 0.0
    loss = 0.0
    lin = 0.0
    for i in range(m):
        v = 0.5 * a[i] - c * b[i]
        reg_h += a[i] * y[i] * p[i]
        reg_g += v * q[i]
        h = p[i] / (4.0 * c_h)
        g = -q[i] / (2.0 * c_g)
        t1 = 1.0 + 0.5 * (g - y[i] * h)
        t2 = theta - c * g
        loss += max(t1, t2, 0.0)
        lin += a[i] + theta * b[i]
    reg_h /= 16.0 * c_h
    reg_g /= 4.0 * c_g
    primal = s * loss + reg_h + reg_g
    dual = lin - reg_h - reg_g
    return primal, dual


@njit(cache=True, nogil=True)
def solve_dual(K, y, theta, c_h, c_g, s, tol, max_sweeps, seed):
    """Returns ``(a, b, primal, dual, sweeps, converged)``."""
    m = y.shape[0]
    c = theta / (1.0 - 2.0 * theta)
    a = np.zeros(m)
    b = np.zeros(m)
    p = np.zeros(m)  # K (a*y)
    q = np.zeros(m)  # K v
    order = np.arange(m)
    state = np.uint64(seed) * np.uint64(2685821657736338717) + np.uint64(0x9E3779B97F4A7C15)
    if state == np.uint64(0):
        state = np.uint64(88172645463325252)

    primal = np.inf
    dual = -np.inf
    for sweep in range(max_sweeps):
        for k in range(m - 1, 0, -1):
            state = _xorshift(state)
            j = np.int64(state % np.uint64(k + 1))
            tmp = order[k]
            order[k] = order[j]
            order[j] = tmp
        for idx in range(m):
            i = order[idx]
            kii = K[i, i]
            ga = y[i] * p[i] / (8.0 * c_h) + q[i] / (4.0 * c_g) - 1.0
            gb = -c * q[i] / (2.0 * c_g) - theta
            haa = kii * (1.0 / (8.0 * c_h) + 1.0 / (8.0 * c_g))
            hbb = kii * c * c / (2.0 * c_g)
            hab = -kii * c / (4.0 * c_g)
            na, nb = _triangle_step(ga, gb, haa, hab, hbb, a[i], b[i], s)
            da = na - a[i]
            db = nb - b[i]
            if da != 0.0 or db != 0.0:
                a[i] = na
                b[i] = nb
                dp = y[i] * da
                dq = 0.5 * da - c * db
                for j in range(m):
                    p[j] += K[j, i] * dp
                    q[j] += K[j, i] * dq
        primal, dual = _objectives(K, y, a, b, p, q, theta, c_h, c_g, s)
        if primal - dual <= tol * max(abs(primal), 1e-12):
            # incremental updates drift; confirm on freshly computed products
            for j in range(m):
                pj = 0.0
                qj = 0.0
                for i in range(m):
                    pj += K[j, i] * a[i] * y[i]
                    qj += K[j, i] * (0.5 * a[i] - c * b[i])
                p[j] = pj
                q[j] = qj
            primal, dual = _objectives(K, y, a, b, p, q, theta, c_h, c_g, s)
            if primal - dual <= tol * max(abs(primal), 1e-12):
                return a, b, primal, dual, sweep + 1, True
    return a, b, primal, dual, max_sweeps, False
