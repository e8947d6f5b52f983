"""Compiled fixed-step RK4 kernel for the extended shooting system.

State layout per column: ``[u, u', a_1..a_m, w_1..w_m]`` with

    u'' = (V - lam) u - sum_i a_i phi_i,   a_i' = 0,   w_i' = u phi_i.

Coefficients arrive pre-sampled on the half-step grid, so the kernel never
calls back into Python.
"""

import numpy as np
from numba import njit


@njit(cache=True, inline="always")
def _rhs(src, dst, qv, phi, b, j, m, k):
    for c in range(k):
        u = src[0, c]
        acc = qv * u
        for i in range(m):
            p = phi[i, b, j]
            acc -= p * src[2 + i, c]
            dst[2 + i, c] = 0.0
            dst[2 + m + i, c] = p * u
        dst[0, c] = src[1, c]
        dst[1, c] = acc


@njit(cache=True)
def rk4_extended(q, phi, h, y0, record, traj, fail):
    """Integrate every batch member; ``fail[b]`` gets the first bad step or -1.

    q : (nb, 2S+1) values of V - lam on the half-step grid
    phi : (m, nb, 2S+1) constraint samples on the same grid
    h : (nb,) step sizes
    y0 : (nb, d, k) initial states
    traj : (nb, S+1, d, k) output when ``record`` else a dummy array
    """
    nb, d, k = y0.shape
    m = phi.shape[0]
    steps = (q.shape[1] - 1) // 2
    out = np.empty_like(y0)
    y = np.empty((d, k))
    k1 = np.empty((d, k))
    k2 = np.empty((d, k))
    k3 = np.empty((d, k))
    k4 = np.empty((d, k))
    tmp = np.empty((d, k))
    for b in range(nb):
        fail[b] = -1
        y[:, :] = y0[b]
        hb = h[b]
        hh = 0.5 * hb
        h6 = hb / 6.0
        if record:
            traj[b, 0] = y
        for n in range(steps):
            j = 2 * n
            _rhs(y, k1, q[b, j], phi, b, j, m, k)
            for r in range(d):
                for c in range(k):
                    tmp[r, c] = y[r, c] + hh * k1[r, c]
            _rhs(tmp, k2, q[b, j + 1], phi, b, j + 1, m, k)
            for r in range(d):
                for c in range(k):
                    tmp[r, c] = y[r, c] + hh * k2[r, c]
            _rhs(tmp, k3, q[b, j + 1], phi, b, j + 1, m, k)
            for r in range(d):
                for c in range(k):
                    tmp[r, c] = y[r, c] + hb * k3[r, c]
            _rhs(tmp, k4, q[b, j + 2], phi, b, j + 2, m, k)
            bad = False
            for r in range(d):
                for c in range(k):
                    y[r, c] += h6 * (k1[r, c] + 2.0 * k2[r, c] + 2.0 * k3[r, c] + k4[r, c])
                    if not np.isfinite(y[r, c]):
                        bad = True
            if record:
                traj[b, n + 1] = y
            if bad:
                fail[b] = n + 1
                break
        out[b] = y
    return out
