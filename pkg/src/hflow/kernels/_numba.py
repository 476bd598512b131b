"""Numba-compiled twins of the hot kernels in ``_numpy``.

Same signatures and index conventions; explicit per-node loops compiled
with ``@njit(parallel=True, cache=True)``.  Thread count is capped by the
``HFLOW_THREADS`` environment variable (applied in the CLI entry point).
"""

import numpy as np
from numba import njit, prange

MINKOWSKI = 0
SCHWARZSCHILD_STANDARD = 1
SCHWARZSCHILD_ISOTROPIC = 2
DE_SITTER_STATIC = 3


@njit(cache=True)
def _profiles_one(kind, param, r):
    if kind == MINKOWSKI:
        return 1.0, 0.0, 1.0, 0.0, 0.0, 0.0
    if kind == SCHWARZSCHILD_STANDARD:
        A = 1.0 - 2.0 * param / r
        Ap = 2.0 * param / r**2
        return A, Ap, 1.0, 0.0, 1.0 / A - 1.0, -Ap / A**2
    if kind == SCHWARZSCHILD_ISOTROPIC:
        u = param / (2.0 * r)
        A = ((1.0 - u) / (1.0 + u)) ** 2
        Ap = 4.0 * u * (1.0 - u) / ((1.0 + u) ** 3 * r)
        C = (1.0 + u) ** 4
        Cp = -4.0 * u * (1.0 + u) ** 3 / r
        return A, Ap, C, Cp, 0.0, 0.0
    # DE_SITTER_STATIC
    A = 1.0 - r**2 / param**2
    Ap = -2.0 * r / param**2
    return A, Ap, 1.0, 0.0, 1.0 / A - 1.0, -Ap / A**2


@njit(parallel=True, cache=True)
def metric_batch(kind, param, X):
    N = X.shape[0]
    g = np.zeros((N, 4, 4))
    for p in prange(N):
        if kind == MINKOWSKI:
            g[p, 0, 0] = -1.0
            g[p, 1, 1] = 1.0
            g[p, 2, 2] = 1.0
            g[p, 3, 3] = 1.0
            continue
        r = np.sqrt(X[p, 1] ** 2 + X[p, 2] ** 2 + X[p, 3] ** 2)
        A, _, C, _, B, _ = _profiles_one(kind, param, r)
        g[p, 0, 0] = -A
        for i in range(3):
            ni = X[p, 1 + i] / r
            for j in range(3):
                nj = X[p, 1 + j] / r
                g[p, 1 + i, 1 + j] = B * ni * nj
                if i == j:
                    g[p, 1 + i, 1 + j] += C
    return g


@njit(parallel=True, cache=True)
def dmetric_batch(kind, param, X):
    N = X.shape[0]
    dg = np.zeros((N, 4, 4, 4))
    if kind == MINKOWSKI:
        return dg
    for p in prange(N):
        r = np.sqrt(X[p, 1] ** 2 + X[p, 2] ** 2 + X[p, 3] ** 2)
        _, Ap, _, Cp, B, Bp = _profiles_one(kind, param, r)
        n = X[p, 1:] / r
        for k in range(3):
            dg[p, 1 + k, 0, 0] = -Ap * n[k]
            for i in range(3):
                dnki = ((1.0 if k == i else 0.0) - n[k] * n[i]) / r
                for j in range(3):
                    dnkj = ((1.0 if k == j else 0.0) - n[k] * n[j]) / r
                    v = Bp * n[k] * n[i] * n[j] + B * (dnki * n[j] + n[i] * dnkj)
                    if i == j:
                        v += Cp * n[k]
                    dg[p, 1 + k, 1 + i, 1 + j] = v
    return dg


@njit(parallel=True, cache=True)
def christoffel_batch(g_inv, dg):
    N = g_inv.shape[0]
    gam = np.zeros((N, 4, 4, 4))
    for p in prange(N):
        for m in range(4):
            for a in range(4):
                for b in range(4):
                    s = 0.0
                    for k in range(4):
                        s += g_inv[p, m, k] * (dg[p, a, k, b] + dg[p, b, k, a] - dg[p, k, a, b])
                    gam[p, m, a, b] = 0.5 * s
    return gam


@njit(parallel=True, cache=True)
def extrinsic_core(g4, gam, Fa, Fab):
    N = g4.shape[0]
    g2 = np.zeros((N, 2, 2))
    g2inv = np.zeros((N, 2, 2))
    det = np.zeros(N)
    II = np.zeros((N, 2, 2, 4))
    Hvec = np.zeros((N, 4))
    for p in prange(N):
        low = np.zeros((2, 4))
        for i in range(2):
            for b in range(4):
                s = 0.0
                for a in range(4):
                    s += Fa[p, i, a] * g4[p, a, b]
                low[i, b] = s
        for i in range(2):
            for j in range(2):
                s = 0.0
                for a in range(4):
                    s += Fa[p, i, a] * low[j, a]
                g2[p, i, j] = s
        d = g2[p, 0, 0] * g2[p, 1, 1] - g2[p, 0, 1] ** 2
        det[p] = d
        g2inv[p, 0, 0] = g2[p, 1, 1] / d
        g2inv[p, 1, 1] = g2[p, 0, 0] / d
        g2inv[p, 0, 1] = -g2[p, 0, 1] / d
        g2inv[p, 1, 0] = -g2[p, 0, 1] / d
        cov = np.zeros((2, 2, 4))
        for i in range(2):
            for j in range(2):
                for m in range(4):
                    s = Fab[p, i, j, m]
                    for a in range(4):
                        for b in range(4):
                            s += gam[p, m, a, b] * Fa[p, i, a] * Fa[p, j, b]
                    cov[i, j, m] = s
        for i in range(2):
            for j in range(2):
                vb = np.zeros(2)
                for b in range(2):
                    s = 0.0
                    for m in range(4):
                        s += cov[i, j, m] * low[b, m]
                    vb[b] = s
                for m in range(4):
                    t = 0.0
                    for a in range(2):
                        for b in range(2):
                            t += g2inv[p, a, b] * vb[b] * Fa[p, a, m]
                    II[p, i, j, m] = cov[i, j, m] - t
        for m in range(4):
            s = 0.0
            for a in range(2):
                for b in range(2):
                    s += g2inv[p, a, b] * II[p, a, b, m]
            Hvec[p, m] = s
    return g2, g2inv, det, II, Hvec
