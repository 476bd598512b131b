"""Pure-numpy reference implementations of the hot per-node kernels.

All functions take flat batches: X is (N, 4) event coordinates, tensor
outputs are (N, 4, 4), (N, 4, 4, 4) etc.  Index convention for metric
derivatives: dg[n, k, mu, nu] = d_k g_{mu nu}.
"""

import numpy as np

# model kind codes shared by both backends
MINKOWSKI = 0
SCHWARZSCHILD_STANDARD = 1
SCHWARZSCHILD_ISOTROPIC = 2
DE_SITTER_STATIC = 3

_EYE3 = np.eye(3)


def _profiles(kind, param, r):
    """Static radial metric profiles A, A', C, C', B, B'.

    The built-in charts all take the form
        g_tt = -A(r),   g_ij = C(r) delta_ij + B(r) n_i n_j,
    with n = x/r the radial unit covector.
    """
    one = np.ones_like(r)
    zero = np.zeros_like(r)
    if kind == MINKOWSKI:
        return one, zero, one, zero, zero, zero
    if kind == SCHWARZSCHILD_STANDARD:
        A = 1.0 - 2.0 * param / r
        Ap = 2.0 * param / r**2
        B = 1.0 / A - 1.0
        Bp = -Ap / A**2
        return A, Ap, one, zero, B, Bp
    if kind == SCHWARZSCHILD_ISOTROPIC:
        u = param / (2.0 * r)
        A = ((1.0 - u) / (1.0 + u)) ** 2
        Ap = 4.0 * u * (1.0 - u) / ((1.0 + u) ** 3 * r)
        C = (1.0 + u) ** 4
        Cp = -4.0 * u * (1.0 + u) ** 3 / r
        return A, Ap, C, Cp, zero, zero
    if kind == DE_SITTER_STATIC:
        A = 1.0 - r**2 / param**2
        Ap = -2.0 * r / param**2
        B = 1.0 / A - 1.0
        Bp = -Ap / A**2
        return A, Ap, one, zero, B, Bp
    raise ValueError(f"unknown kind code {kind}")


def metric_batch(kind, param, X):
    N = X.shape[0]
    g = np.zeros((N, 4, 4))
    if kind == MINKOWSKI:
        g[:, 0, 0] = -1.0
        g[:, 1, 1] = g[:, 2, 2] = g[:, 3, 3] = 1.0
        return g
    r = np.sqrt(X[:, 1] ** 2 + X[:, 2] ** 2 + X[:, 3] ** 2)
    A, _, C, _, B, _ = _profiles(kind, param, r)
    n = X[:, 1:] / r[:, None]
    g[:, 0, 0] = -A
    g[:, 1:, 1:] = C[:, None, None] * _EYE3 + B[:, None, None] * n[:, :, None] * n[:, None, :]
    return g


def dmetric_batch(kind, param, X):
    N = X.shape[0]
    dg = np.zeros((N, 4, 4, 4))
    if kind == MINKOWSKI:
        return dg
    r = np.sqrt(X[:, 1] ** 2 + X[:, 2] ** 2 + X[:, 3] ** 2)
    _, Ap, _, Cp, B, Bp = _profiles(kind, param, r)
    n = X[:, 1:] / r[:, None]
    # dn[:, k, i] = d_k n_i = (delta_ki - n_k n_i)/r
    dn = (_EYE3 - n[:, :, None] * n[:, None, :]) / r[:, None, None]
    dg[:, 1:, 0, 0] = -Ap[:, None] * n
    dg[:, 1:, 1:, 1:] = (
        Cp[:, None, None, None] * n[:, :, None, None] * _EYE3
        + Bp[:, None, None, None] * n[:, :, None, None] * n[:, None, :, None] * n[:, None, None, :]
        + B[:, None, None, None] * (dn[:, :, :, None] * n[:, None, None, :]
                                    + n[:, None, :, None] * dn[:, :, None, :])
    )
    return dg


def christoffel_batch(g_inv, dg):
    """Gamma^m_ab from the inverse metric and metric first derivatives."""
    term = (np.einsum("namb->nmab", dg) + np.einsum("nbma->nmab", dg) - dg)
    return 0.5 * np.einsum("nmk,nkab->nmab", g_inv, term)


def extrinsic_core(g4, gam, Fa, Fab):
    """Induced metric and normal-valued second fundamental form.

    Fa:  (N, 2, 4) coordinate tangent vectors,
    Fab: (N, 2, 2, 4) coordinate second derivatives of the embedding.
    Returns (g2, g2inv, det, II, Hvec).
    """
    cov = Fab + np.einsum("nmab,nia,njb->nijm", gam, Fa, Fa)
    lowered = np.einsum("nia,nab->nib", Fa, g4)
    g2 = np.einsum("nia,nja->nij", Fa, lowered)
    det = g2[:, 0, 0] * g2[:, 1, 1] - g2[:, 0, 1] ** 2
    g2inv = np.empty_like(g2)
    g2inv[:, 0, 0] = g2[:, 1, 1] / det
    g2inv[:, 1, 1] = g2[:, 0, 0] / det
    g2inv[:, 0, 1] = g2inv[:, 1, 0] = -g2[:, 0, 1] / det
    vdotF = np.einsum("nijm,nbm->nijb", cov, lowered)
    tang = np.einsum("nab,nijb,nam->nijm", g2inv, vdotF, Fa)
    II = cov - tang
    Hvec = np.einsum("nab,nabm->nm", g2inv, II)
    return g2, g2inv, det, II, Hvec
