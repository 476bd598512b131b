"""Intrinsic calculus on a discretized surface.

Gradient, divergence, Laplacian (= div o grad, exactly as composed),
quadrature integrals, Euler characteristic from the curvature integral,
and a Poisson solver on the mean-zero subspace.

Pole-parity bookkeeping: a scalar extends evenly across the poles; each
theta index (covariant or contravariant) flips the sign, so the theta
component of a gradient or 1-form is odd while the phi component is even.
The area density sqrt(det g) carries a formal odd parity (its smooth
continuation through a pole changes sign), which makes the flux densities
sqrt(g) X^theta even again.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import LinearOperator, lgmres, splu

from .errors import AmbiguousTopology, Incompatible, NoConvergence
from .surface import _HW


# -- field containers --------------------------------------------------------

@dataclass(frozen=True)
class ScalarField:
    values: np.ndarray
    extr: object

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))


@dataclass(frozen=True)
class OneFormField:
    """Covariant components (theta, phi) in the coordinate basis."""

    comps: np.ndarray  # (nt, np, 2)
    extr: object

    def raised(self):
        up = np.einsum("...ab,...b->...a", self.extr.inv_metric, self.comps)
        return TangentVectorField(up, self.extr)


@dataclass(frozen=True)
class TangentVectorField:
    """Contravariant components (theta, phi) in the coordinate basis."""

    comps: np.ndarray  # (nt, np, 2)
    extr: object

    def lowered(self):
        low = np.einsum("...ab,...b->...a", self.extr.metric, self.comps)
        return OneFormField(low, self.extr)


def _values(f):
    return f.values if isinstance(f, ScalarField) else np.asarray(f, dtype=float)


def _vec_comps(X):
    if isinstance(X, TangentVectorField):
        return X.comps
    if isinstance(X, OneFormField):
        return X.raised().comps
    return np.asarray(X, dtype=float)


# -- core operators ----------------------------------------------------------

def integrate(f, extr):
    """Surface integral with the Gauss-Legendre x trapezoid quadrature."""
    return float((_values(f) * extr.dA).sum())


def gradient(f, extr):
    """Metric gradient of a scalar field (contravariant components)."""
    fv = _values(f)
    chart = extr.chart
    df = np.stack([chart.d_theta(fv, +1), chart.d_phi(fv)], axis=-1)
    up = np.einsum("...ab,...b->...a", extr.inv_metric, df)
    return TangentVectorField(up, extr)


def differential(f, extr):
    """Coordinate differential df as a 1-form."""
    fv = _values(f)
    chart = extr.chart
    df = np.stack([chart.d_theta(fv, +1), chart.d_phi(fv)], axis=-1)
    return OneFormField(df, extr)


def divergence(X, extr):
    """Metric divergence of a tangent vector field (or raised 1-form)."""
    comps = _vec_comps(X)
    chart = extr.chart
    sg = extr.sqrt_det
    # sqrt(g) X^theta is even across the poles, sqrt(g) X^phi is odd in the
    # formal sense but only phi-differentiated, so no ghost sign is needed.
    flux_t = chart.d_theta(sg * comps[..., 0], +1)
    flux_p = chart.d_phi(sg * comps[..., 1])
    return ScalarField((flux_t + flux_p) / sg, extr)


def laplacian(f, extr):
    """Laplace-Beltrami operator, exactly divergence(gradient(f))."""
    return divergence(gradient(f, extr), extr)


def norm2_oneform(alpha, extr):
    """|alpha|^2 with the induced metric; alpha has covariant components."""
    comps = alpha.comps if isinstance(alpha, OneFormField) else np.asarray(alpha)
    return np.einsum("...a,...ab,...b->...", comps, extr.inv_metric, comps)


# -- Euler characteristic ----------------------------------------------------

@dataclass(frozen=True)
class EulerCharacteristic:
    value: int
    raw: float
    gap: float


def euler_characteristic(extr, max_gap=0.1):
    """round(integral of K dA / 2 pi) with a rounding-gap guard."""
    K = extr.gauss_K
    if not np.isfinite(K).all():
        raise AmbiguousTopology("curvature field contains non-finite values")
    raw = integrate(K, extr) / (2.0 * np.pi)
    value = int(round(raw))
    gap = abs(raw - value)
    if gap > max_gap:
        raise AmbiguousTopology(f"curvature integral / 2pi = {raw} is not near an integer")
    return EulerCharacteristic(value=value, raw=raw, gap=gap)


# -- sparse Laplacian and Poisson solver -------------------------------------

def _d_theta_sparse(chart, parity):
    """Global sparse theta derivative with pole-ghost folding."""
    n, nph = chart.n_theta, chart.n_phi
    D1 = chart.D_theta
    hw = _HW
    shift = nph // 2
    rows, cols, vals = [], [], []
    cols_j = np.arange(nph)
    for i in range(n):
        for k in range(n + 2 * hw):
            c = D1[i, k]
            if c == 0.0:
                continue
            if k < hw:
                src, ghost = hw - 1 - k, True
            elif k >= n + hw:
                src, ghost = n - 1 - (k - n - hw), True
            else:
                src, ghost = k - hw, False
            rows.append(i * nph + cols_j)
            if ghost:
                cols.append(src * nph + (cols_j + shift) % nph)
                vals.append(np.full(nph, parity * c))
            else:
                cols.append(src * nph + cols_j)
                vals.append(np.full(nph, c))
    return sp.csr_matrix((np.concatenate(vals),
                          (np.concatenate(rows), np.concatenate(cols))),
                         shape=(n * nph, n * nph))


def _laplacian_matrix(extr):
    """Sparse matrix identical to the composed FD Laplacian."""
    if extr._lap_matrix is None:
        chart = extr.chart
        n, nph = chart.n_theta, chart.n_phi
        Dt = _d_theta_sparse(chart, +1.0)
        Dp = sp.kron(sp.identity(n, format="csr"),
                     sp.csr_matrix(chart.D_phi), format="csr")
        sg = extr.sqrt_det.ravel()
        gtt = extr.inv_metric[..., 0, 0].ravel()
        gtp = extr.inv_metric[..., 0, 1].ravel()
        gpp = extr.inv_metric[..., 1, 1].ravel()
        dia = sp.diags
        L = dia(1.0 / sg) @ (Dt @ dia(sg * gtt) @ Dt + Dt @ dia(sg * gtp) @ Dp
                             + Dp @ dia(sg * gtp) @ Dt + Dp @ dia(sg * gpp) @ Dp)
        extr._lap_matrix = L.tocsc()
    return extr._lap_matrix


def _poisson_preconditioner(extr):
    """Cached LU factorization of the shifted negative Laplacian."""
    if extr._lap_precond is None:
        L = _laplacian_matrix(extr)
        shift = 4.0 * np.pi / extr.area
        n = L.shape[0]
        extr._lap_precond = splu((-L + shift * sp.identity(n, format="csc")).tocsc(),
                                 permc_spec="MMD_AT_PLUS_A")
    return extr._lap_precond


@dataclass(frozen=True)
class PoissonInfo:
    residual: float
    residual_inf: float
    matvecs: int
    converged: bool


def poisson_solve(f, extr, rtol=1e-10, maxiter=100, compat_tol=1e-6,
                  precond=None, return_info=False):
    """Solve laplacian(beta) = f on the mean-zero subspace.

    Raises Incompatible when |int f dA| exceeds compat_tol * ||f||_inf * area
    (solvability on a closed surface) and NoConvergence when the Krylov
    iteration stalls.  The returned field is gauge-fixed to mean zero.
    """
    fv = _values(f)
    W = extr.dA.ravel()
    area = extr.area
    fmean = float((fv * extr.dA).sum()) / area
    fscale = float(np.abs(fv).max())
    if fscale == 0.0:
        out = ScalarField(np.zeros_like(fv), extr)
        return (out, PoissonInfo(0.0, 0.0, 0, True)) if return_info else out
    if abs(fmean) > compat_tol * fscale:
        raise Incompatible(f"mean of rhs = {fmean:.3e} exceeds {compat_tol} * ||f||_inf")

    L = _laplacian_matrix(extr)
    LU = precond if precond is not None else _poisson_preconditioner(extr)

    def mz(x):
        return x - (x * W).sum() / area

    nmv = [0]

    def apply_A(v):
        nmv[0] += 1
        return mz(-(L @ mz(v)))

    N = fv.size
    A = LinearOperator((N, N), matvec=apply_A)
    M = LinearOperator((N, N), matvec=lambda r: mz(LU.solve(r)))
    b = mz(-fv.ravel())
    x, info = lgmres(A, b, M=M, rtol=rtol, atol=0.0, maxiter=maxiter)
    x = mz(x)
    res_sys = float(np.abs(mz(-(L @ x)) - b).max())
    beta = ScalarField(x.reshape(fv.shape), extr)
    res_inf = float(np.abs((L @ x).reshape(fv.shape) - (fv - fmean)).max())
    converged = info == 0
    if not converged and res_sys > 100.0 * rtol * fscale:
        raise NoConvergence(
            f"poisson solve stalled: residual {res_sys:.3e} after {nmv[0]} operator "
            f"applications", residual=res_sys, iterations=nmv[0])
    pinfo = PoissonInfo(residual=res_sys, residual_inf=res_inf,
                        matvecs=nmv[0], converged=bool(converged))
    return (beta, pinfo) if return_info else beta
