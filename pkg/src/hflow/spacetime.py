"""Lorentzian metric backgrounds: metric, connection, and Einstein curvature.

Built-in charts use Cartesian-type coordinates (t, x1, x2, x3) with the
radial coordinate r = |x|.  All built-ins are static, so only spatial
metric derivatives are nonzero.  A tabulated metric on a regular 4D
lattice is supported through ``MetricTable`` with multilinear interpolation
and finite-difference derivatives.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from . import kernels
from .errors import OutOfChart

KIND_CODES = {
    "minkowski": kernels.MINKOWSKI,
    "schwarzschild_standard": kernels.SCHWARZSCHILD_STANDARD,
    "schwarzschild_isotropic": kernels.SCHWARZSCHILD_ISOTROPIC,
    "de_sitter_static": kernels.DE_SITTER_STATIC,
}

# symmetric storage order of the 10 metric columns in a table CSV
_SYM_INDEX = [(0, 0), (0, 1), (0, 2), (0, 3), (1, 1), (1, 2), (1, 3), (2, 2), (2, 3), (3, 3)]


class MetricTable:
    """Tabulated metric on a regular (t, x1, x2, x3) lattice.

    CSV columns: t,x1,x2,x3,g00,g01,...,g33 (10 metric columns, symmetric
    storage, row order free).  Interpolation is multilinear; derivatives
    use central differences with steps equal to the lattice spacings.
    """

    def __init__(self, axes, values):
        self.axes = [np.asarray(a, dtype=float) for a in axes]
        self.values = np.asarray(values, dtype=float)
        if self.values.shape != tuple(len(a) for a in self.axes) + (10,):
            raise ValueError("table values do not match the axis lattice")
        self.spacing = np.array([a[1] - a[0] if len(a) > 1 else 1.0 for a in self.axes])
        self._interp = RegularGridInterpolator(
            self.axes, self.values, method="linear", bounds_error=True)

    @classmethod
    def from_csv(cls, path):
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            expected = ["t", "x1", "x2", "x3"] + [f"g{i}{j}" for i, j in _SYM_INDEX]
            if [h.strip() for h in header] != expected:
                raise ValueError(f"bad table header {header!r}")
            rows = np.array([[float(v) for v in row] for row in reader])
        axes = [np.unique(rows[:, k]) for k in range(4)]
        shape = tuple(len(a) for a in axes)
        if np.prod(shape) != rows.shape[0]:
            raise ValueError("table rows do not fill a regular lattice")
        values = np.full(shape + (10,), np.nan)
        idx = tuple(np.searchsorted(axes[k], rows[:, k]) for k in range(4))
        values[idx] = rows[:, 4:]
        if np.isnan(values).any():
            raise ValueError("table has missing lattice points")
        return cls(axes, values)

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t", "x1", "x2", "x3"] + [f"g{i}{j}" for i, j in _SYM_INDEX])
            grids = np.meshgrid(*self.axes, indexing="ij")
            flat = [g.ravel() for g in grids]
            vals = self.values.reshape(-1, 10)
            for k in range(vals.shape[0]):
                writer.writerow([repr(flat[a][k]) for a in range(4)]
                                + [repr(v) for v in vals[k]])

    def metric(self, X):
        sym = self._interp(X)
        g = np.empty(X.shape[:-1] + (4, 4))
        for k, (i, j) in enumerate(_SYM_INDEX):
            g[..., i, j] = sym[..., k]
            g[..., j, i] = sym[..., k]
        return g

    def dmetric(self, X):
        dg = np.empty(X.shape[:-1] + (4, 4, 4))
        for k in range(4):
            h = self.spacing[k]
            Xp = X.copy()
            Xm = X.copy()
            Xp[..., k] += h
            Xm[..., k] -= h
            dg[..., k, :, :] = (self.metric(Xp) - self.metric(Xm)) / (2.0 * h)
        return dg

    def contains(self, X):
        ok = np.ones(X.shape[:-1], dtype=bool)
        for k in range(4):
            ok &= (X[..., k] >= self.axes[k][0] + self.spacing[k]) \
                & (X[..., k] <= self.axes[k][-1] - self.spacing[k])
        return ok


@dataclass(frozen=True)
class SpacetimeModel:
    """A named metric background with parameters.

    kind: one of 'minkowski', 'schwarzschild_standard',
    'schwarzschild_isotropic', 'de_sitter_static', 'numeric_table'.
    margin: relative chart guard (r > 2m(1+margin) for standard
    Schwarzschild, r > m/2 (1+margin) isotropic, r < (1-margin) L de Sitter).
    fd_step: relative step for finite-difference derivative fallbacks.
    """

    kind: str
    mass: float = 0.0
    hubble_length: float = 0.0
    margin: float = 0.05
    fd_step: float = 1e-4
    table: MetricTable | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.kind not in KIND_CODES and self.kind != "numeric_table":
            raise ValueError(f"unknown spacetime kind {self.kind!r}")
        if self.kind.startswith("schwarzschild") and self.mass < 0:
            raise ValueError("mass must be nonnegative")
        if self.kind == "de_sitter_static" and self.hubble_length <= 0:
            raise ValueError("hubble_length must be positive")
        if self.kind == "numeric_table" and self.table is None:
            raise ValueError("numeric_table model needs a MetricTable")

    # -- constructors ----------------------------------------------------
    @classmethod
    def minkowski(cls):
        return cls("minkowski")

    @classmethod
    def schwarzschild(cls, mass, chart="standard", **kw):
        return cls(f"schwarzschild_{chart}", mass=mass, **kw)

    @classmethod
    def de_sitter(cls, hubble_length, **kw):
        return cls("de_sitter_static", hubble_length=hubble_length, **kw)

    @classmethod
    def from_table(cls, table_or_path, **kw):
        table = table_or_path
        if not isinstance(table, MetricTable):
            table = MetricTable.from_csv(table_or_path)
        return cls("numeric_table", table=table, **kw)

    # -- chart domain ----------------------------------------------------
    @property
    def param(self):
        return self.hubble_length if self.kind == "de_sitter_static" else self.mass

    def in_chart(self, X):
        """Boolean mask of events inside the chart's validity domain."""
        X = np.asarray(X, dtype=float)
        ok = np.isfinite(X).all(axis=-1)
        if self.kind == "numeric_table":
            return ok & self.table.contains(X)
        r = np.sqrt(X[..., 1] ** 2 + X[..., 2] ** 2 + X[..., 3] ** 2)
        if self.kind == "schwarzschild_standard" and self.mass > 0:
            ok &= r > 2.0 * self.mass * (1.0 + self.margin)
        elif self.kind == "schwarzschild_isotropic" and self.mass > 0:
            ok &= r > 0.5 * self.mass * (1.0 + self.margin)
        elif self.kind == "de_sitter_static":
            ok &= r < (1.0 - self.margin) * self.hubble_length
        return ok

    def ensure_in_chart(self, X):
        ok = self.in_chart(X)
        if not np.all(ok):
            bad = np.asarray(X, dtype=float)[~ok]
            raise OutOfChart(f"{(~ok).sum()} event(s) outside the {self.kind} chart, "
                             f"first offender {bad.reshape(-1, 4)[0]}")


# -- batched evaluation (hot path) ---------------------------------------

def metric_batch(model, X, check=True):
    """g_{mu nu} at a batch of events, shape (..., 4, 4)."""
    X = np.asarray(X, dtype=float)
    if check:
        model.ensure_in_chart(X)
    flat = X.reshape(-1, 4)
    if model.kind == "numeric_table":
        g = model.table.metric(flat)
    else:
        g = kernels.metric_batch(KIND_CODES[model.kind], model.param, flat)
    return g.reshape(X.shape[:-1] + (4, 4))


def dmetric_batch(model, X, check=True):
    """d_k g_{mu nu}, shape (..., 4, 4, 4), index order (k, mu, nu)."""
    X = np.asarray(X, dtype=float)
    if check:
        model.ensure_in_chart(X)
    flat = X.reshape(-1, 4)
    if model.kind == "numeric_table":
        dg = model.table.dmetric(flat)
    else:
        dg = kernels.dmetric_batch(KIND_CODES[model.kind], model.param, flat)
    return dg.reshape(X.shape[:-1] + (4, 4, 4))


def christoffel_batch(model, X, check=True):
    """Gamma^m_{ab} at a batch of events, shape (..., 4, 4, 4)."""
    X = np.asarray(X, dtype=float)
    g = metric_batch(model, X, check=check)
    flat_g = g.reshape(-1, 4, 4)
    ginv = np.linalg.inv(flat_g)
    dg = dmetric_batch(model, X, check=False).reshape(-1, 4, 4, 4)
    gam = kernels.christoffel_batch(ginv, dg)
    return gam.reshape(X.shape[:-1] + (4, 4, 4))


def riemann_batch(model, X, check=True):
    """Fully lowered Riemann tensor R_{rho sigma mu nu} by FD of Christoffels.

    4th-order central differences with relative step model.fd_step; for a
    tabulated metric the step is clamped to the lattice spacing.
    """
    X = np.asarray(X, dtype=float)
    if check:
        model.ensure_in_chart(X)
    flat = X.reshape(-1, 4)
    if model.kind == "minkowski":
        return np.zeros(X.shape[:-1] + (4, 4, 4, 4))
    if model.kind == "de_sitter_static":
        # constant curvature: R_rsmv = (g_rm g_sv - g_rv g_sm) / L^2
        g = metric_batch(model, flat, check=False)
        L2 = model.hubble_length ** 2
        R = (np.einsum("nrm,nsv->nrsmv", g, g) - np.einsum("nrv,nsm->nrsmv", g, g)) / L2
        return R.reshape(X.shape[:-1] + (4, 4, 4, 4))
    gam0 = christoffel_batch(model, flat, check=False)
    dgam = np.empty(flat.shape[:1] + (4, 4, 4, 4))  # [n, k, m, a, b] = d_k Gam^m_ab
    offsets = (-2.0, -1.0, 1.0, 2.0)
    weights = (1.0 / 12.0, -8.0 / 12.0, 8.0 / 12.0, -1.0 / 12.0)
    for k in range(4):
        h = model.fd_step * (1.0 + np.abs(flat[:, k]))
        if model.kind == "numeric_table":
            h = np.maximum(h, model.table.spacing[k])
        acc = np.zeros_like(gam0)
        for off, wgt in zip(offsets, weights):
            Xs = flat.copy()
            Xs[:, k] += off * h
            acc += wgt * christoffel_batch(model, Xs, check=False)
        dgam[:, k] = acc / h[:, None, None, None]
    # R^r_{s m v} = d_m Gam^r_{v s} - d_v Gam^r_{m s}
    #              + Gam^r_{m l} Gam^l_{v s} - Gam^r_{v l} Gam^l_{m s}
    dterm = dgam.transpose(0, 2, 4, 1, 3)  # [n, r, s, m, v] = d_m Gam^r_{v s}
    gg = np.einsum("nrml,nlvs->nrsmv", gam0, gam0)
    Rup = dterm - dterm.swapaxes(3, 4) + gg - gg.swapaxes(3, 4)
    g = metric_batch(model, flat, check=False)
    R = np.einsum("nrl,nlsmv->nrsmv", g, Rup)
    return R.reshape(X.shape[:-1] + (4, 4, 4, 4))


@dataclass(frozen=True)
class CurvatureBundle:
    """Ricci, scalar curvature, and Einstein tensor at a batch of events."""

    ricci: np.ndarray
    scalar: np.ndarray
    einstein: np.ndarray


def curvature_batch(model, X, method="auto", check=True):
    """Curvature bundle; 'analytic' built-in shortcut or generic 'fd' path."""
    X = np.asarray(X, dtype=float)
    if check:
        model.ensure_in_chart(X)
    shape = X.shape[:-1]
    if method == "auto":
        method = "fd" if model.kind == "numeric_table" else "analytic"
    if method == "analytic":
        if model.kind in ("minkowski", "schwarzschild_standard", "schwarzschild_isotropic"):
            z = np.zeros(shape + (4, 4))
            return CurvatureBundle(z, np.zeros(shape), z.copy())
        if model.kind == "de_sitter_static":
            g = metric_batch(model, X, check=False)
            L2 = model.hubble_length ** 2
            ricci = (3.0 / L2) * g
            scalar = np.full(shape, 12.0 / L2)
            einstein = ricci - 0.5 * scalar[..., None, None] * g
            return CurvatureBundle(ricci, scalar, einstein)
        raise ValueError(f"no analytic curvature for {model.kind}")
    R = riemann_batch(model, X, check=False)
    g = metric_batch(model, X, check=False)
    ginv = np.linalg.inv(g.reshape(-1, 4, 4)).reshape(g.shape)
    ricci = np.einsum("...ml,...mrls->...rs", ginv, R)
    scalar = np.einsum("...rs,...rs->...", ginv, ricci)
    einstein = ricci - 0.5 * scalar[..., None, None] * g
    return CurvatureBundle(ricci, scalar, einstein)


def einstein_batch(model, X, method="auto", check=True):
    return curvature_batch(model, X, method=method, check=check).einstein


# -- per-event operations (spec surface) ----------------------------------

def metric_at(model, p):
    return metric_batch(model, np.asarray(p, dtype=float)[None])[0]


def christoffel_at(model, p):
    return christoffel_batch(model, np.asarray(p, dtype=float)[None])[0]


def einstein_at(model, p, method="auto"):
    return einstein_batch(model, np.asarray(p, dtype=float)[None], method=method)[0]


def inner(model, p, u, v):
    """g_{mu nu}(p) u^mu v^nu."""
    g = metric_at(model, p)
    return float(np.asarray(u) @ g @ np.asarray(v))


def orthonormal_frame(model, p):
    """Future-timelike e_0 plus spacelike e_1..e_3 at p (Gram-Schmidt)."""
    g = metric_at(model, p)
    basis = np.eye(4)
    frame = []
    signs = [-1.0, 1.0, 1.0, 1.0]
    for mu in range(4):
        v = basis[mu].copy()
        for e, sg in zip(frame, signs):
            v = v - sg * (e @ g @ v) * e
        nrm2 = v @ g @ v
        v = v / np.sqrt(abs(nrm2))
        frame.append(v)
    if frame[0][0] < 0:
        frame[0] = -frame[0]
    return np.array(frame)


@dataclass(frozen=True)
class DecCheckReport:
    """Sampled dominant-energy-condition check at one event."""

    min_value: float
    passed: bool
    trials: int
    tolerance: float


def dec_sample_check(model, p, trials=200, seed=0xC0FFEE, tol=None, method="auto"):
    """Sample future-causal pairs (u, v) and report min of G(u, v).

    Passes iff the minimum is >= -tol.  tol defaults to 1e-9 times the
    Einstein-tensor scale at p (with an absolute floor).
    """
    p = np.asarray(p, dtype=float)
    G = einstein_at(model, p, method=method)
    if tol is None:
        tol = 1e-9 * max(1.0, float(np.abs(G).max()))
    frame = orthonormal_frame(model, p)
    rng = np.random.default_rng(seed)
    # causal u = e_0 + a.e_i with |a| <= 1; include null samples (|a| = 1)
    a = rng.uniform(-1.0, 1.0, size=(trials, 3))
    nrm = np.linalg.norm(a, axis=1)
    a[nrm > 1.0] /= nrm[nrm > 1.0, None]
    a[::5] /= np.maximum(np.linalg.norm(a[::5], axis=1), 1e-300)[:, None]  # null rays
    b = rng.uniform(-1.0, 1.0, size=(trials, 3))
    nrm = np.linalg.norm(b, axis=1)
    b[nrm > 1.0] /= nrm[nrm > 1.0, None]
    u = frame[0] + a @ frame[1:]
    v = frame[0] + b @ frame[1:]
    vals = np.einsum("nm,mk,nk->n", u, G, v)
    mn = float(vals.min())
    return DecCheckReport(min_value=mn, passed=bool(mn >= -tol), trials=trials, tolerance=tol)
