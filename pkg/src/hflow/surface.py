"""Discretized spacelike 2-surfaces and their extrinsic geometry.

Grid: Gauss-Legendre nodes in theta (interior, no pole nodes), equispaced
phi.  Tangential derivatives are 7-point (6th-order) centered finite
differences; stencils that reach past a pole use the standard sign-aware
extension f(-theta, phi) = parity * f(theta, phi + pi), so n_phi must be
even.  Quadrature: Gauss-Legendre in cos(theta), trapezoid in phi.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import kernels
from .errors import (DegenerateInducedMetric, DegenerateSpec, NotAdmissible,
                     NotNormal)
from .harmonics import harmonic_expansion
from .spacetime import (SpacetimeModel, christoffel_batch, metric_batch,
                        riemann_batch)

_HW = 3  # stencil half-width; 7-point interior stencils


def _fornberg(x0, x, m):
    """Fornberg weights for derivatives 0..m at x0 over nodes x."""
    n = len(x)
    c = np.zeros((n, m + 1))
    c1 = 1.0
    c4 = x[0] - x0
    c[0, 0] = 1.0
    for i in range(1, n):
        mn = min(i, m)
        c2 = 1.0
        c5 = c4
        c4 = x[i] - x0
        for j in range(i):
            c3 = x[i] - x[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[i, k] = c1 * (k * c[i - 1, k - 1] - c5 * c[i - 1, k]) / c2
                c[i, 0] = -c1 * c5 * c[i - 1, 0] / c2
            for k in range(mn, 0, -1):
                c[j, k] = (c4 * c[j, k] - k * c[j, k - 1]) / c3
            c[j, 0] = c4 * c[j, 0] / c3
        c1 = c2
    return c


class GridChart:
    """Cached per-(n_theta, n_phi) discretization data."""

    def __init__(self, n_theta, n_phi):
        if n_theta < 16 or n_phi < 16:
            raise DegenerateSpec("grid sizes must be at least 16")
        if n_phi % 2:
            raise DegenerateSpec("n_phi must be even (pole extension shifts phi by pi)")
        self.n_theta = n_theta
        self.n_phi = n_phi
        x, w = np.polynomial.legendre.leggauss(n_theta)
        self.theta = np.arccos(x)[::-1].copy()
        self.w_x = w[::-1].copy()           # weights for the cos(theta) measure
        self.phi = 2.0 * np.pi * np.arange(n_phi) / n_phi
        self.dphi = 2.0 * np.pi / n_phi
        # node quadrature weight without the area density:
        # int f dA = sum f * sqrt(det g) * quad_w
        self.quad_w = (self.w_x / np.sin(self.theta))[:, None] * self.dphi
        hw = _HW
        north = -self.theta[:hw][::-1]
        south = (2.0 * np.pi - self.theta[-hw:])[::-1]
        ext = np.concatenate([north, self.theta, south])
        D1 = np.zeros((n_theta, n_theta + 2 * hw))
        for i in range(n_theta):
            sl = slice(i, i + 2 * hw + 1)
            D1[i, sl] = _fornberg(self.theta[i], ext[sl], 1)[:, 1]
        self.D_theta = D1
        wts = np.array([-1.0, 9.0, -45.0, 0.0, 45.0, -9.0, 1.0]) / (60.0 * self.dphi)
        Dp = np.zeros((n_phi, n_phi))
        for k, c in zip(range(-3, 4), wts):
            if c:
                Dp += c * np.eye(n_phi, k=k) + c * np.eye(n_phi, k=k - np.sign(k) * n_phi)
        self.D_phi = Dp
        self.mesh = np.meshgrid(self.theta, self.phi, indexing="ij")

    def d_theta(self, f, parity):
        """d/dtheta with pole ghosts; parity is the field's pole sign.

        Accepts (n_theta, n_phi) or (n_theta, n_phi, k) arrays.
        """
        shifted = np.roll(f, self.n_phi // 2, axis=1)
        north = parity * shifted[:_HW][::-1]
        south = parity * shifted[-_HW:][::-1]
        ext = np.concatenate([north, f, south], axis=0)
        return np.tensordot(self.D_theta, ext, axes=(1, 0))

    def d_phi(self, f):
        out = np.tensordot(f, self.D_phi, axes=(1, 1))  # (nt, ..., np)
        return np.moveaxis(out, -1, 1)


@lru_cache(maxsize=8)
def get_chart(n_theta, n_phi):
    return GridChart(n_theta, n_phi)


# -- surface families ------------------------------------------------------

@dataclass(frozen=True)
class RoundSphere:
    radius: float
    t0: float = 0.0

    def embed(self, theta, phi):
        if self.radius <= 0:
            raise DegenerateSpec("sphere radius must be positive")
        st, ct = np.sin(theta), np.cos(theta)
        return np.stack([np.full_like(theta, self.t0), self.radius * st * np.cos(phi),
                         self.radius * st * np.sin(phi), self.radius * ct], axis=-1)


@dataclass(frozen=True)
class Ellipsoid:
    a: float
    b: float
    c: float
    t0: float = 0.0

    def embed(self, theta, phi):
        if min(self.a, self.b, self.c) <= 0:
            raise DegenerateSpec("ellipsoid semi-axes must be positive")
        st, ct = np.sin(theta), np.cos(theta)
        return np.stack([np.full_like(theta, self.t0), self.a * st * np.cos(phi),
                         self.b * st * np.sin(phi), self.c * ct], axis=-1)


@dataclass(frozen=True)
class RadialGraph:
    """r(theta, phi) = base_radius + sum of real harmonics."""

    base_radius: float
    coeffs: tuple = ()  # ((l, m, amplitude), ...)
    t0: float = 0.0

    def embed(self, theta, phi):
        r = self.base_radius + harmonic_expansion(
            {(l, m): a for l, m, a in self.coeffs}, theta, phi)
        if np.any(r <= 0):
            raise DegenerateSpec("radial graph has nonpositive radius")
        st, ct = np.sin(theta), np.cos(theta)
        return np.stack([np.full_like(r, self.t0), r * st * np.cos(phi),
                         r * st * np.sin(phi), r * ct], axis=-1)


@dataclass(frozen=True)
class TimePerturbed:
    """Base family with a harmonic time offset t(theta, phi)."""

    base: object
    time_coeffs: tuple = ()  # ((l, m, amplitude), ...)

    def embed(self, theta, phi):
        F = self.base.embed(theta, phi)
        F[..., 0] = F[..., 0] + harmonic_expansion(
            {(l, m): a for l, m, a in self.time_coeffs}, theta, phi)
        return F


@dataclass
class SurfaceGrid:
    """Discretized embedding of the 2-sphere into a spacetime chart."""

    F: np.ndarray  # (n_theta, n_phi, 4)
    model: SpacetimeModel

    @property
    def n_theta(self):
        return self.F.shape[0]

    @property
    def n_phi(self):
        return self.F.shape[1]

    @property
    def chart(self):
        return get_chart(self.n_theta, self.n_phi)

    def to_csv(self, path):
        ch = self.chart
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["i", "j", "theta", "phi", "t", "x1", "x2", "x3"])
            for i in range(self.n_theta):
                for j in range(self.n_phi):
                    writer.writerow([i, j, repr(ch.theta[i]), repr(ch.phi[j])]
                                    + [repr(v) for v in self.F[i, j]])

    @classmethod
    def from_csv(cls, path, model):
        rows = np.loadtxt(path, delimiter=",", skiprows=1)
        ni = int(rows[:, 0].max()) + 1
        nj = int(rows[:, 1].max()) + 1
        F = np.empty((ni, nj, 4))
        F[rows[:, 0].astype(int), rows[:, 1].astype(int)] = rows[:, 4:8]
        return cls(F=F, model=model)


def build_surface(spec, model, n_theta, n_phi):
    """Evaluate a family spec on the quadrature grid and validate the chart."""
    chart = get_chart(n_theta, n_phi)
    T, P = chart.mesh
    F = spec.embed(T, P)
    model.ensure_in_chart(F)
    return SurfaceGrid(F=F, model=model)


# -- extrinsic geometry ----------------------------------------------------

@dataclass(frozen=True)
class NormalFrame:
    """Orthonormal normal frame: outward spacelike nu_h, future timelike nu_h_perp."""

    nu_h: np.ndarray        # (n_theta, n_phi, 4)
    nu_h_perp: np.ndarray   # (n_theta, n_phi, 4)
    g4: np.ndarray = field(repr=False, default=None)  # ambient metric at nodes


@dataclass
class ExtrinsicData:
    """All per-node geometry of the surface used by the mass formulas."""

    grid: SurfaceGrid
    model: SpacetimeModel
    g4: np.ndarray          # ambient metric at nodes (nt, np, 4, 4)
    gam4: np.ndarray        # ambient Christoffels at nodes (nt, np, 4, 4, 4)
    tangents: np.ndarray    # (nt, np, 2, 4)
    metric: np.ndarray      # induced metric (nt, np, 2, 2)
    inv_metric: np.ndarray
    det: np.ndarray
    sqrt_det: np.ndarray
    dA: np.ndarray          # per-node area element including quadrature weight
    area: float
    II: np.ndarray          # normal-valued second fundamental form (nt, np, 2, 2, 4)
    H_vec: np.ndarray       # mean curvature vector (nt, np, 4)
    H2: np.ndarray          # <H, H>
    H: np.ndarray           # |H| (valid where H2 > 0)
    frame: NormalFrame
    II_r: np.ndarray        # (nt, np, 2, 2)
    II_t: np.ndarray
    ring_II_r: np.ndarray
    ring_II_t: np.ndarray
    alpha_H: np.ndarray     # connection 1-form components (nt, np, 2)
    _gauss_K: np.ndarray = None
    _lap_matrix: object = None
    _lap_precond: object = None

    @property
    def chart(self):
        return self.grid.chart

    @property
    def n_theta(self):
        return self.grid.n_theta

    @property
    def n_phi(self):
        return self.grid.n_phi

    def ambient_dot(self, u, v):
        return np.einsum("...m,...mn,...n->...", u, self.g4, v, optimize=True)

    @property
    def gauss_K(self):
        """Gauss curvature via the Gauss equation (ambient sectional + II)."""
        if self._gauss_K is None:
            R = riemann_batch(self.model, self.grid.F, check=False)
            e1 = self.tangents[..., 0, :]
            e2 = self.tangents[..., 1, :]
            # <R(e1, e2) e2, e1> with R^r_{s m v} contracting X into m, Y into v
            sec = np.einsum("...rsmv,...r,...s,...m,...v->...", R, e1, e2, e1, e2, optimize=True)
            ii = self.II
            kext = (self.ambient_dot(ii[..., 0, 0, :], ii[..., 1, 1, :])
                    - self.ambient_dot(ii[..., 0, 1, :], ii[..., 0, 1, :]))
            self._gauss_K = (sec + kext) / self.det
        return self._gauss_K


def _frame_from_H(F, g4, Hvec, H, tangents, inv_metric):
    """nu_h = -H/|H|; nu_h_perp from the time axis projected to the normal
    space, orthogonalized against nu_h, normalized, oriented future."""
    nu_h = -Hvec / H[..., None]
    et = np.zeros_like(Hvec)
    et[..., 0] = 1.0
    lowered = np.einsum("...ia,...ab->...ib", tangents, g4)
    et_tan = np.einsum("...b,...ib->...i", et, lowered, optimize=True)
    et_n = et - np.einsum("...ab,...b,...am->...m", inv_metric, et_tan, tangents, optimize=True)
    dot = lambda u, v: np.einsum("...m,...mn,...n->...", u, g4, v, optimize=True)
    u = et_n - dot(et_n, nu_h)[..., None] * nu_h
    norm2 = -dot(u, u)
    if np.any(norm2 <= 0):
        raise DegenerateInducedMetric("projected time axis is not timelike in the normal space")
    nu_p = u / np.sqrt(norm2)[..., None]
    nu_p = nu_p * np.sign(nu_p[..., 0:1])
    return NormalFrame(nu_h=nu_h, nu_h_perp=nu_p, g4=g4)


def extrinsic_geometry(grid, model=None, eps_adm=None, strict=True):
    """Compute all extrinsic geometry of a surface grid.

    Raises NotAdmissible when min <H, H> falls at or below eps_adm (default
    1e-6 times the grid mean of <H, H>); with strict=False the admissibility
    violation is recorded but frame-dependent fields are still evaluated
    (NaN where the mean curvature vector is not spacelike).
    """
    model = model or grid.model
    chart = grid.chart
    F = grid.F
    nt, nph = grid.n_theta, grid.n_phi

    g4 = metric_batch(model, F)
    gam4 = christoffel_batch(model, F, check=False)

    Ft = chart.d_theta(F, +1)
    Fp = chart.d_phi(F)
    Ftt = chart.d_theta(Ft, -1)
    Ftp = chart.d_phi(Ft)
    Fpp = chart.d_phi(Fp)
    Fa = np.stack([Ft, Fp], axis=-2)
    Fab = np.stack([np.stack([Ftt, Ftp], axis=-2),
                    np.stack([Ftp, Fpp], axis=-2)], axis=-3)

    flat = lambda a: a.reshape((nt * nph,) + a.shape[2:])
    g2, g2inv, det, II, Hvec = kernels.extrinsic_core(
        flat(g4), flat(gam4), flat(Fa), flat(Fab))
    unflat = lambda a: a.reshape((nt, nph) + a.shape[1:])
    g2, g2inv, det, II, Hvec = map(unflat, (g2, g2inv, det, II, Hvec))

    if np.any(det <= 0) or np.any(g2[..., 0, 0] <= 0):
        raise DegenerateInducedMetric("induced metric is not positive definite")

    sqrt_det = np.sqrt(det)
    dA = sqrt_det * chart.quad_w
    area = float(dA.sum())

    H2 = np.einsum("...m,...mn,...n->...", Hvec, g4, Hvec, optimize=True)
    if eps_adm is None:
        eps_adm = 1e-6 * float(np.mean(H2))
    min_h2 = float(H2.min())
    if min_h2 <= eps_adm:
        loc = np.unravel_index(int(H2.argmin()), H2.shape)
        if strict:
            raise NotAdmissible(
                f"mean curvature vector not strictly spacelike: min <H,H> = {min_h2:.3e} "
                f"at node {loc}", min_value=min_h2, location=loc)

    with np.errstate(invalid="ignore"):
        H = np.sqrt(np.where(H2 > 0, H2, np.nan))
    frame = _frame_from_H(F, g4, Hvec, H, Fa, g2inv)

    # connection 1-form alpha_H(e_a) = <nabla_a nu_h, nu_h_perp>
    nu_h, nu_p = frame.nu_h, frame.nu_h_perp
    dnu = np.stack([chart.d_theta(nu_h, +1), chart.d_phi(nu_h)], axis=-2)
    cov_nu = dnu + np.einsum("...mab,...a,...ib->...im", gam4, nu_h, Fa, optimize=True)
    alpha = np.einsum("...im,...mn,...n->...i", cov_nu, g4, nu_p, optimize=True)

    II_r = -np.einsum("...ijm,...mn,...n->...ij", II, g4, nu_h, optimize=True)
    II_t = -np.einsum("...ijm,...mn,...n->...ij", II, g4, nu_p, optimize=True)
    tr_r = np.einsum("...ab,...ab->...", g2inv, II_r)
    tr_t = np.einsum("...ab,...ab->...", g2inv, II_t)
    ring_r = II_r - 0.5 * tr_r[..., None, None] * g2
    ring_t = II_t - 0.5 * tr_t[..., None, None] * g2

    return ExtrinsicData(
        grid=grid, model=model, g4=g4, gam4=gam4, tangents=Fa,
        metric=g2, inv_metric=g2inv, det=det, sqrt_det=sqrt_det, dA=dA,
        area=area, II=II, H_vec=Hvec, H2=H2, H=H, frame=frame,
        II_r=II_r, II_t=II_t, ring_II_r=ring_r, ring_II_t=ring_t,
        alpha_H=alpha)


# -- normal bundle operations ----------------------------------------------

def perp_rotate(frame, v, tol=1e-8):
    """Lorentzian 90-degree rotation on the normal bundle.

    v = a nu_h + b nu_h_perp maps to b nu_h + a nu_h_perp.  Raises
    NotNormal when v has a tangential component above tol (relative).
    """
    g4 = frame.g4
    dot = lambda u, w: np.einsum("...m,...mn,...n->...", u, g4, w, optimize=True)
    a = dot(v, frame.nu_h)
    b = -dot(v, frame.nu_h_perp)
    recon = a[..., None] * frame.nu_h + b[..., None] * frame.nu_h_perp
    resid = v - recon
    scale = np.sqrt(a**2 + b**2) + 1e-300
    tang = np.sqrt(np.abs(dot(resid, resid)))
    if np.any(tang > tol * np.maximum(scale, 1.0)):
        raise NotNormal(f"vector has tangential part up to {float(tang.max()):.3e}")
    return b[..., None] * frame.nu_h + a[..., None] * frame.nu_h_perp


def rotated_frame(extr, theta_field):
    """Boost the normal frame by a hyperbolic angle field.

    nu = cosh(theta) nu_h + sinh(theta) nu_h_perp.  Returns the new frame
    and its connection 1-form computed by direct differentiation (the
    transform law alpha_new = alpha_H - d theta is a test invariant, not
    an implementation shortcut).
    """
    chart = extr.chart
    th = np.asarray(theta_field, dtype=float)
    ch, sh = np.cosh(th)[..., None], np.sinh(th)[..., None]
    nu = ch * extr.frame.nu_h + sh * extr.frame.nu_h_perp
    nu_perp = sh * extr.frame.nu_h + ch * extr.frame.nu_h_perp
    dnu = np.stack([chart.d_theta(nu, +1), chart.d_phi(nu)], axis=-2)
    cov = dnu + np.einsum("...mab,...a,...ib->...im", extr.gam4, nu, extr.tangents, optimize=True)
    alpha = np.einsum("...im,...mn,...n->...i", cov, extr.g4, nu_perp, optimize=True)
    return NormalFrame(nu_h=nu, nu_h_perp=nu_perp, g4=extr.g4), alpha


@dataclass(frozen=True)
class AdmissibilityReport:
    passed: bool
    min_h2: float
    location: tuple
    eps_adm: float


def admissibility_check(extr, eps_adm=None):
    """Pass iff min <H, H> >= eps_adm (default 1e-6 * grid mean)."""
    if eps_adm is None:
        eps_adm = 1e-6 * float(np.mean(extr.H2))
    loc = np.unravel_index(int(extr.H2.argmin()), extr.H2.shape)
    mn = float(extr.H2.min())
    return AdmissibilityReport(passed=bool(mn >= eps_adm), min_h2=mn,
                               location=loc, eps_adm=eps_adm)
