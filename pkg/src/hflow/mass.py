"""Hawking mass, its rate-of-change formulas, and monotonicity certificates.

The rate of change of the Hawking mass along a uniformly area expanding
flow (orthogonal velocity xi = I + beta I_perp, with I the inverse mean
curvature vector) decomposes into five integrand groups evaluated on a
single surface:

  line1: 4 pi (2 - chi)
  line2: 2 G(-H_perp, xi_perp)                        (Einstein tensor)
  line3: |ring II_r|^2 + 2 beta <ring II_r, ring II_t> + |ring II_t|^2
  line4: 2 [ |grad H / H|^2 + 2 beta alpha_H(grad H / H) + |alpha_H|^2 ]
  line5: 2 beta div(alpha_H)

and d m_H / ds = sqrt(area / (16 pi)^3) * (line1 + ... + line5).  The
radial/timelike split regroups the same integrand arrays, so the split
identity holds to rounding.  An independent cross-check evaluates the
Bray-Hayward-Mars-Simon variation formula through a null frame.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .calculus import (ScalarField, OneFormField, divergence, euler_characteristic,
                       gradient, differential, integrate, norm2_oneform, poisson_solve)
from .errors import BetaOutOfRange, ThetaNotMonotone, TopologyMismatch
from .spacetime import einstein_batch
from .surface import rotated_frame


def _beta_values(beta, extr):
    if beta is None:
        return np.zeros(extr.H2.shape)
    if isinstance(beta, ScalarField):
        return beta.values
    b = np.asarray(beta, dtype=float)
    if b.shape == ():
        return np.full(extr.H2.shape, float(b))
    return b


# -- Hawking mass ------------------------------------------------------------

@dataclass(frozen=True)
class MassReport:
    area: float
    willmore: float
    m_h: float

    def to_dict(self):
        return {"area": self.area, "willmore": self.willmore, "m_H": self.m_h}


def hawking_mass(extr):
    """m_H = sqrt(area/16pi) (1 - willmore/16pi), willmore = int <H,H> dA."""
    area = extr.area
    willmore = integrate(extr.H2, extr)
    m_h = math.sqrt(area / (16.0 * math.pi)) * (1.0 - willmore / (16.0 * math.pi))
    return MassReport(area=area, willmore=willmore, m_h=m_h)


# -- shared integrand pieces --------------------------------------------------

@dataclass(frozen=True)
class _Pieces:
    """Per-node integrands shared by the main/radial/timelike reports."""

    beta: np.ndarray
    g_rad: np.ndarray       # 2 G(-H_perp, I_perp)
    g_time: np.ndarray      # 2 G(-H_perp, beta I)
    ring_rr: np.ndarray     # |ring II_r|^2
    ring_tt: np.ndarray     # |ring II_t|^2
    ring_rt: np.ndarray     # <ring II_r, ring II_t>
    gradH2: np.ndarray      # |grad H / H|^2
    alpha2: np.ndarray      # |alpha_H|^2
    alpha_gradH: np.ndarray  # alpha_H(grad H / H)
    div_alpha: np.ndarray
    chi: int


def _variation_pieces(extr, beta, model=None):
    model = model or extr.model
    b = _beta_values(beta, extr)
    nu_h = extr.frame.nu_h
    nu_p = extr.frame.nu_h_perp

    G = einstein_batch(model, extr.grid.F, check=False)
    # -H_perp = H nu_p and xi_perp = (nu_p + beta nu_h)/H, so the H factors cancel
    g_pp = np.einsum("...m,...mn,...n->...", nu_p, G, nu_p, optimize=True)
    g_ph = np.einsum("...m,...mn,...n->...", nu_p, G, nu_h, optimize=True)
    g_rad = 2.0 * g_pp
    g_time = 2.0 * b * g_ph

    up = lambda A: np.einsum("...ac,...bd,...cd->...ab", extr.inv_metric,
                             extr.inv_metric, A, optimize=True)
    ring_r_up = up(extr.ring_II_r)
    ring_t_up = up(extr.ring_II_t)
    ring_rr = np.einsum("...ab,...ab->...", extr.ring_II_r, ring_r_up)
    ring_tt = np.einsum("...ab,...ab->...", extr.ring_II_t, ring_t_up)
    ring_rt = np.einsum("...ab,...ab->...", extr.ring_II_r, ring_t_up)

    dH = differential(extr.H, extr)
    dH_over_H = OneFormField(dH.comps / extr.H[..., None], extr)
    gradH2 = norm2_oneform(dH_over_H, extr)
    alpha = OneFormField(extr.alpha_H, extr)
    alpha2 = norm2_oneform(alpha, extr)
    alpha_gradH = np.einsum("...a,...a->...", extr.alpha_H,
                            dH_over_H.raised().comps)
    div_alpha = divergence(alpha, extr).values
    chi = euler_characteristic(extr).value
    return _Pieces(beta=b, g_rad=g_rad, g_time=g_time, ring_rr=ring_rr,
                   ring_tt=ring_tt, ring_rt=ring_rt, gradH2=gradH2,
                   alpha2=alpha2, alpha_gradH=alpha_gradH,
                   div_alpha=div_alpha, chi=chi)


# -- main variation report -----------------------------------------------------

@dataclass
class VariationReport:
    line1: float
    line2: float
    line3: float
    line4: float
    line5: float
    total: float
    normalization: float
    chi: int
    area: float
    integrands: dict = field(repr=False, default_factory=dict)

    @property
    def dm_ds(self):
        return self.total * self.normalization

    def to_dict(self):
        return {"line1": self.line1, "line2": self.line2, "line3": self.line3,
                "line4": self.line4, "line5": self.line5, "total": self.total,
                "normalization": self.normalization, "chi": self.chi,
                "area": self.area, "dm_ds": self.dm_ds}


def variation_main(extr, beta=None, model=None, pieces=None):
    """All five lines of the mass-variation formula on one surface."""
    p = pieces or _variation_pieces(extr, beta, model)
    b = p.beta
    i2 = p.g_rad + p.g_time
    i3 = p.ring_rr + 2.0 * b * p.ring_rt + p.ring_tt
    i4 = 2.0 * (p.gradH2 + 2.0 * b * p.alpha_gradH + p.alpha2)
    i5 = 2.0 * b * p.div_alpha
    line1 = 4.0 * math.pi * (2 - p.chi)
    line2 = integrate(i2, extr)
    line3 = integrate(i3, extr)
    line4 = integrate(i4, extr)
    line5 = integrate(i5, extr)
    total = line1 + line2 + line3 + line4 + line5
    return VariationReport(
        line1=line1, line2=line2, line3=line3, line4=line4, line5=line5,
        total=total, normalization=math.sqrt(extr.area / (16.0 * math.pi) ** 3),
        chi=p.chi, area=extr.area,
        integrands={"einstein": i2, "shear": i3, "connection": i4,
                    "divergence": i5, "beta": b})


def variation_plane(extr, model=None, pieces=None):
    """Rate of change flowing purely along I (the beta-independent terms)."""
    p = pieces or _variation_pieces(extr, None, model)
    line1 = 4.0 * math.pi * (2 - p.chi)
    total = line1 + integrate(
        p.g_rad + p.ring_rr + p.ring_tt + 2.0 * (p.gradH2 + p.alpha2), extr)
    return VariationReport(
        line1=line1, line2=integrate(p.g_rad, extr),
        line3=integrate(p.ring_rr + p.ring_tt, extr),
        line4=integrate(2.0 * (p.gradH2 + p.alpha2), extr), line5=0.0,
        total=total, normalization=math.sqrt(extr.area / (16.0 * math.pi) ** 3),
        chi=p.chi, area=extr.area)


def variation_cylinder(extr, beta, model=None, pieces=None):
    """Rate of change flowing purely along beta I_perp (the beta-linear terms)."""
    p = pieces or _variation_pieces(extr, beta, model)
    b = p.beta
    i2 = p.g_time
    i3 = 2.0 * b * p.ring_rt
    i4 = 4.0 * b * p.alpha_gradH
    i5 = 2.0 * b * p.div_alpha
    total = integrate(i2 + i3 + i4 + i5, extr)
    return VariationReport(
        line1=0.0, line2=integrate(i2, extr), line3=integrate(i3, extr),
        line4=integrate(i4, extr), line5=integrate(i5, extr), total=total,
        normalization=math.sqrt(extr.area / (16.0 * math.pi) ** 3),
        chi=p.chi, area=extr.area)


# -- null-frame (Bray-Hayward-Mars-Simon) cross-check --------------------------

@dataclass
class BhmsReport:
    phi_null: float
    g_term: float
    u_term: float
    theta_t_term: float
    theta_l_term: float
    total_radial: float
    total_timelike: float
    total: float
    u_radial: np.ndarray = field(repr=False, default=None)
    u_timelike: np.ndarray = field(repr=False, default=None)
    psi_radial: np.ndarray = field(repr=False, default=None)
    psi_timelike: np.ndarray = field(repr=False, default=None)
    theta_t: np.ndarray = field(repr=False, default=None)
    theta_l: np.ndarray = field(repr=False, default=None)

    def to_dict(self):
        return {"phi_null": self.phi_null, "g_term": self.g_term,
                "u_term": self.u_term, "theta_t_term": self.theta_t_term,
                "theta_l_term": self.theta_l_term,
                "total_radial": self.total_radial,
                "total_timelike": self.total_timelike, "total": self.total}


def _u_form(extr, l_vec, k_vec, A, B, beta_cut=None):
    """Connection 1-form of a null frame scaled by the velocity components.

    U(X) = (1/2phi) [ <l, nabla_X (B k)> / B - <k, nabla_X (A l)> / A ]
    with phi = -<l, k>.  A and B may vanish on a set; entries there are NaN.
    """
    chart = extr.chart
    g4 = extr.g4
    dot = lambda u, v: np.einsum("...m,...mn,...n->...", u, g4, v, optimize=True)
    phi = -dot(l_vec, k_vec)

    def cov_deriv(V):
        dV = np.stack([chart.d_theta(V, +1), chart.d_phi(V)], axis=-2)
        return dV + np.einsum("...mab,...a,...ib->...im", extr.gam4, V, extr.tangents, optimize=True)

    with np.errstate(divide="ignore", invalid="ignore"):
        Bk = B[..., None] * k_vec
        Al = A[..., None] * l_vec
        term1 = np.einsum("...im,...mn,...n->...i", cov_deriv(Bk), g4, l_vec, optimize=True) / B[..., None]
        term2 = np.einsum("...im,...mn,...n->...i", cov_deriv(Al), g4, k_vec, optimize=True) / A[..., None]
        U = (term1 - term2) / (2.0 * phi[..., None])
    return U, phi


def bhms_report(extr, beta=None, model=None):
    """Mass-variation total through the null-frame formula.

    Fixed frame l = nu_h + nu_h_perp, k = -nu_h + nu_h_perp (phi_null = 2),
    evaluated separately for the radial direction I and the timelike
    direction beta I_perp, then summed.  The timelike log-speed form is
    used in its regular version everywhere, including beta = 0 nodes.
    """
    model = model or extr.model
    chi = euler_characteristic(extr).value
    if chi != 2:
        raise TopologyMismatch(f"null-frame variation formula needs a sphere, chi = {chi}")
    b = _beta_values(beta, extr)
    nu_h, nu_p = extr.frame.nu_h, extr.frame.nu_h_perp
    H = extr.H
    l_vec = nu_h + nu_p
    k_vec = -nu_h + nu_p

    G = einstein_batch(model, extr.grid.F, check=False)
    g_pp = np.einsum("...m,...mn,...n->...", nu_p, G, nu_p, optimize=True)
    g_ph = np.einsum("...m,...mn,...n->...", nu_p, G, nu_h, optimize=True)

    up = lambda Aa: np.einsum("...ac,...bd,...cd->...ab", extr.inv_metric,
                              extr.inv_metric, Aa, optimize=True)
    ring_r_up = up(extr.ring_II_r)
    ring_t_up = up(extr.ring_II_t)
    ring_rr = np.einsum("...ab,...ab->...", extr.ring_II_r, ring_r_up)
    ring_tt = np.einsum("...ab,...ab->...", extr.ring_II_t, ring_t_up)
    ring_rt = np.einsum("...ab,...ab->...", extr.ring_II_r, ring_t_up)

    dH = differential(H, extr)
    dH_over_H = OneFormField(dH.comps / H[..., None], extr)
    gradH2 = norm2_oneform(dH_over_H, extr)
    alpha = OneFormField(extr.alpha_H, extr)
    alpha2 = norm2_oneform(alpha, extr)
    alpha_gradH = np.einsum("...a,...a->...", extr.alpha_H, dH_over_H.raised().comps)
    db = differential(b, extr)
    alpha_gradb = np.einsum("...a,...a->...", extr.alpha_H, db.raised().comps)

    # radial direction: xi = I = (1/2H)(l - k); A = 1/(2H), B = -1/(2H)
    A_r = 1.0 / (2.0 * H)
    U_rad, phi_null = _u_form(extr, l_vec, k_vec, A_r, -A_r)
    theta_t_rad = ring_rr + ring_tt                       # 16 pi Theta^T
    theta_l_rad = 2.0 * (alpha2 + gradH2)                 # 16 pi Theta^L
    # <xi, -H_perp> = 0 for the radial direction: no divergence term
    total_radial = integrate(2.0 * g_pp + theta_t_rad + theta_l_rad, extr)

    # timelike direction: xi = beta I_perp = (beta/2H)(l + k); A = B = beta/(2H)
    A_t = b / (2.0 * H)
    U_time, _ = _u_form(extr, l_vec, k_vec, A_t, A_t)
    theta_t_time = 2.0 * b * ring_rt
    theta_l_time = 4.0 * b * alpha_gradH - 4.0 * alpha_gradb  # regular form
    minus_alpha = OneFormField(-extr.alpha_H, extr)
    div_U_time = divergence(minus_alpha, extr).values  # U = -alpha_H on {beta != 0}
    # <xi, -H_perp> = -beta: u_term = -int 2 div(U) <xi, -H_perp>
    u_term = integrate(2.0 * b * div_U_time, extr)
    total_timelike = integrate(2.0 * b * g_ph + theta_t_time + theta_l_time, extr) + u_term

    with np.errstate(divide="ignore", invalid="ignore"):
        psi_radial = -np.log(H)
        psi_timelike = np.where(b != 0.0, np.log(np.abs(b)) - np.log(H), np.nan)

    return BhmsReport(
        phi_null=float(phi_null.mean()),
        g_term=integrate(2.0 * g_pp + 2.0 * b * g_ph, extr),
        u_term=u_term,
        theta_t_term=integrate(theta_t_rad + theta_t_time, extr),
        theta_l_term=integrate(theta_l_rad + theta_l_time, extr),
        total_radial=total_radial, total_timelike=total_timelike,
        total=total_radial + total_timelike,
        u_radial=U_rad, u_timelike=U_time,
        psi_radial=psi_radial, psi_timelike=psi_timelike,
        theta_t=(theta_t_rad + theta_t_time) / (16.0 * math.pi),
        theta_l=(theta_l_rad + theta_l_time) / (16.0 * math.pi))


# -- monotonicity certificates --------------------------------------------------

@dataclass(frozen=True)
class ThetaSpec:
    """Nondecreasing frame-angle reparametrization on (-1, 1)."""

    name: str
    fn: object
    dfn: object

    @classmethod
    def zero(cls):
        return cls("zero", lambda x: np.zeros_like(np.asarray(x, dtype=float)),
                   lambda x: np.zeros_like(np.asarray(x, dtype=float)))

    @classmethod
    def identity(cls):
        return cls("identity", lambda x: np.asarray(x, dtype=float),
                   lambda x: np.ones_like(np.asarray(x, dtype=float)))

    @classmethod
    def from_name(cls, name):
        if name in ("zero", "0"):
            return cls.zero()
        if name in ("identity", "x", "linear"):
            return cls.identity()
        raise ValueError(f"unknown theta spec {name!r}")


CASE_NU_H = "nu_h"
CASE_NU_XI = "nu_xi"


@dataclass
class MonotonicityCertificate:
    case: str
    theta_name: str
    condition_residual: float
    F_integral: float
    passed: bool
    tolerance: float
    residual_tolerance: float
    sup_beta: float

    def to_dict(self):
        return {"case": self.case, "theta": self.theta_name,
                "condition_residual": self.condition_residual,
                "F_integral": self.F_integral, "passed": self.passed,
                "tolerance": self.tolerance,
                "residual_tolerance": self.residual_tolerance,
                "sup_beta": self.sup_beta}


def lemma_functional(extr, beta):
    """Integrand |X|^2 + |grad Psi / Psi|^2 + 2 beta <X, grad Psi/Psi> + beta div X
    with X the vector dual to alpha_H and Psi = H."""
    b = _beta_values(beta, extr)
    alpha = OneFormField(extr.alpha_H, extr)
    alpha2 = norm2_oneform(alpha, extr)
    dH = differential(extr.H, extr)
    dH_over_H = OneFormField(dH.comps / extr.H[..., None], extr)
    gradH2 = norm2_oneform(dH_over_H, extr)
    cross = np.einsum("...a,...a->...", extr.alpha_H, dH_over_H.raised().comps)
    divX = divergence(alpha, extr).values
    return alpha2 + gradH2 + 2.0 * b * cross + b * divX


def monotonicity_certificate(extr, beta, theta_spec, case=CASE_NU_H,
                             delta=1e-2, tol=1e-8, residual_tol=1e-8):
    """Divergence-condition residual and the sufficiency functional.

    case 'nu_h':  frame angle -Theta(beta) from nu_h, so the rotated
    connection form is alpha_H + d(Theta o beta).
    case 'nu_xi': frame angle artanh(beta) + Theta(beta) from nu_h.
    Passes iff the L2 residual of div(alpha_rotated) is below residual_tol
    and the functional integral is >= -tol * (scale of its positive part).
    """
    b = _beta_values(beta, extr)
    sup_b = float(np.abs(b).max())
    if sup_b > 1.0 - delta:
        raise BetaOutOfRange(f"sup|beta| = {sup_b} exceeds 1 - delta = {1 - delta}")
    xs = np.linspace(-1.0 + delta, 1.0 - delta, 201)
    dtheta = np.asarray(theta_spec.dfn(xs))
    if np.any(dtheta < -1e-12):
        raise ThetaNotMonotone(f"theta' < 0 at x = {xs[dtheta.argmin()]}")

    theta_b = np.asarray(theta_spec.fn(b))
    if case == CASE_NU_H:
        angle = -theta_b
    elif case == CASE_NU_XI:
        angle = np.arctanh(b) + theta_b
    else:
        raise ValueError(f"unknown certificate case {case!r}")
    alpha_rot = OneFormField(
        extr.alpha_H - differential(angle, extr).comps, extr)
    div_rot = divergence(alpha_rot, extr).values
    residual = math.sqrt(integrate(div_rot**2, extr))

    f_node = lemma_functional(extr, b)
    F_integral = integrate(f_node, extr)
    pos_scale = integrate(np.maximum(f_node, 0.0), extr)
    passed = residual <= residual_tol and F_integral >= -tol * max(pos_scale, 1.0)
    return MonotonicityCertificate(
        case=case, theta_name=theta_spec.name, condition_residual=residual,
        F_integral=F_integral, passed=bool(passed), tolerance=tol,
        residual_tolerance=residual_tol, sup_beta=sup_b)


# -- finite-difference oracle ----------------------------------------------------

def fd_mass_derivative(grid, model, strategy, ds=1e-3):
    """Central-difference d m_H / ds via single exact-flow steps of +-ds.

    Independent of the variation formula: evolves the surface with one RK4
    step each way and differences the Hawking mass.
    """
    from .flow import rk4_step  # local import to avoid a module cycle
    from .surface import extrinsic_geometry

    plus = rk4_step(grid, model, strategy, ds)
    minus = rk4_step(grid, model, strategy, -ds)
    m_plus = hawking_mass(extrinsic_geometry(plus, model)).m_h
    m_minus = hawking_mass(extrinsic_geometry(minus, model)).m_h
    return (m_plus - m_minus) / (2.0 * ds)
