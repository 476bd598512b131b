"""Uniformly area expanding flows: xi = I + beta I_perp.

Classical 4-stage Runge-Kutta on the embedding nodes, with the geometry
and the tilt function beta recomputed at every stage.  A step is accepted
only when the new surface stays admissible and the exponential area law
|Sigma(s)| = |Sigma(0)| e^s holds to tolerance; rejected steps halve ds
and retry.  The flow velocity is purely orthogonal (no tangential
reparametrization), so mesh distortion is monitored, not corrected.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .calculus import divergence, OneFormField, poisson_solve
from .errors import BetaOutOfRange, HflowError, StepFailed
from .mass import (CASE_NU_H, MonotonicityCertificate, ThetaSpec, hawking_mass,
                   monotonicity_certificate, variation_main, _variation_pieces)
from .surface import SurfaceGrid, extrinsic_geometry, perp_rotate


# -- beta strategies ---------------------------------------------------------

@dataclass(frozen=True)
class ZeroBeta:
    name = "zero"

    def resolve(self, extr):
        return np.zeros(extr.H2.shape)


@dataclass(frozen=True)
class ConstantBeta:
    value: float
    name = "constant"

    def resolve(self, extr):
        return np.full(extr.H2.shape, self.value)


@dataclass(frozen=True)
class PrescribedBeta:
    """Fixed harmonic profile over the parameter grid."""

    coeffs: tuple  # ((l, m, amplitude), ...)
    name = "prescribed"

    def resolve(self, extr):
        from .harmonics import harmonic_expansion
        T, P = extr.chart.mesh
        return harmonic_expansion({(l, m): a for l, m, a in self.coeffs}, T, P)


@dataclass(frozen=True)
class TimeFlatPoissonBeta:
    """beta solving laplacian(beta) = -div(alpha_H), mean-zero gauge.

    Makes the rotated connection form alpha_H + d beta divergence free, the
    sufficient condition for mass monotonicity with the identity reparam.
    """

    rtol: float = 1e-11
    name = "time_flat_poisson"

    def resolve(self, extr):
        f = -divergence(OneFormField(extr.alpha_H, extr), extr).values
        return poisson_solve(f, extr, rtol=self.rtol).values


def resolve_beta(strategy, extr, delta=1e-2):
    """Evaluate a strategy and enforce sup|beta| <= 1 - delta (no rescaling)."""
    beta = strategy.resolve(extr)
    sup = float(np.abs(beta).max())
    if sup > 1.0 - delta:
        raise BetaOutOfRange(
            f"sup|beta| = {sup:.6f} exceeds 1 - delta = {1 - delta}; "
            "rescaling is not applied (it would break the divergence condition)")
    return beta


def flow_velocity(extr, beta):
    """xi = I + beta perp(I) with I = -H / <H, H>; satisfies <-H, xi> = 1."""
    inv_mc = -extr.H_vec / extr.H2[..., None]
    perp = perp_rotate(extr.frame, inv_mc)
    b = beta.values if hasattr(beta, "values") else np.asarray(beta, dtype=float)
    if b.shape == ():
        b = np.full(extr.H2.shape, float(b))
    return inv_mc + b[..., None] * perp


# -- time stepping ------------------------------------------------------------

@dataclass
class FlowState:
    s: float
    grid: SurfaceGrid
    beta: np.ndarray
    extr: object


def _stage_velocity(F, model, strategy, delta):
    grid = SurfaceGrid(F=F, model=model)
    extr = extrinsic_geometry(grid, model)
    beta = resolve_beta(strategy, extr, delta=delta)
    return flow_velocity(extr, beta), extr, beta


def rk4_step(grid, model, strategy, ds, delta=1e-2):
    """One classical RK4 step of the node flow; returns the new grid."""
    F0 = grid.F
    k1, _, _ = _stage_velocity(F0, model, strategy, delta)
    k2, _, _ = _stage_velocity(F0 + 0.5 * ds * k1, model, strategy, delta)
    k3, _, _ = _stage_velocity(F0 + 0.5 * ds * k2, model, strategy, delta)
    k4, _, _ = _stage_velocity(F0 + ds * k3, model, strategy, delta)
    return SurfaceGrid(F=F0 + (ds / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4), model=model)


def initial_state(grid, model=None, strategy=None, delta=1e-2):
    model = model or grid.model
    strategy = strategy or ZeroBeta()
    extr = extrinsic_geometry(grid, model)
    beta = resolve_beta(strategy, extr, delta=delta)
    return FlowState(s=0.0, grid=grid, beta=beta, extr=extr)


def step(state, model, strategy, ds, area_law_tol=1e-8, max_retries=8,
         ds_max=1e-2, delta=1e-2):
    """Advance one accepted step, halving ds on failure up to max_retries."""
    ds = min(ds, ds_max)
    last_err = None
    for _ in range(max_retries + 1):
        try:
            new_grid = rk4_step(state.grid, model, strategy, ds, delta=delta)
            extr = extrinsic_geometry(new_grid, model)
            beta = resolve_beta(strategy, extr, delta=delta)
            drift = abs(math.log(extr.area / state.extr.area) - ds)
            if drift > area_law_tol:
                raise HflowError(f"area law violated by {drift:.3e} over ds = {ds}")
            return FlowState(s=state.s + ds, grid=new_grid, beta=beta, extr=extr)
        except HflowError as err:
            last_err = err
            ds *= 0.5
    raise StepFailed(f"step rejected after {max_retries} halvings: {last_err}")


def mesh_quality(extr, extr0):
    """Worst-node eigenvalue ratio of the metric relative to the initial one.

    1.0 means no anisotropic distortion since s = 0; values near 0 flag a
    degenerating parametrization.
    """
    # generalized eigenvalues of g wrt g0 for 2x2 SPD pairs
    g, g0 = extr.metric, extr0.metric
    a = g[..., 0, 0] * g0[..., 1, 1] - 2.0 * g[..., 0, 1] * g0[..., 0, 1] \
        + g[..., 1, 1] * g0[..., 0, 0]
    det0 = g0[..., 0, 0] * g0[..., 1, 1] - g0[..., 0, 1] ** 2
    det = g[..., 0, 0] * g[..., 1, 1] - g[..., 0, 1] ** 2
    tr = a / det0
    dd = det / det0
    disc = np.sqrt(np.maximum(tr**2 / 4.0 - dd, 0.0))
    lam_max = tr / 2.0 + disc
    lam_min = tr / 2.0 - disc
    return float((lam_min / lam_max).min())


@dataclass
class TrajectoryRecord:
    s: float
    area: float
    m_h: float
    line1: float
    line2: float
    line3: float
    line4: float
    line5: float
    total: float
    fd_check: float
    sup_beta: float
    cond_residual: float
    F_integral: float
    mesh_q: float


@dataclass
class Trajectory:
    records: list = field(default_factory=list)
    certificates: list = field(default_factory=list)
    warnings: list = field(default_factory=list)
    final_state: object = None

    CSV_HEADER = ["s", "area", "m_H", "line1", "line2", "line3", "line4",
                  "line5", "total", "fd_check", "sup_beta", "cond_residual",
                  "F_integral", "mesh_q"]

    def fill_fd_checks(self):
        """Post-hoc centered differences of the recorded mass series."""
        rs = self.records
        for i in range(1, len(rs) - 1):
            ds2 = rs[i + 1].s - rs[i - 1].s
            if ds2 > 0:
                rs[i].fd_check = (rs[i + 1].m_h - rs[i - 1].m_h) / ds2

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(self.CSV_HEADER)
            for r in self.records:
                writer.writerow([repr(getattr(r, k.lower() if k != "m_H" else "m_h"))
                                 for k in self.CSV_HEADER])

    def summary(self):
        ms = [r.m_h for r in self.records]
        dm = np.diff(ms) if len(ms) > 1 else np.array([0.0])
        cert_pass = [c.passed for c in self.certificates]
        return {
            "steps": len(self.records) - 1,
            "s_final": self.records[-1].s if self.records else 0.0,
            "area_ratio": self.records[-1].area / self.records[0].area
            if self.records else 1.0,
            "m_H_initial": ms[0] if ms else 0.0,
            "m_H_final": ms[-1] if ms else 0.0,
            "min_step_dm": float(dm.min()),
            "monotone": bool(dm.min() >= -1e-8),
            "certificate_pass_rate": float(np.mean(cert_pass)) if cert_pass else 1.0,
            "warnings": list(self.warnings),
        }


def run(grid, model, strategy, s_max, ds, certificate_theta=None,
        certificate_case=CASE_NU_H, area_law_tol=1e-8, ds_max=1e-2,
        delta=1e-2, mesh_floor=0.1, with_reports=True, snapshot_dir=None):
    """Evolve to s_max, recording per-step mass and variation diagnostics.

    certificate_theta defaults to the identity reparametrization for the
    Poisson strategy (whose divergence condition it realizes) and to the
    unrotated frame otherwise.
    """
    if certificate_theta is None:
        certificate_theta = (ThetaSpec.identity()
                             if isinstance(strategy, TimeFlatPoissonBeta)
                             else ThetaSpec.zero())
    state = initial_state(grid, model, strategy, delta=delta)
    extr0 = state.extr
    traj = Trajectory()

    def record(st):
        mrep = hawking_mass(st.extr)
        if with_reports:
            pieces = _variation_pieces(st.extr, st.beta, model)
            var = variation_main(st.extr, st.beta, model, pieces=pieces)
            cert = monotonicity_certificate(st.extr, st.beta, certificate_theta,
                                            case=certificate_case, delta=delta)
            traj.certificates.append(cert)
            lines = (var.line1, var.line2, var.line3, var.line4, var.line5, var.total)
            cond, fint = cert.condition_residual, cert.F_integral
        else:
            lines = (math.nan,) * 6
            cond = fint = math.nan
        q = mesh_quality(st.extr, extr0)
        if q < mesh_floor:
            traj.warnings.append(f"mesh quality {q:.3f} below floor at s = {st.s:.4f}")
        traj.records.append(TrajectoryRecord(
            s=st.s, area=st.extr.area, m_h=mrep.m_h, line1=lines[0],
            line2=lines[1], line3=lines[2], line4=lines[3], line5=lines[4],
            total=lines[5], fd_check=math.nan,
            sup_beta=float(np.abs(st.beta).max()), cond_residual=cond,
            F_integral=fint, mesh_q=q))
        if snapshot_dir is not None:
            st.grid.to_csv(f"{snapshot_dir}/surface_{len(traj.records) - 1:05d}.csv")

    record(state)
    max_steps = 16 * int(round(s_max / ds)) + 64  # headroom for halved steps
    for _ in range(max_steps):
        remaining = s_max - state.s
        if remaining <= 1e-12:
            break
        state = step(state, model, strategy, min(ds, remaining),
                     area_law_tol=area_law_tol, ds_max=ds_max, delta=delta)
        record(state)
    else:
        raise StepFailed(f"flow did not reach s_max = {s_max} within {max_steps} steps")
    traj.final_state = state
    traj.fill_fd_checks()
    return traj
