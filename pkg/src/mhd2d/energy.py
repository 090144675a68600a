"""Energy functionals and bound-tracking monitors.

E0 is the physical energy: kinetic plus magnetic over the plasma plus
magnetic over the vacuum, with the metric measure.  The higher energies
contract r-th covariant derivatives of (u, beta) with a cutoff cometric

    q = delta - eta(d)^2 n x n        (Euclidean indices, pulled back per
                                       slot onto label indices)

that degenerates to the tangential projector on the interface and grows to
the full norm in the interior, add plain-norm curl terms of order r-1, and
-- for r >= 2 only -- an interface term contracting the one-sided jump
Hessian of the total pressure, weighted by theta = 1/(-grad_N P).  The
weight exists exactly when the interface sign condition holds, so a
violated margin switches the boundary term off and raises a flag instead
of producing a signed "energy".

All integrals are spectral-grid quadratures; the test suite pins them
against closed forms and a dense independent radial quadrature.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .curves import cutoff_cometric
from .elliptic import conormal_row
from .errors import SequencingError
from .vacuum import row_tangent

_SLOTS = "defghijklm"


@dataclass
class EnergyContext:
    """Frozen cutoff-cometric data for the weighted energies at one time."""

    q_label: np.ndarray       # (2, 2, grid) cometric on plasma label indices
    q_interface: np.ndarray   # (2, 2, n_phi) Euclidean cometric at interface
    arc: np.ndarray           # (n_phi,) interface arc weights
    theta: np.ndarray | None  # (n_phi,) boundary weight, None when violated
    taylor_margin: float
    eta: np.ndarray           # (grid,) cutoff profile (diagnostics)
    d: np.ndarray             # (grid,) distance to the interface


@dataclass
class EnergyReport:
    """Per-step monitor record."""

    t: float
    E: np.ndarray             # E_0 .. E_3
    K_cal: float
    E_cal: float
    M: float
    L: float
    taylor_margin: float
    vol_omega: float
    flags: list = field(default_factory=list)

    def as_dict(self):
        out = {"t": self.t}
        for s in range(4):
            out[f"E{s}"] = float(self.E[s])
        out.update(Kcal=self.K_cal, Ecal=self.E_cal, M=self.M, L=self.L,
                   taylor_margin=self.taylor_margin, vol_omega=self.vol_omega,
                   flags=list(self.flags))
        return out


def build_energy_context(plasma_dom, gamma_curve, taylor_report, d0,
                         lo_frac=0.25, hi_frac=0.5):
    """Cutoff cometric of the current plasma grid relative to the interface.

    ``d0`` is the collar scale (the nearest-point projection must be smooth
    within it, so keep it at or below the interface normal-geometry scales).
    """
    shape = plasma_dom.chart.shape
    pts = plasma_dom.x.reshape(2, -1).T
    cc = cutoff_cometric(gamma_curve, pts, d0, lo_frac, hi_frac)
    q_euc = cc.q_upper.reshape(2, 2, *shape)
    q_label = np.einsum("ai...,bj...,ij...->ab...",
                        plasma_dom.Jinv, plasma_dom.Jinv, q_euc)
    row = plasma_dom.chart.interface_row
    q_interface = q_euc[:, :, row]
    _, _, speed = row_tangent(plasma_dom, row)
    arc = speed * (2.0 * np.pi / plasma_dom.chart.n_phi)
    theta = None
    if taylor_report is not None and taylor_report.margin > 0.0:
        theta = 1.0 / (-taylor_report.grad_N)
    margin = 0.0 if taylor_report is None else taylor_report.margin
    return EnergyContext(q_label, q_interface, arc, theta, margin,
                         cc.eta.reshape(shape), cc.d.reshape(shape))


def q_inner(q, T, S, rank):
    """Contraction of two covariant rank-``rank`` tensors with a cometric."""
    R = np.asarray(S)
    for slot in range(rank):
        R = np.moveaxis(
            np.einsum("ab...,b...->a...", q, np.moveaxis(R, slot, 0)), 0, slot)
    T = np.asarray(T)
    idx = list(range(T.ndim))
    return np.einsum(T, idx, R, idx, idx[rank:])


def to_euclidean(dom, T, rank):
    """Push a covariant label tensor to Euclidean index components."""
    out = np.asarray(T)
    for slot in range(rank):
        out = np.moveaxis(
            np.einsum("ai...,a...->i...", dom.Jinv, np.moveaxis(out, slot, 0)),
            0, slot)
    return out


def covariant_power(dom, T, rank, order):
    """``order`` repeated covariant derivatives of a rank-``rank`` tensor."""
    out = T
    for k in range(order):
        out = dom.cov_deriv(out, rank + k)
    return out


def e0(plasma_dom, state, vacuum_dom=None, vacuum_state=None):
    """Conserved physical energy: kinetic + magnetic + vacuum magnetic."""
    total = 0.5 * plasma_dom.quad(plasma_dom.norm2(state.u, 1))
    total += 0.5 * state.mu * plasma_dom.quad(plasma_dom.norm2(state.beta, 1))
    if vacuum_state is not None:
        total += 0.5 * vacuum_state.mu * vacuum_dom.quad(
            vacuum_dom.norm2(vacuum_state.w, 1))
    return float(total)


def e_r(plasma_dom, state, r, ctx, vacuum_dom=None, q_minus=None):
    """Weighted energy of order r in {1, 2, 3}.

    Returns (value, flags).  The interface term exists for r >= 2 and needs
    a positive Taylor margin; when the margin fails the term is omitted and
    "taylor_violated" flagged, keeping the interior part observable.  The
    pressure jump uses the plasma q+ against ``q_minus`` on the vacuum
    chart (zero when absent), one-sided on each chart and subtracted in
    Euclidean components.
    """
    if r not in (1, 2, 3):
        raise ValueError("energy order must be 1, 2, or 3")
    flags = []
    gu = covariant_power(plasma_dom, state.u, 1, r)
    gb = covariant_power(plasma_dom, state.beta, 1, r)
    value = plasma_dom.quad(q_inner(ctx.q_label, gu, gu, r + 1))
    value += state.mu * plasma_dom.quad(q_inner(ctx.q_label, gb, gb, r + 1))
    cu = covariant_power(plasma_dom, plasma_dom.curl(state.u), 0, r - 1)
    cb = covariant_power(plasma_dom, plasma_dom.curl(state.beta), 0, r - 1)
    value += plasma_dom.quad(plasma_dom.norm2(cu, r - 1))
    value += state.mu * plasma_dom.quad(plasma_dom.norm2(cb, r - 1))

    if r >= 2:
        if ctx.theta is None:
            flags.append("taylor_violated")
        else:
            if state.q_plus is None:
                raise SequencingError("order >= 2 energies need the current "
                                      "pressure; run solve_pressure first")
            row = plasma_dom.chart.interface_row
            gp = covariant_power(plasma_dom, state.q_plus, 0, r)
            jump = to_euclidean(plasma_dom, gp, r)[(...,) + (row, slice(None))]
            if q_minus is not None:
                gm = covariant_power(vacuum_dom, q_minus, 0, r)
                vrow = vacuum_dom.chart.interface_row
                jump = jump - to_euclidean(vacuum_dom, gm, r)[
                    (...,) + (vrow, slice(None))]
            dens = q_inner(ctx.q_interface, jump, jump, r)
            value += float((dens * ctx.theta * ctx.arc).sum())
    return float(value), flags


def track_bounds(plasma_dom, state, taylor_report, gamma_geom, wall_geom=None,
                 vacuum_dom=None, q_minus=None, q_plus_prev=None,
                 q_minus_prev=None, dt=None):
    """Measured values of the bound witnesses (K, E, M, L).

    K is the larger of the curvature sup and reciprocal reach over the
    boundary curves; E is sup |1/grad_N P| (inf when the sign degenerates);
    M is the interior sup of |grad P| + |grad u| + |grad beta|; L sums the
    interface sups of the jump Hessian and of grad_N D_t P.  The D_t P part
    needs the previous pressures; without them the report is partial.
    """
    flags = []
    K_cal = gamma_geom.K if wall_geom is None else max(gamma_geom.K, wall_geom.K)

    gmin = float(np.abs(taylor_report.grad_N).min())
    if gmin < 1e-13:
        E_cal = np.inf
        flags.append("degenerate_gradient")
    else:
        E_cal = 1.0 / gmin

    if state.q_plus is None:
        raise SequencingError("bound tracking needs the current pressure")
    gP = np.sqrt(plasma_dom.norm2(plasma_dom.chart.partial(state.q_plus), 1))
    gu = np.sqrt(plasma_dom.norm2(plasma_dom.cov_deriv(state.u, 1), 2))
    gb = np.sqrt(plasma_dom.norm2(plasma_dom.cov_deriv(state.beta, 1), 2))
    M = float((gP + gu + gb).max())

    row = plasma_dom.chart.interface_row
    hess = to_euclidean(plasma_dom,
                        covariant_power(plasma_dom, state.q_plus, 0, 2), 2)
    jump = hess[:, :, row]
    if q_minus is not None:
        vrow = vacuum_dom.chart.interface_row
        jump = jump - to_euclidean(
            vacuum_dom, covariant_power(vacuum_dom, q_minus, 0, 2), 2)[:, :, vrow]
    L = float(np.sqrt((jump**2).sum(axis=(0, 1))).max())
    if q_plus_prev is None or dt is None:
        flags.append("partial_L")
    else:
        Np, _ = conormal_row(plasma_dom, row, +1)
        dtp = (state.q_plus - q_plus_prev) / dt
        rate = np.einsum("a...,a...->...",
                         Np, plasma_dom.chart.partial(dtp)[:, row])
        if q_minus is not None and q_minus_prev is not None:
            Nv, _ = conormal_row(vacuum_dom, vacuum_dom.chart.interface_row, +1)
            dtm = (q_minus - q_minus_prev) / dt
            rate = rate - np.einsum(
                "a...,a...->...",
                Nv, vacuum_dom.chart.partial(dtm)[:, vacuum_dom.chart.interface_row])
        L += float(np.abs(rate).max())
    return {"K_cal": float(K_cal), "E_cal": float(E_cal), "M": M, "L": L,
            "flags": flags}


def theorem_monitor(reports, horizon=None):
    """Largest time with sum_s E_s(t) <= 2 sum_s E_s(0) along a run.

    ``reports`` is a time-ordered sequence of EnergyReport.  Runs whose
    reports carry a Taylor violation report the violation instead of a
    time (the bound's hypothesis fails).  Returns a dict with T_observed,
    holds_to_horizon, and violated.
    """
    if len(reports) < 2:
        raise SequencingError("monitor needs at least two reports")
    if any("taylor_violated" in rep.flags for rep in reports):
        return {"T_observed": None, "holds_to_horizon": False, "violated": True}
    budget = 2.0 * float(np.sum(reports[0].E))
    T_obs = reports[0].t
    for rep in reports:
        if float(np.sum(rep.E)) > budget:
            break
        T_obs = rep.t
    holds = horizon is not None and T_obs >= horizon
    return {"T_observed": float(T_obs), "holds_to_horizon": bool(holds),
            "violated": False}
