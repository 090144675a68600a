"""Plasma-side dynamics: pressure problem, evolution right sides, Taylor sign.

The incompressible MHD system on the plasma chart, for covariant label
components with the pulled-back metric:

    D_t u_a + grad_a q = u^c grad_a u_c + mu beta^d grad_d beta_a
    D_t beta_a         = beta^d grad_d u_a + beta^c grad_a u_c
    div u = div beta = 0,        beta . N = 0 on the interface,

where D_t is the plain time derivative at fixed label.  Taking the
divergence of the momentum equation trades the incompressibility constraint
for an elliptic problem for the total pressure,

    Lap q = - grad_a u^b grad_b u^a + mu grad_a beta^b grad_b beta^a ,

with Dirichlet data on the interface: the total pressure is continuous
across it, so the trace comes from the vacuum side.

``step_plasma`` advances (u, beta) with classical RK4 at a frozen flow map,
one pressure solve per stage, then projects both fields back onto the
divergence-free constraint.  The projection is a homogeneous-Neumann Laplace
solve, which leaves normal traces -- the interface coupling data -- exactly
as they were.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .charts import drop_nyquist
from .elliptic import LaplaceSolver, conormal_row
from .errors import SequencingError, StabilityWarning


@dataclass
class PlasmaState:
    """Covariant field state on the plasma domain."""

    u: np.ndarray                 # (2, n_s, n_phi) covariant velocity
    beta: np.ndarray              # (2, n_s, n_phi) covariant magnetic field
    mu: float = 1.0               # permeability scalar on the magnetic terms
    q_plus: np.ndarray | None = None  # total pressure from the latest solve

    def copy(self):
        q = None if self.q_plus is None else self.q_plus.copy()
        return PlasmaState(self.u.copy(), self.beta.copy(), self.mu, q)


@dataclass
class PressureProblem:
    """Data of one total-pressure solve."""

    rhs: np.ndarray               # scalar source on the plasma grid
    dirichlet: np.ndarray | float  # interface trace (vacuum-side pressure)


@dataclass
class TaylorReport:
    """Sign condition of the pressure jump across the interface."""

    grad_N: np.ndarray  # N^a (grad_a q+ - grad_a q-) at the interface nodes
    margin: float       # eps = -max grad_N; the condition holds when > 0
    violated: bool      # margin <= 0
    degenerate: bool    # the jump gradient vanishes identically


def gradient_contraction(dom, w):
    """grad_a w^b grad_b w^a for a covariant field w_a."""
    T = dom.cov_deriv(w, 1)
    return np.einsum("bc...,ac...,ad...,bd...->...", dom.ginv, T, dom.ginv, T)


def pressure_rhs(dom, state):
    """Source of the total-pressure equation for the current fields."""
    out = -gradient_contraction(dom, state.u)
    if state.mu != 0.0:
        out += state.mu * gradient_contraction(dom, state.beta)
    return out


def solve_pressure(dom, problem, solver=None, x0=None, tol=1e-11):
    """Solve Lap q = rhs with the interface Dirichlet trace.

    Returns (q, info).  Pass a prebuilt interface-Dirichlet ``solver`` to
    reuse its preconditioner across stages; ``x0`` warm-starts GMRES.
    """
    if solver is None:
        solver = LaplaceSolver(dom, bc_interface="dirichlet")
    return solver.solve(rhs=problem.rhs, interface_values=problem.dirichlet,
                        x0=x0, tol=tol)


def momentum_rhs(dom, state):
    """D_t u_a: quadratic transport terms minus the pressure gradient."""
    if state.q_plus is None:
        raise SequencingError("momentum right side needs a current pressure; "
                              "run solve_pressure first")
    Du = dom.cov_deriv(state.u, 1)
    out = np.einsum("cb...,b...,ac...->a...", dom.ginv, state.u, Du)
    if state.mu != 0.0:
        Db = dom.cov_deriv(state.beta, 1)
        out += state.mu * np.einsum("dc...,c...,da...->a...",
                                    dom.ginv, state.beta, Db)
    return out - dom.chart.partial(state.q_plus)


def induction_rhs(dom, state):
    """D_t beta_a: stretching along beta plus the gradient-coupling term."""
    Du = dom.cov_deriv(state.u, 1)
    bup = dom.raise_index(state.beta)
    return (np.einsum("d...,da...->a...", bup, Du)
            + np.einsum("c...,ac...->a...", bup, Du))


def taylor_sign(plasma_dom, vacuum_dom, q_plus, q_minus, atol=1e-11):
    """One-sided normal derivative of the pressure jump on the interface.

    Both charts place the interface on their first row with matching nodes;
    each side is differentiated on its own chart and contracted with its own
    outward-from-the-plasma metric-unit conormal, so the result is the
    Euclidean normal derivative of the jump.
    """
    rp = plasma_dom.chart.interface_row
    rv = vacuum_dom.chart.interface_row
    Np, _ = conormal_row(plasma_dom, rp, +1)
    Nv, _ = conormal_row(vacuum_dom, rv, +1)
    gp = np.einsum("a...,a...->...", Np, plasma_dom.chart.partial(q_plus)[:, rp])
    gm = np.einsum("a...,a...->...", Nv, vacuum_dom.chart.partial(q_minus)[:, rv])
    grad_N = gp - gm
    degenerate = float(np.max(np.abs(grad_N))) <= atol
    margin = 0.0 if degenerate else float(-np.max(grad_N))
    return TaylorReport(grad_N, margin, margin <= 0.0, degenerate)


def project_divergence_free(dom, w, solver=None, x0=None, tol=1e-11):
    """Remove the gradient part of w_a while keeping its normal traces.

    Solves Lap phi = div w with homogeneous Neumann data and subtracts
    grad phi.  Returns (projected field, phi, sup |grad phi|_g); phi is the
    natural warm start for the next projection.
    """
    if solver is None:
        kw = {"bc_wall": "neumann"} if hasattr(dom.chart, "wall_row") else {}
        solver = LaplaceSolver(dom, bc_interface="neumann", **kw)
    phi, _ = solver.solve(rhs=dom.divergence(w), x0=x0, tol=tol)
    dphi = dom.chart.partial(phi)
    mag = float(np.sqrt(np.max(dom.norm2(dphi, 1))))
    return w - dphi, phi, mag


def constraint_defects(dom, state):
    """Sup norms of the divergence constraints and the interface beta trace."""
    row = dom.chart.interface_row
    N, _ = conormal_row(dom, row, +1)
    bn = np.einsum("a...,a...->...", N, state.beta[:, row])
    return {
        "div_u": float(np.max(np.abs(dom.divergence(state.u)))),
        "div_beta": float(np.max(np.abs(dom.divergence(state.beta)))),
        "beta_normal": float(np.max(np.abs(bn))),
    }


def cfl_number(dom, state, dt):
    """Fast-signal CFL number: sup (|u|_g + sqrt(mu) |beta|_g) dt / h.

    h is the smallest physical node spacing.  The Alfven contribution
    matters: a magnetized equilibrium with u = 0 still carries wave speeds
    ~ sqrt(mu) |beta|, and explicit RK4 amplifies roundoff once they
    outrun the grid (measured on the constant-current column: growth sets
    in right around CFL 1/2).
    """
    speed = np.sqrt(dom.norm2(state.u, 1))
    if state.mu != 0.0:
        speed = speed + np.sqrt(state.mu * dom.norm2(state.beta, 1))
    dxs = np.linalg.norm(np.diff(dom.x, axis=1), axis=0)
    dxp = np.linalg.norm(dom.x - np.roll(dom.x, 1, axis=-1), axis=0)
    return float(np.max(speed)) * dt / min(dxs.min(), dxp.min())


def step_plasma(dom, state, dt, q_minus=0.0, solver=None, cleaner=None,
                clean=True, tol=1e-11):
    """One RK4 step of (u, beta) at a frozen flow map.

    ``q_minus`` is the interface trace of the vacuum total pressure, held
    fixed across the stages.  Each stage solves the pressure problem (warm
    started from the previous stage); after the update both fields are
    projected back to the divergence-free constraint and the pressure is
    re-solved so the returned state is self-consistent.  Emits a
    StabilityWarning when the advective CFL number exceeds 1/2.
    """
    if solver is None:
        solver = LaplaceSolver(dom, bc_interface="dirichlet")
    if clean and cleaner is None:
        cleaner = LaplaceSolver(dom, bc_interface="neumann")
    cfl = cfl_number(dom, state, dt)
    if cfl > 0.5:
        warnings.warn(f"fast-signal CFL number {cfl:.3f} exceeds 0.5; "
                      "reduce dt or refine the grid", StabilityWarning,
                      stacklevel=2)

    warm = None if state.q_plus is None else drop_nyquist(state.q_plus).ravel()
    iters = 0

    def rates(u, beta):
        nonlocal warm, iters
        st = PlasmaState(u, beta, state.mu)
        problem = PressureProblem(pressure_rhs(dom, st), q_minus)
        st.q_plus, info = solve_pressure(dom, problem, solver, x0=warm, tol=tol)
        warm = drop_nyquist(st.q_plus).ravel()
        iters += info["iterations"]
        return momentum_rhs(dom, st), induction_rhs(dom, st)

    ku1, kb1 = rates(state.u, state.beta)
    ku2, kb2 = rates(state.u + 0.5 * dt * ku1, state.beta + 0.5 * dt * kb1)
    ku3, kb3 = rates(state.u + 0.5 * dt * ku2, state.beta + 0.5 * dt * kb2)
    ku4, kb4 = rates(state.u + dt * ku3, state.beta + dt * kb3)
    u = state.u + (dt / 6.0) * (ku1 + 2.0 * ku2 + 2.0 * ku3 + ku4)
    beta = state.beta + (dt / 6.0) * (kb1 + 2.0 * kb2 + 2.0 * kb3 + kb4)

    mag_u = mag_b = 0.0
    if clean:
        u, _, mag_u = project_divergence_free(dom, u, cleaner, tol=tol)
        beta, _, mag_b = project_divergence_free(dom, beta, cleaner, tol=tol)
    new = PlasmaState(u, beta, state.mu)
    problem = PressureProblem(pressure_rhs(dom, new), q_minus)
    new.q_plus, info = solve_pressure(dom, problem, solver, x0=warm, tol=tol)
    iters += info["iterations"]
    info = {"cfl": cfl, "pressure_iterations": iters,
            "cleaned_u": mag_u, "cleaned_beta": mag_b}
    return new, info
