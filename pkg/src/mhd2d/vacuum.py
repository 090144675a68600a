"""Vacuum-region fields on the annulus between the interface and the wall.

The vacuum magnetic field is curl-free, divergence-free, and tangential to
both boundaries.  On an annulus that space is one-dimensional: every such
field is the perp gradient of a stream potential that is harmonic and
constant on each boundary component, so a single scalar -- the circulation
around the hole -- coordinates it.  ``solve_harmonic_field`` constructs the
generator by one Dirichlet solve and scales it to the requested circulation.

The interface motion drives the field through the electric potential: with
the plasma velocity extended to the annulus, Xi solves a Dirichlet problem
whose boundary datum on the interface is u_N (w1 N2 - w2 N1) in Eulerian
components and zero on the wall.  The tangential-derivative datum the
evolution also supplies is *not* imposed; it is recomputed and reported as
the oblique-consistency diagnostic.  The field then evolves by

    D_t w_a = -perp-grad_a Xi + u^b grad_b w_a + w^c grad_a u_c ,

whose transport part is the pullback of (v . grad)H_i + H_j d_i v_j through
the moving labels.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .elliptic import LaplaceSolver, conormal_row
from .errors import ConsistencyError, GeometryError, SequencingError


@dataclass
class VacuumState:
    """Covariant vacuum field with its harmonic-space bookkeeping."""

    w: np.ndarray               # (2, n_s, n_phi) covariant magnetic field
    circulation: float          # loop integral around the hole
    psi: np.ndarray | None = None  # stream potential when w is harmonic
    Xi: np.ndarray | None = None   # electric potential from the latest solve
    mu: float = 1.0

    def magnetic_pressure(self, dom):
        """mu |w|^2 / 2 on the grid; its first row is the interface trace."""
        return 0.5 * self.mu * dom.norm2(self.w, 1)

    def copy(self):
        return VacuumState(self.w.copy(), self.circulation,
                           None if self.psi is None else self.psi.copy(),
                           None if self.Xi is None else self.Xi.copy(),
                           self.mu)


def row_tangent(dom, row):
    """Label and physical phi-tangent along a constant-s row.

    Returns (dy/dphi, dx/dphi, |dx/dphi|); the first is the chart coordinate
    basis vector, the second its pushforward along the current map.
    """
    A = dom.chart.A[:, :, row, :]
    det = A[0, 0] * A[1, 1] - A[0, 1] * A[1, 0]
    e_phi = np.stack([-A[0, 1], A[0, 0]]) / det
    dx = np.einsum("ia...,a...->i...", dom.row(dom.J, row), e_phi)
    return e_phi, dx, np.linalg.norm(dx, axis=0)


def circulation(dom, w, row=None):
    """Loop integral of the covariant field along a constant-s row.

    The physical line integral of the Eulerian field over the mapped loop
    equals the label-space integral of w_a dy^a, so no pushforward is
    needed.  The default loop sits one row inside the wall.
    """
    n_s = dom.chart.n_s
    if row is None:
        row = n_s - 2
    if not -n_s <= row < n_s:
        raise GeometryError(f"loop row {row} is outside the vacuum region")
    e_phi, _, _ = row_tangent(dom, row)
    integrand = np.einsum("a...,a...->...", w[:, row], e_phi)
    return float(integrand.sum() * (2.0 * np.pi / dom.chart.n_phi))


def vacuum_defects(dom, w):
    """Sup norms of the constraint residuals of a vacuum field."""
    rows = (dom.chart.interface_row, dom.chart.n_s - 1)
    signs = (+1, +1)
    traces = {}
    for name, row, sign in zip(("normal_interface", "normal_wall"), rows, signs):
        N, _ = conormal_row(dom, row, sign)
        traces[name] = float(np.abs(
            np.einsum("a...,a...->...", N, w[:, row])).max())
    return {
        "div": float(np.abs(dom.divergence(w)).max()),
        "curl": float(np.abs(dom.curl(w)).max()),
        **traces,
    }


def solve_harmonic_field(dom, target_circulation, solver=None, x0=None,
                         tol=1e-11):
    """Divergence- and curl-free field with no flux and given circulation.

    One Dirichlet Laplace solve for the generator potential (0 on the
    interface, 1 on the wall), scaled by linearity to the requested
    circulation.  Returns (VacuumState, info); info["generator"] is the
    unscaled potential, the natural warm start (``x0``) for the next solve
    on a nearby geometry.
    """
    if solver is None:
        solver = LaplaceSolver(dom, bc_interface="dirichlet", bc_wall="dirichlet")
    psi1, info = solver.solve(interface_values=0.0, wall_values=1.0, x0=x0,
                              tol=tol)
    w1 = dom.perp_grad(psi1)
    unit = circulation(dom, w1)
    if abs(unit) < 1e-13:
        raise GeometryError("degenerate annulus: the generator field carries "
                            "no circulation")
    scale = target_circulation / unit
    state = VacuumState(scale * w1, float(target_circulation), psi=scale * psi1)
    info = dict(info)
    info["generator"] = psi1
    return state, info


def interface_data(dom, u, w):
    """Boundary data (f1, f2) of the electric-potential problem.

    f1 is the Dirichlet trace u_N (w1 N2 - w2 N1); f2 is the tangential
    datum grad_a u_d N^d w^a - N^d u^a grad_a w_d the evolution
    overdetermines, kept for the consistency diagnostic.  Both use Eulerian
    components via pushforward, with N the Euclidean outward unit normal.
    """
    row = dom.chart.interface_row
    N_up, _ = conormal_row(dom, row, +1)
    n_euc = np.einsum("ia...,a...->i...", dom.row(dom.J, row), N_up)
    u_N = np.einsum("a...,a...->...", N_up, u[:, row])
    H = dom.pushforward_covector(w)[:, row]
    f1 = u_N * (H[0] * n_euc[1] - H[1] * n_euc[0])
    Du = dom.cov_deriv(u, 1)[:, :, row]
    Dw = dom.cov_deriv(w, 1)[:, :, row]
    w_up = dom.raise_index(w)[:, row]
    u_up = dom.raise_index(u)[:, row]
    f2 = (np.einsum("ad...,d...,a...->...", Du, N_up, w_up)
          - np.einsum("ad...,a...,d...->...", Dw, u_up, N_up))
    return f1, f2


def solve_electric_field(dom, u, w, solver=None, x0=None, tol=1e-11):
    """Harmonic electric potential driven by the interface motion.

    Dirichlet data: f1 on the interface, zero on the wall.  The report
    carries the oblique diagnostic: the derivative of Xi along (N2, -N1)
    should reproduce f2 for dynamically consistent (u, w), and its residual
    is a measurable consistency error, not an imposed condition.
    """
    if solver is None:
        solver = LaplaceSolver(dom, bc_interface="dirichlet", bc_wall="dirichlet")
    f1, f2 = interface_data(dom, u, w)
    Xi, info = solver.solve(interface_values=f1, wall_values=0.0, x0=x0, tol=tol)
    row = dom.chart.interface_row
    N_up, _ = conormal_row(dom, row, +1)
    n_euc = np.einsum("ia...,a...->i...", dom.row(dom.J, row), N_up)
    dXi = dom.eulerian_grad(Xi)[:, row]
    oblique = n_euc[1] * dXi[0] - n_euc[0] * dXi[1]
    res = oblique - f2
    _, _, speed = row_tangent(dom, row)
    arc = speed * (2.0 * np.pi / dom.chart.n_phi)
    report = {
        "f1": f1,
        "f2": f2,
        "oblique": oblique,
        "oblique_residual_sup": float(np.abs(res).max()),
        "oblique_residual_l2": float(np.sqrt((res**2 * arc).sum())),
        "iterations": info["iterations"],
        "residual": info["residual"],
    }
    return Xi, report


def vacuum_rate(dom, w, Xi, u):
    """Right side of the vacuum induction law in covariant components."""
    out = -dom.perp_grad(Xi)
    Dw = dom.cov_deriv(w, 1)
    Du = dom.cov_deriv(u, 1)
    out += np.einsum("b...,ba...->a...", dom.raise_index(u), Dw)
    out += np.einsum("c...,ac...->a...", dom.raise_index(w), Du)
    return out


def evolve_vacuum(dom, state, u, dt, solver=None, project=False, tol=1e-11,
                  blow_up=1e-2):
    """RK4 step of the vacuum field at a frozen map.

    Each stage re-solves the electric potential for the stage field (warm
    started).  With ``project`` the result is replaced by the harmonic field
    carrying the evolved circulation and the correction size is recorded;
    otherwise the constraint drift stays observable in the reported
    defects.  Raises ConsistencyError when the defects outgrow ``blow_up``
    relative to the field size.
    """
    if solver is None:
        solver = LaplaceSolver(dom, bc_interface="dirichlet", bc_wall="dirichlet")
    warm = None if state.Xi is None else state.Xi.ravel()
    Xi1 = None

    def rate(w):
        nonlocal warm, Xi1
        Xi, _ = solve_electric_field(dom, u, w, solver, x0=warm, tol=tol)
        warm = Xi.ravel()
        if Xi1 is None:
            Xi1 = Xi
        return vacuum_rate(dom, w, Xi, u)

    k1 = rate(state.w)
    k2 = rate(state.w + 0.5 * dt * k1)
    k3 = rate(state.w + 0.5 * dt * k2)
    k4 = rate(state.w + dt * k3)
    w = state.w + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)

    circ = circulation(dom, w)
    defects = vacuum_defects(dom, w)
    correction = 0.0
    psi = None
    if project:
        harmonic, _ = solve_harmonic_field(dom, circ, tol=tol)
        correction = float(np.sqrt(np.max(dom.norm2(w - harmonic.w, 1))))
        w, psi = harmonic.w, harmonic.psi
    else:
        scale = 1.0 + float(np.sqrt(np.max(dom.norm2(w, 1))))
        if max(defects["div"], defects["curl"]) > blow_up * scale:
            raise ConsistencyError(
                f"vacuum constraints left tolerance after the step: {defects}")
    new = VacuumState(w, circ, psi=psi, Xi=Xi1, mu=state.mu)
    report = {"defects": defects, "projection_correction": correction,
              "circulation": circ}
    return new, report


def perp_electric_transport_residual(dom, W_prev, W_next, u, dt):
    """Interior-band residual of the transport law the perp gradient of Xi
    obeys between consecutive solves.

    ``W_prev`` and ``W_next`` are covariant perp gradients of Xi from two
    consecutive solves on the same reference grid; ``dom`` supplies the
    geometry the right side is evaluated with (midpoint geometry gives the
    centered order).  The band excludes the outer thirds of the radial rows
    so one-sided boundary differentiation does not pollute the measure.
    """
    if W_prev is None or W_next is None:
        raise SequencingError("need two consecutive electric-field solves")
    W_mid = 0.5 * (W_prev + W_next)
    DW = dom.cov_deriv(W_mid, 1)
    Du = dom.cov_deriv(u, 1)
    rhs = (np.einsum("b...,ba...->a...", dom.raise_index(u), DW)
           + np.einsum("c...,ac...->a...", dom.raise_index(W_mid), Du))
    res = (W_next - W_prev) / dt - rhs
    n_s = dom.chart.n_s
    band = slice(n_s // 3, max(n_s // 3 + 1, (2 * n_s) // 3))
    return float(np.abs(res[:, band]).max())


def regularity_report(dom, w, K):
    """Measured constants of the vacuum regularity and trace estimates.

    ratios[r] = |grad^{r+1} w| / (K |grad^r w|) in L2 of the metric measure
    for r = 0, 1, 2; trace_constant = |w|_L2(boundary) / (|grad w| + |w|);
    boundary_sup = sup of |w|_g over both boundary rows.  The estimates
    assert these stay bounded under refinement; the report just measures.
    """
    norms = []
    T, rank = w, 1
    for _ in range(4):
        norms.append(float(np.sqrt(dom.quad(dom.norm2(T, rank)))))
        T = dom.cov_deriv(T, rank)
        rank += 1
    ratios = [norms[r + 1] / (K * norms[r]) if norms[r] > 0 else 0.0
              for r in range(3)]

    mag = dom.norm2(w, 1)
    b_l2 = 0.0
    b_sup = 0.0
    for row in (dom.chart.interface_row, dom.chart.n_s - 1):
        _, _, speed = row_tangent(dom, row)
        arc = speed * (2.0 * np.pi / dom.chart.n_phi)
        b_l2 += float((mag[row] * arc).sum())
        b_sup = max(b_sup, float(np.sqrt(mag[row].max())))
    b_l2 = np.sqrt(b_l2)
    trace_constant = b_l2 / (norms[1] + norms[0]) if norms[0] > 0 else 0.0
    return {"ratios": ratios, "norms": norms[:4],
            "trace_constant": float(trace_constant), "boundary_sup": b_sup}
