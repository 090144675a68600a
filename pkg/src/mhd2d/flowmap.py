"""Flow-map kinematics: chart transport and the vacuum velocity extension.

The extension builds an Eulerian stream function on the deformed vacuum
region,

    Psi = zeta_W * [ eta_G(d) * Psi_near + (1 - eta_G(d)) * Psi_mid ],

    Psi_near(x) = psi_G(xbar) - d(x) * (v.T)(xbar),
    Psi_mid     = harmonic, Psi_mid|_Gamma = psi_G, Psi_mid|_wall = 0,

where psi_G is the tangential antiderivative of the interface normal flux
v.n and xbar, d are nearest-point data on the interface.  The extended
velocity v_hat = (d2 Psi, -d1 Psi) is divergence free by construction, its
trace on the interface is v (the near field matches both the value and the
normal derivative of the true stream function), and it vanishes near the
wall because zeta_W does.

The banded blend is the textbook construction and is kept as mode="blend"
(with analytic erf ramps in the radial chart coordinate and an analytic
chain rule, so the returned samples are pointwise values of an exactly
divergence-free field).  Its drawback is structural: the ramps imprint
transition features into the vacuum map that spectral grids resolve slowly.
The default mode="clamped" instead solves one clamped biharmonic problem for
Psi with (value, normal slope) data on both boundaries -- the same trace and
wall conditions with no ramps at all -- which keeps every subsequent vacuum
solve spectrally clean.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .charts import fourier_eval
from .curves import compute_geometry, erf_ramp
from .elliptic import BiharmonicSolver, LaplaceSolver


def advance_map(x0, velocity, t0, t1, steps):
    """RK4-transport label points x0 (2, ...) along dx/dt = velocity(t, x)."""
    x = np.array(x0, dtype=float)
    dt = (t1 - t0) / steps
    t = t0
    for _ in range(steps):
        k1 = velocity(t, x)
        k2 = velocity(t + dt / 2, x + dt / 2 * k1)
        k3 = velocity(t + dt / 2, x + dt / 2 * k2)
        k4 = velocity(t + dt, x + dt * k3)
        x += dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        t += dt
    return x


def material_derivative(snapshots, dt):
    """Second-order centered D_t of label-fixed snapshots F(t_k).

    ``snapshots`` is a sequence (time-major) of equal-shape arrays; returns
    the derivative at the interior times, i.e. len(snapshots) - 2 arrays.
    At fixed labels the material derivative is a plain time derivative.
    """
    F = np.asarray(snapshots, dtype=float)
    if F.shape[0] < 3:
        raise ValueError("need at least three snapshots")
    return (F[2:] - F[:-2]) / (2.0 * dt)


@dataclass
class ExtensionReport:
    flux_defect: float       # net interface flux removed before integrating
    solver_iterations: int
    psi: np.ndarray          # stream function on the vacuum grid
    sup_ratio: float         # max |v_hat| over max |v_gamma|
    warm: np.ndarray         # warm-start data for the next extension call


def tangential_antiderivative(flux_density, params):
    """Zero-mean periodic antiderivative d psi/d alpha = flux_density.

    Returns (psi_nodes, mean_removed); the mean of flux_density must be
    removed for psi to be single-valued, and the caller records it.
    """
    f = np.asarray(flux_density, dtype=float)
    n = f.size
    fh = np.fft.rfft(f)
    mean = fh[0].real / n
    k = np.arange(fh.size)
    fh[0] = 0.0
    fh[1:] = fh[1:] / (1j * k[1:])
    if n % 2 == 0:
        fh[-1] = 0.0
    psi = np.fft.irfft(fh, n=n)
    return psi, mean * 2.0 * np.pi


def _ramp_pair(s, mid, width):
    """erf ramp values and d/ds, both analytic."""
    val = erf_ramp(s, mid, width)
    der = -np.exp(-(((s - mid) / width) ** 2)) / (width * np.sqrt(np.pi))
    return val, der


def extend_velocity_to_vacuum(vac_dom, gamma_curve, v_gamma, wall_curve=None,
                              mode="clamped", solver=None, warm=None):
    """Divergence-free extension of the interface velocity into the vacuum.

    Parameters
    ----------
    vac_dom : Domain on the annulus chart, carrying the current vacuum map.
    gamma_curve : ClosedCurve of the current physical interface.
    v_gamma : (2, n_phi) Eulerian velocity samples at the interface nodes.
    wall_curve : fixed wall ClosedCurve (unused by the solves; the wall data
        is homogeneous by construction).
    mode : "clamped" (biharmonic, default) or "blend" (banded near/mid).
    solver : optional prebuilt solver matching the mode.
    warm : optional warm start, the ``warm`` field of the previous report.

    Returns (v_hat, ExtensionReport) with v_hat (2, n_s, n_phi) Eulerian.
    """
    geom = compute_geometry(gamma_curve, check=False)
    tan = geom.tangent.T
    nrm = geom.normal.T
    vn = v_gamma[0] * nrm[0] + v_gamma[1] * nrm[1]
    vt = v_gamma[0] * tan[0] + v_gamma[1] * tan[1]

    psi_gamma, defect = tangential_antiderivative(vn * geom.speed,
                                                  gamma_curve.params)
    chart = vac_dom.chart

    if mode == "clamped":
        if solver is None:
            solver = BiharmonicSolver(vac_dom)
        # dPsi/dn = -v.T on Gamma; the row conormal points into the plasma
        psi, info = solver.solve(psi_gamma, vt, x0=warm)
        warm_out = info["state"]
        grad = vac_dom.eulerian_grad(psi)
        v_hat = np.stack([grad[1], -grad[0]])
    elif mode == "blend":
        pts = vac_dom.x.reshape(2, -1).T
        d, alpha, _ = gamma_curve.nearest(pts)
        psi_near = (fourier_eval(psi_gamma, alpha) - d * fourier_eval(vt, alpha))
        psi_near = psi_near.reshape(chart.shape)
        if solver is None:
            solver = LaplaceSolver(vac_dom, bc_wall="dirichlet")
        psi_mid, info = solver.solve(None, interface_values=psi_gamma,
                                     wall_values=0.0, x0=warm)
        warm_out = psi_mid
        s = chart.s[:, None]
        eta, deta = _ramp_pair(s, 0.40, 0.08)    # 1 through the interface rows
        zeta, dzeta = _ramp_pair(s, 0.78, 0.044)  # 0 through the wall rows
        grad_s = np.einsum("a...,ai...->i...", chart.A[0], vac_dom.Jinv)
        g_near = vac_dom.eulerian_grad(psi_near)
        g_mid = vac_dom.eulerian_grad(psi_mid)
        P = eta * psi_near + (1.0 - eta) * psi_mid
        gP = eta * g_near + (1.0 - eta) * g_mid \
            + deta * grad_s * (psi_near - psi_mid)
        grad = zeta * gP + dzeta * grad_s * P
        psi = zeta * P
        v_hat = np.stack([grad[1], -grad[0]])
    else:
        raise ValueError(f"unknown extension mode {mode!r}")

    v_hat[:, chart.wall_row] = 0.0  # the wall never moves
    vmax = float(np.max(np.hypot(v_gamma[0], v_gamma[1])))
    sup = float(np.max(np.hypot(v_hat[0], v_hat[1])))
    return v_hat, ExtensionReport(flux_defect=float(defect),
                                  solver_iterations=info["iterations"],
                                  psi=psi,
                                  sup_ratio=sup / vmax if vmax > 0 else 0.0,
                                  warm=warm_out)
