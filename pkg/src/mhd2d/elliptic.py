"""Laplace-Beltrami boundary value solvers on the spectral charts.

The discrete operator is applied matrix-free in divergence form,

    L f = (1/sqrt g) d_a ( sqrt(g) g^{ab} d_b f ),

with boundary collocation rows replaced by the boundary condition (value for
Dirichlet, outward metric-unit conormal derivative for Neumann).  GMRES is
preconditioned per angular Fourier mode: the same discrete operator is
instantiated on a concentric circular surrogate of the chart, where modes
decouple, and its per-mode blocks are recovered exactly by probing the
matvec with cos/sin fields and LU-factorized (see ``_probe_mode_blocks``).
Probing the real matvec -- rather than assembling a textbook radial stencil
-- reproduces every discretization quirk (chained first derivatives, folded
disk parities, Nyquist conventions, aliasing at the top mode), so on round
geometry the preconditioner inverts the operator to roundoff, which is what
makes preconditioning the *squared* biharmonic operator viable.
All-Neumann problems carry a rank-one mean shift so the system is
nonsingular; for compatible data the shift term vanishes at the solution and
the returned field has zero metric mean.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import lu_factor, lu_solve
from scipy.sparse.linalg import LinearOperator, gmres

from .charts import AnnulusChart, DiskChart, drop_nyquist
from .errors import EllipticError

_BC_KINDS = ("dirichlet", "neumann")


def _circular_surrogate(domain):
    """Concentric-circle Domain with the resolution and mean radii of ``domain``."""
    from .tensors import Domain

    chart = domain.chart
    n_phi = chart.n_phi
    a = 2.0 * np.pi * np.arange(n_phi) / n_phi
    ring = np.stack([np.cos(a), np.sin(a)], axis=1)
    r0 = np.hypot(*chart.y[:, chart.interface_row]).mean()
    if hasattr(chart, "wall_row"):
        r1 = np.hypot(*chart.y[:, chart.wall_row]).mean()
        sc = AnnulusChart(r0 * ring, r1 * ring, chart.n_s)
    else:
        sc = DiskChart(r0 * ring, chart.n_s)
    sdom = Domain(sc)
    sdom.set_map(sc.y.copy())
    return sdom


def _probe_mode_blocks(apply_fn, chart, ncomp=1):
    """LU factorizations of the per-Fourier-mode blocks of a mode-diagonal
    operator, recovered by probing its matvec.

    On a concentric circular chart the discrete operator maps the span of
    {cos(m phi), sin(m phi)} radial profiles to itself, so applying the
    matvec to one cos probe and one sin probe per radial node and state
    component -- each probe carrying every sub-Nyquist mode at once --
    yields all the real mode blocks from 2 * ncomp * n_s applications.  The
    blocks are real-linear, not complex-linear: aliasing couples the top
    sub-Nyquist mode to its conjugate, which is exactly what probing
    captures and hand-assembled stencils miss.  The Nyquist mode is
    projected out everywhere, so its entry stays None.
    """
    n_s, n_phi = chart.shape
    n_m = n_phi // 2 + 1
    ms = np.arange(1, n_phi // 2)
    cos_probe = 1.0 + np.cos(np.outer(chart.phi, ms)).sum(axis=1)
    sin_probe = np.sin(np.outer(chart.phi, ms)).sum(axis=1)
    nloc = ncomp * n_s
    resp = np.empty((2, nloc, nloc, n_m), dtype=complex)
    X = np.zeros((ncomp, n_s, n_phi))
    for c in range(ncomp):
        for j in range(n_s):
            for k, probe in enumerate((cos_probe, sin_probe)):
                X[:] = 0.0
                X[c, j] = probe
                out = apply_fn(X.ravel()).reshape(nloc, n_phi)
                resp[k, :, c * n_s + j] = np.fft.rfft(out, axis=-1)
    scale = 2.0 / n_phi
    lus = [lu_factor(resp[0, :, :, 0].real / n_phi)]
    for m in range(1, n_phi // 2):
        B = np.empty((2 * nloc, 2 * nloc))
        B[:nloc, :nloc] = scale * resp[0, :, :, m].real
        B[nloc:, :nloc] = -scale * resp[0, :, :, m].imag
        B[:nloc, nloc:] = scale * resp[1, :, :, m].real
        B[nloc:, nloc:] = -scale * resp[1, :, :, m].imag
        lus.append(lu_factor(B))
    lus.append(None)  # Nyquist: projected out
    return lus


def _apply_mode_blocks(lus, chart, v, ncomp=1):
    """Solve the per-mode block systems against a flat residual vector."""
    n_s, n_phi = chart.shape
    nloc = ncomp * n_s
    Vh = np.fft.rfft(v.reshape(nloc, n_phi), axis=-1)
    out = np.zeros_like(Vh)
    out[:, 0] = lu_solve(lus[0], Vh[:, 0].real)
    for m in range(1, n_phi // 2):
        sol = lu_solve(lus[m], np.concatenate([Vh[:, m].real, -Vh[:, m].imag]))
        out[:, m] = sol[:nloc] - 1j * sol[nloc:]
    return np.fft.irfft(out, n=n_phi, axis=-1).ravel()


def _preconditioned_gmres(apply_fn, precond_fn, b, x0, tol, restart, max_rounds):
    """Restarted GMRES that stops on the preconditioned relative residual.

    SciPy's gmres tests convergence on the unpreconditioned residual, whose
    attainable floor scales with the operator norm -- enormous for spectral
    second-order collocation -- so tight tolerances burn the whole restart
    budget long after the solution error has saturated.  With the per-mode
    block preconditioner M^-1 A is near identity, so the preconditioned
    residual tracks the solution error directly; rounds stop as soon as it
    reaches ``tol`` or stops improving.

    Returns (x, pr, iterations): the best iterate seen, its preconditioned
    relative residual, and the inner iteration count.
    """
    n = b.size
    mb = np.linalg.norm(precond_fn(b))
    if mb == 0.0:
        return np.zeros_like(b), 0.0, 0
    x = np.zeros(n) if x0 is None else np.asarray(x0, dtype=float).ravel().copy()
    pr = np.linalg.norm(precond_fn(b - apply_fn(x))) / mb
    if pr <= tol:
        return x, pr, 0
    op = LinearOperator((n, n), matvec=apply_fn)
    M = LinearOperator((n, n), matvec=precond_fn)
    iters = 0

    def count(_):
        nonlocal iters
        iters += 1

    best_x, best_pr = x, pr
    for _ in range(max_rounds):
        prev = pr
        x, _ = gmres(op, b, x0=x, rtol=1e-14, atol=0.0, restart=restart,
                     maxiter=1, M=M, callback=count, callback_type="pr_norm")
        pr = np.linalg.norm(precond_fn(b - apply_fn(x))) / mb
        if pr < best_pr:
            best_x, best_pr = x, pr
        if pr <= tol or pr > 0.5 * prev:  # converged, or plateaued
            break
    return best_x, best_pr, iters


def conormal_row(domain, row, outward_sign):
    """Metric-unit conormal N^a (contravariant) on a constant-s boundary row.

    The boundary is a level set of s, so the conormal covector is parallel to
    ds; ``outward_sign`` orients it out of the domain (+1 when s increases
    outward).  Also returns the covariant components.
    """
    A = domain.chart.A[:, :, row, :]  # A[k, a] = d(s,phi)^k / dy^a
    ginv = domain.row(domain.ginv, row)
    omega = A[0]  # (2, n_phi) covariant ds direction
    norm = np.sqrt(np.einsum("ab...,a...,b...->...", ginv, omega, omega))
    N_lo = outward_sign * omega / norm
    N_up = np.einsum("ab...,b...->a...", ginv, N_lo)
    return N_up, N_lo


def _laplace_apply(dom, rows, conormals, sigma, mean_w, vol, v):
    """Divergence-form Laplace-Beltrami matvec with BC rows and mean shift."""
    chart = dom.chart
    F = v.reshape(chart.shape)
    dF = chart.partial(F)
    flux = np.einsum("ab...,b...->a...", dom.ginv, dF) * dom.sqrtg
    out = (chart.partial(flux[0])[0] + chart.partial(flux[1])[1]) / dom.sqrtg
    if sigma:
        shift = sigma * float((mean_w * F).sum()) / vol
    for row, kind, sign in rows:
        if kind == "dirichlet":
            out[row] = F[row]
        else:
            out[row] = np.einsum("a...,a...->...", conormals[row], dF[:, row])
    if sigma:
        mask = np.ones(chart.n_s, dtype=bool)
        for row, _, _ in rows:
            mask[row] = False
        out[mask] += shift
    return drop_nyquist(out).ravel()


def _biharmonic_apply(dom, n_interface, n_wall, v):
    """Coupled matvec for the clamped biharmonic problem.

    Unknowns (psi, w) with interior rows Lap psi - w = 0 and Lap w = 0; the
    psi-block boundary rows carry the psi values and the w-block boundary
    rows carry the psi conormal slopes.  Equivalent to Lap^2 psi = 0 with
    clamped data, but the matvec never applies a fourth-order operator, so
    the attainable residual stays at single-Laplacian conditioning instead
    of its square.
    """
    chart = dom.chart
    n_s = chart.n_s
    P, W = v.reshape(2, *chart.shape)
    dP = chart.partial(P)
    outP = dom.laplace_beltrami(P) - W
    outW = dom.laplace_beltrami(W)
    outP[0] = P[0]
    outP[n_s - 1] = P[n_s - 1]
    outW[0] = np.einsum("a...,a...->...", n_interface, dP[:, 0])
    outW[n_s - 1] = np.einsum("a...,a...->...", n_wall, dP[:, n_s - 1])
    return np.concatenate([drop_nyquist(outP).ravel(), drop_nyquist(outW).ravel()])


class LaplaceSolver:
    """Scalar elliptic solver bound to one Domain and one BC layout.

    Call ``refresh`` after ``domain.set_map``: conormals and quadrature are
    recomputed from the new map, while the per-mode preconditioner -- which
    depends only on the surrogate's mean radii -- is kept unless asked for,
    trading a few extra GMRES iterations for skipping the probe pass.
    """

    def __init__(self, domain, bc_interface="dirichlet", bc_wall=None, mean_shift=None):
        chart = domain.chart
        self.domain = domain
        self.has_wall = hasattr(chart, "wall_row")
        if bc_interface not in _BC_KINDS:
            raise ValueError(f"unknown interface bc {bc_interface!r}")
        if self.has_wall:
            if bc_wall not in _BC_KINDS:
                raise ValueError("annulus problems need bc_wall")
        elif bc_wall is not None:
            raise ValueError("disk problems have no wall boundary")
        self.bc_interface = bc_interface
        self.bc_wall = bc_wall
        all_neumann = bc_interface == "neumann" and bc_wall != "dirichlet"
        self.sigma = (1.0 if all_neumann else 0.0) if mean_shift is None else mean_shift

        self._rows = [(chart.interface_row, bc_interface, +1 if not self.has_wall else -1)]
        if self.has_wall:
            self._rows.append((chart.wall_row % chart.n_s, bc_wall, +1))
        self._conormals = {
            row: conormal_row(domain, row, sign)[0]
            for row, kind, sign in self._rows
            if kind == "neumann"
        }
        self._mean_w = domain.sqrtg * chart.quad_weights
        self._vol = float(self._mean_w.sum())
        self._build_preconditioner()

    def refresh(self, rebuild=False):
        """Rebind geometry-dependent data after the domain's map changed."""
        self._conormals = {
            row: conormal_row(self.domain, row, sign)[0]
            for row, kind, sign in self._rows
            if kind == "neumann"
        }
        self._mean_w = self.domain.sqrtg * self.domain.chart.quad_weights
        self._vol = float(self._mean_w.sum())
        if rebuild:
            self._build_preconditioner()

    # -- concentric per-mode preconditioner ---------------------------------

    def _build_preconditioner(self):
        sdom = _circular_surrogate(self.domain)
        conormals = {
            row: conormal_row(sdom, row, sign)[0]
            for row, kind, sign in self._rows
            if kind == "neumann"
        }
        mean_w = sdom.sqrtg * sdom.chart.quad_weights
        vol = float(mean_w.sum())
        self._lus = _probe_mode_blocks(
            lambda v: _laplace_apply(sdom, self._rows, conormals, self.sigma,
                                     mean_w, vol, v),
            sdom.chart,
        )

    def _apply_precond(self, v):
        return _apply_mode_blocks(self._lus, self.domain.chart, v)

    # -- matrix-free operator ------------------------------------------------

    def _apply(self, v):
        return _laplace_apply(self.domain, self._rows, self._conormals,
                              self.sigma, self._mean_w, self._vol, v)

    def solve(self, rhs=None, interface_values=0.0, wall_values=0.0, x0=None,
              tol=1e-10, restart=40, max_rounds=6):
        """Solve L f = rhs with the configured boundary data.

        Returns (field, info); info carries the preconditioned relative
        residual (the solution-error proxy) and the iteration count.  Raises
        EllipticError only when the residual is far beyond tolerance.
        """
        chart = self.domain.chart
        b = np.zeros(chart.shape) if rhs is None else np.array(rhs, dtype=float)
        b[chart.interface_row] = interface_values
        if self.has_wall:
            b[chart.wall_row] = wall_values
        bflat = drop_nyquist(b).ravel()
        x, pr, iters = _preconditioned_gmres(self._apply, self._apply_precond,
                                             bflat, x0, tol, restart, max_rounds)
        if not np.isfinite(pr) or pr > 1e3 * tol:
            raise EllipticError(
                f"gmres failed (rel_precond_residual={pr:.3e}, iters={iters})"
            )
        return x.reshape(chart.shape), {"iterations": iters, "residual": float(pr)}


class BiharmonicSolver:
    """Clamped biharmonic solve on the annulus: Lap_g^2 Psi = 0 with value and
    conormal-derivative data on both boundaries.

    Solved as the coupled second-order system (see ``_biharmonic_apply``).
    Used for the vacuum velocity extension, where (Psi, dPsi/dn) encode the
    full velocity vector on the interface and zero velocity on the wall.
    """

    def __init__(self, domain):
        chart = domain.chart
        if not hasattr(chart, "wall_row"):
            raise ValueError("biharmonic solver is annulus-only")
        self.domain = domain
        self.n_interface, _ = conormal_row(domain, 0, -1)   # points into the plasma
        self.n_wall, _ = conormal_row(domain, chart.n_s - 1, +1)
        self._build_preconditioner()

    def refresh(self, rebuild=False):
        """Rebind geometry-dependent data after the domain's map changed."""
        self.n_interface, _ = conormal_row(self.domain, 0, -1)
        self.n_wall, _ = conormal_row(self.domain, self.domain.chart.n_s - 1, +1)
        if rebuild:
            self._build_preconditioner()

    def _build_preconditioner(self):
        sdom = _circular_surrogate(self.domain)
        n_int = conormal_row(sdom, 0, -1)[0]
        n_wall = conormal_row(sdom, sdom.chart.n_s - 1, +1)[0]
        self._lus = _probe_mode_blocks(
            lambda v: _biharmonic_apply(sdom, n_int, n_wall, v), sdom.chart,
            ncomp=2,
        )

    def _apply_precond(self, v):
        return _apply_mode_blocks(self._lus, self.domain.chart, v, ncomp=2)

    def _apply(self, v):
        return _biharmonic_apply(self.domain, self.n_interface, self.n_wall, v)

    def solve(self, interface_value, interface_slope, wall_value=0.0,
              wall_slope=0.0, x0=None, tol=1e-10, restart=40, max_rounds=6):
        """Solve with Psi|_G, dPsi/dN_in|_G, Psi|_W, dPsi/dN_out|_W data.

        Returns (psi, info); info["state"] is the full (psi, w) solution
        vector, the natural warm start for the next solve.
        """
        chart = self.domain.chart
        b = np.zeros((2,) + chart.shape)
        b[0, 0] = interface_value
        b[0, -1] = wall_value
        b[1, 0] = interface_slope
        b[1, -1] = wall_slope
        b[0] = drop_nyquist(b[0])
        b[1] = drop_nyquist(b[1])
        bflat = b.ravel()
        x, pr, iters = _preconditioned_gmres(self._apply, self._apply_precond,
                                             bflat, x0, tol, restart, max_rounds)
        if not np.isfinite(pr) or pr > 1e3 * tol:
            raise EllipticError(
                f"biharmonic gmres failed (rel_precond_residual={pr:.3e}, "
                f"iters={iters})"
            )
        psi = x[: chart.n_s * chart.n_phi].reshape(chart.shape)
        return psi, {"iterations": iters, "residual": float(pr), "state": x}
