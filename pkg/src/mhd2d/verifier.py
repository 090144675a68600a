"""Residual checks for the exact identities the solver relies on.

Each check evaluates both sides of one identity on synthetic or live data
and reports a residual.  Identity checks (divergence theorem, metric-rate,
material-derivative commutators, boundary kinematics, boundary projection
formulas, the pressure equation) must converge under refinement; estimate
checks (div-curl control, elliptic and trace constants, smoothing ratios)
report a fitted constant whose growth under mesh doubling must stay
bounded, because the underlying inequalities carry unspecified constants.

``run_suite`` drives a deterministic battery over a ladder of resolutions
(spatial, or time-step for the time-differenced identities), fits
convergence orders by Richardson ratios, and aggregates pass/fail without
short-circuiting.  Checks run concurrently and merge deterministically.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .charts import AnnulusChart, DiskChart, fourier_diff
from .curves import ClosedCurve, compute_geometry, cutoff_cometric
from .elliptic import conormal_row
from .energy import covariant_power, to_euclidean
from .errors import GeometryError, SequencingError
from .plasma import (PlasmaState, PressureProblem, gradient_contraction,
                     pressure_rhs, solve_pressure)
from .tensors import Domain
from .vacuum import regularity_report, row_tangent, solve_harmonic_field

FLOOR = 1e-11          # below this a residual is indistinguishable from noise
_GROWTH_CAP = 2.0      # fitted constants may at most double per refinement


@dataclass
class ResidualReport:
    """One identity or estimate evaluated at one resolution."""

    check_name: str
    norm_used: str                  # "Linf" or "L2"
    residual: float
    resolution: object              # (n_s, n_phi) or a time step
    convergence_order: float | None = None
    tolerance: float | None = None
    passed: bool | None = None
    note: str = ""

    def __post_init__(self):
        if not (self.residual >= 0.0 or np.isnan(self.residual)):
            raise ValueError("residuals are magnitudes")

    def as_dict(self):
        res = self.resolution
        if isinstance(res, tuple):
            res = list(res)
        return {"check_name": self.check_name, "norm_used": self.norm_used,
                "residual": self.residual, "resolution": res,
                "convergence_order": self.convergence_order,
                "tolerance": self.tolerance, "passed": self.passed,
                "note": self.note}


def time_derivative(values, dt):
    """Centered time derivative from an odd uniform stencil of snapshots.

    Three levels give the second-order difference, five the fourth-order
    one; anything else is insufficient (or ambiguous) history.
    """
    n = len(values)
    if n == 3:
        return (values[2] - values[0]) / (2.0 * dt)
    if n == 5:
        return (values[0] - 8.0 * values[1] + 8.0 * values[3]
                - values[4]) / (12.0 * dt)
    raise SequencingError("time-differenced checks need 3 or 5 uniformly "
                          f"spaced snapshots, got {n}")


def _metric_intact(dom):
    g = dom.g
    scale = np.abs(g).max()
    sym = np.abs(g - np.swapaxes(g, 0, 1)).max()
    return bool(np.isfinite(scale) and sym <= 1e-10 * max(scale, 1.0)
                and (dom.detg > 0).all())


def _violation(name, resolution):
    return ResidualReport(name, "Linf", np.inf, resolution, passed=False,
                          note="metric-invariant-violation")


def _shape(dom):
    return dom.chart.shape


# ---------------------------------------------------------------------------
# identity checks
# ---------------------------------------------------------------------------

def check_gauss(dom, w, name="gauss"):
    """Divergence theorem: volume integral of div w against boundary flux.

    The flux convention is outward from the domain; the annulus chart has
    two boundary components, with the interface flux entering negatively
    (its outward direction points toward the plasma).
    """
    if not _metric_intact(dom):
        return _violation(name, _shape(dom))
    chart = dom.chart
    vol = dom.quad(dom.divergence(w))
    if isinstance(chart, AnnulusChart):
        sides = [(0, -1), (chart.n_s - 1, +1)]
    else:
        sides = [(chart.interface_row, +1)]
    flux = 0.0
    for row, sign in sides:
        N_up, _ = conormal_row(dom, row, sign)
        _, _, speed = row_tangent(dom, row)
        dens = np.einsum("a...,a...->...", N_up, w[:, row])
        flux += float((dens * speed).sum()) * 2.0 * np.pi / chart.n_phi
    return ResidualReport(name, "Linf", abs(vol - flux), _shape(dom))


def check_metric_rate(doms, u, dt, name="metric_rate"):
    """D_t g = 2 sym(grad u): the pulled-back metric moves with the flow."""
    center = doms[len(doms) // 2]
    if not _metric_intact(center):
        return _violation(name, _shape(center))
    rate = time_derivative([d.g for d in doms], dt)
    Du = center.cov_deriv(u, 1)
    both = Du + np.swapaxes(Du, 0, 1)
    return ResidualReport(name, "Linf", float(np.abs(rate - both).max()),
                          dt)


def commutator_defect(dom, u, q, r):
    """Closed form of [D_t, grad^r] q by the slot-insertion recursion.

    The material derivative of the pulled-back connection is the second
    covariant gradient of the velocity; commuting D_t through r covariant
    derivatives inserts that tensor once per derivative slot:

        [D_t, grad] T_{...a...} = - sum_slots (grad grad u)^c_{. a} T_{...c...}

    applied recursively from the scalar up.  Rank-0 commutes exactly.
    """
    H = dom.cov_deriv(dom.cov_deriv(u, 1), 2)            # (A, b, d)
    W = np.einsum("cd...,abd...->abc...", dom.ginv, H)   # grad_A grad_b u^c
    T = q
    C = None
    for k in range(r):
        parts = []
        if C is not None:
            parts.append(dom.cov_deriv(C, k))
        for j in range(k):
            Tj = np.moveaxis(T, j, 0)
            term = -np.einsum("abc...,c...->ab...", W, Tj)
            parts.append(np.moveaxis(term, 1, j + 1))
        C = sum(parts) if parts else np.zeros((2,) + q.shape)
        T = dom.cov_deriv(T, k)
    return C


def check_commutator(doms, u, qs, dt, r, name=None):
    """[D_t, grad^r] q against the slot-insertion closed form (r = 1: zero)."""
    name = name or f"commutator_r{r}"
    center = doms[len(doms) // 2]
    if not _metric_intact(center):
        return _violation(name, _shape(center))
    lhs = time_derivative([covariant_power(d, q, 0, r)
                           for d, q in zip(doms, qs)], dt)
    dq = time_derivative(list(qs), dt)
    rhs = covariant_power(center, dq, 0, r) \
        + commutator_defect(center, u, qs[len(qs) // 2], r)
    return ResidualReport(name, "Linf", float(np.abs(lhs - rhs).max()), dt)


def check_laplacian_commutator(doms, u, qs, dt, name="laplacian_commutator"):
    """[D_t, Laplacian] q = -2 h^{ab} grad^2_{ab} q - (Lap u^e) grad_e q."""
    center = doms[len(doms) // 2]
    if not _metric_intact(center):
        return _violation(name, _shape(center))
    q_c = qs[len(qs) // 2]
    lhs = time_derivative([d.laplace_beltrami(q)
                           for d, q in zip(doms, qs)], dt)
    lhs -= center.laplace_beltrami(time_derivative(list(qs), dt))
    Du = center.cov_deriv(u, 1)
    h = 0.5 * (Du + np.swapaxes(Du, 0, 1))
    h_up = np.einsum("ac...,bd...,cd...->ab...", center.ginv, center.ginv, h)
    hess = center.cov_deriv(center.chart.partial(q_c), 1)
    H = center.cov_deriv(center.cov_deriv(u, 1), 2)
    lap_u = np.einsum("ab...,ed...,abd...->e...", center.ginv, center.ginv, H)
    rhs = -2.0 * np.einsum("ab...,ab...->...", h_up, hess)
    rhs -= np.einsum("e...,e...->...", lap_u, center.chart.partial(q_c))
    return ResidualReport(name, "Linf", float(np.abs(lhs - rhs).max()), dt)


def check_boundary_evolution(doms, u, dt, name="boundary_evolution"):
    """Interface kinematics: D_t N_a = h_NN N_a and the arc-measure rate.

    Both identities are evaluated at the interface row by time differencing
    at fixed label; h is the symmetric covariant gradient of the velocity.
    """
    if len(doms) not in (3, 5):
        raise SequencingError("boundary evolution needs 3 or 5 time levels")
    center = doms[len(doms) // 2]
    if not _metric_intact(center):
        return _violation(name, _shape(center))
    row = center.chart.interface_row
    Du = center.cov_deriv(u, 1)
    h = 0.5 * (Du + np.swapaxes(Du, 0, 1))
    N_up, N_lo = conormal_row(center, row, +1)
    h_row = h[:, :, row]
    h_NN = np.einsum("a...,b...,ab...->...", N_up, N_up, h_row)
    lo_rate = time_derivative([conormal_row(d, row, +1)[1] for d in doms], dt)
    res_n = np.abs(lo_rate - h_NN * N_lo).max()

    tr_h = np.einsum("ab...,ab...->...", center.ginv[:, :, row], h_row)
    sp_rate = time_derivative([row_tangent(d, row)[2] for d in doms], dt)
    sp_c = row_tangent(center, row)[2]
    res_mu = np.abs(sp_rate - (tr_h - h_NN) * sp_c).max()
    return ResidualReport(name, "Linf", float(max(res_n, res_mu)), dt)


def check_projection_identities(dom, q, geom, order=2, name=None):
    """Tangential projections of boundary Hessians against intrinsic data.

    With the counterclockwise unit tangent T, outward normal n, and signed
    curvature kappa (so dT/ds = -kappa n along arclength s), the second and
    third full normal projections of interior derivatives reduce to

        T T : grad^2 q           = f'' + kappa q_n
        T T T : grad^3 q         = f''' + 3 kappa q_n' + kappa' q_n
                                   - 2 kappa^2 f'

    where f is the boundary restriction of q and q_n its normal derivative.
    Both follow by differentiating the restriction along the curve; the
    curvature terms are the second-fundamental-form contributions.
    """
    name = name or f"projection_order{order}"
    if order not in (2, 3):
        raise ValueError("projection identities implemented at orders 2, 3")
    if not _metric_intact(dom):
        return _violation(name, _shape(dom))
    row = dom.chart.interface_row
    T = geom.tangent.T                  # (2, n)
    n = geom.normal.T
    kappa = geom.kappa
    speed = geom.speed

    def dds(values):
        return fourier_diff(values, 1) / speed

    f = q[row]
    grad = to_euclidean(dom, dom.chart.partial(q), 1)[:, row]
    q_n = np.einsum("i...,i...->...", n, grad)
    if order == 2:
        hess = to_euclidean(dom, covariant_power(dom, q, 0, 2), 2)[:, :, row]
        lhs = np.einsum("i...,j...,ij...->...", T, T, hess)
        rhs = dds(dds(f)) + kappa * q_n
    else:
        third = to_euclidean(dom, covariant_power(dom, q, 0, 3), 3)[:, :, :, row]
        lhs = np.einsum("i...,j...,k...,ijk...->...", T, T, T, third)
        rhs = (dds(dds(dds(f))) + 3.0 * kappa * dds(q_n)
               + dds(kappa) * q_n - 2.0 * kappa**2 * dds(f))
    return ResidualReport(name, "Linf", float(np.abs(lhs - rhs).max()),
                          _shape(dom))


def check_pressure_identity(dom, state, name="pressure_identity"):
    """The pressure equation: Lap q = -grad u : grad u + mu grad b : grad b."""
    if not _metric_intact(dom):
        return _violation(name, _shape(dom))
    if state.q_plus is None:
        raise SequencingError("pressure identity needs a pressure field")
    res = dom.laplace_beltrami(state.q_plus) + gradient_contraction(dom, state.u)
    res -= state.mu * gradient_contraction(dom, state.beta)
    return ResidualReport(name, "Linf", float(np.abs(res).max()), _shape(dom))


# ---------------------------------------------------------------------------
# fitted-constant (estimate) checks
# ---------------------------------------------------------------------------

def check_divcurl_pointwise(dom, f, r, q_label, floor=None, name=None):
    """Pointwise div-curl control of the full gradient of w = grad^r f.

    The fitted constant is the grid maximum of |grad w|^2 over the sum of
    the tangentially-contracted gradient (cutoff cometric on the derivative
    slot), |div w|^2 and |curl w|^2, the trailing slot of w playing the
    vector role.  Nodes whose denominator sits below the floor are skipped.
    """
    name = name or f"divcurl_r{r}"
    if r not in (0, 1):
        raise ValueError("div-curl check implemented for r in {0, 1}")
    if not _metric_intact(dom):
        return _violation(name, _shape(dom))
    w = f if r == 0 else dom.cov_deriv(f, 1)
    rank = r + 1
    Dw = dom.cov_deriv(w, rank)
    num = dom.norm2(Dw, rank + 1)

    tang = q_inner_mixed(dom, Dw, q_label, rank + 1)
    pair = np.moveaxis(Dw, rank, 1)     # (deriv slot, vector slot, rest...)
    div = np.einsum("ba...,ba...->...", dom.ginv, pair)
    curl = (pair[0, 1] - pair[1, 0]) / dom.sqrtg
    den = tang + dom.norm2(div, r) + dom.norm2(curl, r)
    scale = float(num.max())
    lo = (floor if floor is not None else 1e-10) * max(scale, 1.0)
    mask = den > lo
    if not mask.any():
        return ResidualReport(name, "Linf", 0.0, _shape(dom), note="at_floor")
    c_fit = float((num[mask] / den[mask]).max())
    return ResidualReport(name, "Linf", c_fit, _shape(dom))


def q_inner_mixed(dom, T, q_label, rank):
    """Pointwise contraction using q on the first slot and g on the rest."""
    R = np.einsum("ab...,b...->a...", q_label, T)
    for slot in range(1, rank):
        R = np.moveaxis(np.einsum("ab...,b...->a...", dom.ginv,
                                  np.moveaxis(R, slot, 0)), 0, slot)
    idx = list(range(T.ndim))
    return np.einsum(T, idx, R, idx, idx[rank:])


def check_elliptic_constant(dom, state, problem, name="elliptic_constant"):
    """Ratio of a second-order norm of q to the data that produced it."""
    if not _metric_intact(dom):
        return _violation(name, _shape(dom))
    q = state.q_plus
    if q is None:
        raise SequencingError("elliptic constant needs a solved pressure")
    hess = covariant_power(dom, q, 0, 2)
    grad = dom.chart.partial(q)
    num = np.sqrt(dom.quad(dom.norm2(hess, 2) + dom.norm2(grad, 1) + q**2))
    rhs = problem.rhs
    bc = np.broadcast_to(np.asarray(problem.dirichlet, dtype=float),
                         (dom.chart.n_phi,))
    den = np.sqrt(dom.quad(rhs**2)) + float(np.abs(bc).max()) + 1e-30
    return ResidualReport(name, "L2", float(num / den), _shape(dom))


def check_trace_constant(dom, w, name="trace_constant"):
    """Boundary L2 trace of a field against its interior first-order norm."""
    if not _metric_intact(dom):
        return _violation(name, _shape(dom))
    rep = regularity_report(dom, w, 1.0)
    return ResidualReport(name, "L2", float(rep["trace_constant"]), _shape(dom))


def check_regularity_ratios(dom, w, K, name="regularity_ratios"):
    """Successive-derivative growth ratios of a harmonic vacuum field."""
    if not _metric_intact(dom):
        return _violation(name, _shape(dom))
    rep = regularity_report(dom, w, K)
    return ResidualReport(name, "L2", float(max(rep["ratios"])), _shape(dom))


# ---------------------------------------------------------------------------
# deterministic suite
# ---------------------------------------------------------------------------

IDENTITY_TOL = {
    "gauss": 1e-8,
    "metric_rate": 1e-6,
    "commutator_r1": 1e-6,
    "commutator_r2": 1e-6,
    "commutator_r3": 1e-6,
    "laplacian_commutator": 1e-6,
    "boundary_evolution": 1e-6,
    "projection_order2": 1e-6,
    "projection_order3": 1e-6,
    "pressure_identity": 1e-6,
}
CONSTANT_CHECKS = ("divcurl_r0", "divcurl_r1", "elliptic_constant",
                   "trace_constant", "regularity_ratios")
DEFAULT_CONFIG = {
    "seed": 0,
    "levels": [[8, 16], [16, 32], [32, 64]],
    "dt": 6e-2,
    "dt_halvings": 3,
    "checks": sorted(IDENTITY_TOL) + list(CONSTANT_CHECKS),
}


def _ring(radius, n, center=(0.0, 0.0)):
    a = np.linspace(0.0, 2.0 * np.pi, n, endpoint=False)
    return np.stack([center[0] + radius * np.cos(a),
                     center[1] + radius * np.sin(a)], axis=1)


def _band_limited(rng):
    """A fixed band-limited Eulerian vector field (continuum object)."""
    ks = [(1, 0), (0, 1), (2, 1), (1, 2), (3, 2)]
    coef = rng.standard_normal((2, len(ks), 2))

    def F(x):
        out = np.zeros((2,) + x.shape[1:])
        for i in range(2):
            for j, (k1, k2) in enumerate(ks):
                ph = k1 * x[0] + k2 * x[1]
                out[i] += coef[i, j, 0] * np.cos(ph) + coef[i, j, 1] * np.sin(ph)
        return out
    return F


def _shear_map(t, y):
    return np.stack([y[0] + 0.25 * np.sin(t) * y[1]**2,
                     y[1] + 0.20 * np.cos(0.7 * t) * y[0]**2])


def _shear_velocity(t, y):
    return np.stack([0.25 * np.cos(t) * y[1]**2,
                     -0.14 * np.sin(0.7 * t) * y[0]**2])


def _scalar_series(t, y):
    return np.sin(1.1 * t + 0.3) * (y[0]**3 - 2.0 * y[0] * y[1] + 0.5 * y[1]**2)


def _time_stencil(chart, t0, dt, half=2):
    y = chart.y
    shifts = range(-half, half + 1)
    doms = [Domain(chart, _shear_map(t0 + s * dt, y)) for s in shifts]
    qs = [_scalar_series(t0 + s * dt, y) for s in shifts]
    u = doms[half].pullback_covector(_shear_velocity(t0, y))
    return doms, u, qs


def _mms_pressure_state(chart):
    """Manufactured Eulerian triple satisfying the pressure equation.

    Single-shear velocity and magnetic fields have traceless squared
    gradients, so any harmonic scalar closes the identity exactly in the
    continuum; the discrete residual is pure interpolation error.
    """
    y = chart.y
    xmap = np.stack([y[0] + 0.07 * (y[0]**2 - y[1]**2),
                     y[1] + 0.14 * y[0] * y[1]])
    dom = Domain(chart, xmap)
    v = np.stack([np.sin(xmap[1]), np.zeros_like(xmap[0])])
    B = np.stack([np.zeros_like(xmap[0]), np.sin(xmap[0])])
    q = np.exp(xmap[0]) * np.cos(xmap[1])
    state = PlasmaState(u=dom.pullback_covector(v),
                        beta=dom.pullback_covector(B), mu=1.0, q_plus=q)
    return dom, state


def _suite_task(check, config):
    seed = int(config.get("seed", 0))
    levels = [tuple(lv) for lv in config["levels"]]
    dts = [config["dt"] / 2**k for k in range(int(config["dt_halvings"]))]
    reports = []

    if check == "gauss":
        F = _band_limited(np.random.default_rng(seed + 1))
        for ns, nphi in levels:
            disk = Domain(DiskChart(_ring(1.0, nphi), ns))
            ann = Domain(AnnulusChart(_ring(1.0, nphi), _ring(2.0, nphi), ns),
                         tag="vacuum")
            r1 = check_gauss(disk, disk.pullback_covector(F(disk.x)))
            r2 = check_gauss(ann, ann.pullback_covector(F(ann.x)))
            reports.append(ResidualReport(
                "gauss", "Linf", max(r1.residual, r2.residual), (ns, nphi)))
    elif check == "metric_rate":
        chart = DiskChart(_ring(1.0, 64), 16)
        for dt in dts:
            doms, u, _ = _time_stencil(chart, 0.6, dt)
            reports.append(check_metric_rate(doms, u, dt))
    elif check.startswith("commutator_r"):
        r = int(check[-1])
        chart = DiskChart(_ring(1.0, 64), 16)
        for dt in dts:
            doms, u, qs = _time_stencil(chart, 0.6, dt)
            reports.append(check_commutator(doms, u, qs, dt, r))
    elif check == "laplacian_commutator":
        chart = DiskChart(_ring(1.0, 64), 16)
        for dt in dts:
            doms, u, qs = _time_stencil(chart, 0.6, dt)
            reports.append(check_laplacian_commutator(doms, u, qs, dt))
    elif check == "boundary_evolution":
        chart = DiskChart(_ring(1.0, 64), 16)
        for dt in dts:
            doms, u, _ = _time_stencil(chart, 0.6, dt)
            reports.append(check_boundary_evolution(doms, u, dt))
    elif check in ("projection_order2", "projection_order3"):
        order = int(check[-1])
        for ns, nphi in levels:
            dom = Domain(DiskChart(_ring(1.0, nphi), ns))
            geom = compute_geometry(ClosedCurve(dom.x[:, 0].T))
            x = dom.x
            q = (1.0 - x[0]**2 - x[1]**2) * np.sin(2.0 * x[0] + x[1])
            reports.append(check_projection_identities(dom, q, geom, order))
    elif check == "pressure_identity":
        for ns, nphi in levels:
            dom, state = _mms_pressure_state(DiskChart(_ring(1.0, nphi), ns))
            reports.append(check_pressure_identity(dom, state))
    elif check.startswith("divcurl_r"):
        r = int(check[-1])
        F = _band_limited(np.random.default_rng(seed + 2))
        curve = ClosedCurve.circle(1.0, 64)
        geom = compute_geometry(curve)
        d0 = min(geom.iota0, geom.iota1)
        for ns, nphi in levels:
            dom = Domain(AnnulusChart(_ring(1.0, nphi), _ring(2.0, nphi), ns),
                         tag="vacuum")
            pts = dom.x.reshape(2, -1).T
            cc = cutoff_cometric(curve, pts, d0)
            q_euc = cc.q_upper.reshape(2, 2, *dom.chart.shape)
            q_label = np.einsum("ai...,bj...,ij...->ab...",
                                dom.Jinv, dom.Jinv, q_euc)
            f = dom.pullback_covector(F(dom.x))
            reports.append(check_divcurl_pointwise(dom, f, r, q_label))
    elif check == "elliptic_constant":
        for ns, nphi in levels:
            dom = Domain(DiskChart(_ring(1.0, nphi), ns))
            y1, y2 = dom.x
            st = PlasmaState(u=np.zeros((2, ns, nphi)),
                             beta=np.stack([-y2, y1]), mu=2.0)
            problem = PressureProblem(pressure_rhs(dom, st), 0.0)
            st.q_plus, _ = solve_pressure(dom, problem, tol=1e-12)
            reports.append(check_elliptic_constant(dom, st, problem))
    elif check == "trace_constant" or check == "regularity_ratios":
        for ns, nphi in levels:
            dom = Domain(AnnulusChart(_ring(1.0, nphi), _ring(2.0, nphi), ns),
                         tag="vacuum")
            vac, _ = solve_harmonic_field(dom, 2.0 * np.pi)
            if check == "trace_constant":
                reports.append(check_trace_constant(dom, vac.w))
            else:
                reports.append(check_regularity_ratios(dom, vac.w, 1.0))
    else:
        raise GeometryError(f"unknown check: {check}")
    return reports


def _finalize(check, reports):
    """Attach order, tolerance and pass/fail to a ladder of reports."""
    res = [r.residual for r in reports]
    if check in IDENTITY_TOL:
        tol = IDENTITY_TOL[check]
        order = None
        note = ""
        if len(res) >= 2:
            if max(res) <= 1e-2 * tol:
                note = "at_floor"        # order is meaningless down here
            elif res[-1] > res[0]:
                note = "non-monotone"
            else:
                span = len(res) - 1
                order = float(np.log(max(res[0], FLOOR) /
                                     max(res[-1], FLOOR)) / (span * np.log(2.0)))
        ok = res[-1] <= tol and (order is None or order >= 2.0) \
            and note != "non-monotone"
        last = reports[-1]
        last.convergence_order = order
        last.tolerance = tol
        last.note = last.note or note
        for r in reports:
            r.tolerance = tol
            r.passed = bool(ok)
    else:
        growth = [res[i + 1] / max(res[i], 1e-30) for i in range(len(res) - 1)]
        ok = all(g < _GROWTH_CAP for g in growth)
        for r in reports:
            r.passed = bool(ok)
        if growth:
            reports[-1].note = reports[-1].note or f"max_growth={max(growth):.3f}"
    return reports


def run_suite(config=None):
    """Run the configured checks concurrently; merge reports by name.

    Returns the full list of ResidualReport (one per check per level),
    deterministically ordered.  Failures are aggregated, never
    short-circuited; ``suite_passed`` folds them into a single flag.
    """
    cfg = dict(DEFAULT_CONFIG)
    if config:
        cfg.update(config)
    checks = list(cfg["checks"])
    for name in checks:
        if name not in IDENTITY_TOL and name not in CONSTANT_CHECKS:
            raise GeometryError(f"unknown check: {name}")
    with ThreadPoolExecutor(max_workers=min(8, max(1, len(checks)))) as pool:
        futures = {name: pool.submit(_suite_task, name, cfg) for name in checks}
        by_name = {name: fut.result() for name, fut in futures.items()}
    out = []
    for name in sorted(by_name):
        out.extend(_finalize(name, by_name[name]))
    return out


def suite_passed(reports):
    return bool(reports is not None and
                all(r.passed is not False for r in reports))


def format_table(reports):
    """Human-readable fixed-width table of suite results."""
    lines = [f"{'check':<24}{'resolution':<16}{'residual':>12}"
             f"{'order':>8}{'pass':>6}"]
    for r in reports:
        res = "x".join(str(v) for v in r.resolution) \
            if isinstance(r.resolution, tuple) else f"dt={r.resolution:g}"
        order = f"{r.convergence_order:.1f}" if r.convergence_order else "-"
        ok = {True: "ok", False: "FAIL", None: "-"}[r.passed]
        lines.append(f"{r.check_name:<24}{res:<16}{r.residual:>12.3e}"
                     f"{order:>8}{ok:>6}")
    return "\n".join(lines)


def reports_to_json(reports):
    return json.dumps([r.as_dict() for r in reports], indent=2)
