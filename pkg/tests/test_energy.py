"""Energy functionals: physical energy, weighted higher-order energies,
bound witnesses, and the doubling-time monitor.

Closed-form oracles: a unit flow on the unit disk carries kinetic energy
pi/2; the circulation field H = (1/r) e_phi on the annulus 1 < r < 2
carries magnetic energy pi ln 2; the magnetic column beta = r e_phi with
q = mu (1 - r^2)/2 has constant-curvature boundary data that make every
weighted-energy term integrable by hand.  The order-1 interior integral
(the only term that sees the cutoff profile) is additionally pinned
against a dense independent Gauss-Legendre radial quadrature.
"""

import dataclasses

import numpy as np
import pytest
from numpy.polynomial.legendre import leggauss

from mhd2d import energy
from mhd2d.charts import AnnulusChart, DiskChart
from mhd2d.curves import ClosedCurve, compute_geometry, eta_plateau
from mhd2d.errors import SequencingError
from mhd2d.plasma import PlasmaState, taylor_sign
from mhd2d.tensors import Domain
from mhd2d.vacuum import solve_harmonic_field

N_S, N_PHI = 24, 64
MU = 2.0


def ring(radius, n, center=(0.0, 0.0)):
    a = np.linspace(0.0, 2.0 * np.pi, n, endpoint=False)
    return np.stack([center[0] + radius * np.cos(a),
                     center[1] + radius * np.sin(a)], axis=1)


@pytest.fixture(scope="module")
def disk():
    return Domain(DiskChart(ring(1.0, N_PHI), N_S))


@pytest.fixture(scope="module")
def annulus():
    return Domain(AnnulusChart(ring(1.0, N_PHI), ring(2.0, N_PHI), N_S),
                  tag="vacuum")


@pytest.fixture(scope="module")
def interface():
    curve = ClosedCurve.circle(1.0, N_PHI)
    geom = compute_geometry(curve)
    return curve, geom, min(geom.iota0, geom.iota1)


@pytest.fixture(scope="module")
def column(disk, annulus, interface):
    """Magnetic column with its exact pressure and interface sign data."""
    y1, y2 = disk.x
    beta = np.stack([-y2, y1])
    q = MU * (1.0 - (y1**2 + y2**2)) / 2.0
    state = PlasmaState(u=np.zeros_like(beta), beta=beta, mu=MU, q_plus=q)
    report = taylor_sign(disk, annulus, q, np.zeros(annulus.chart.shape))
    curve, _, d0 = interface
    ctx = energy.build_energy_context(disk, curve, report, d0)
    return state, report, ctx


def test_physical_energy_of_unit_flow(disk):
    u = np.zeros((2,) + disk.chart.shape)
    u[0] = 1.0
    state = PlasmaState(u=u, beta=np.zeros_like(u), mu=MU)
    assert abs(energy.e0(disk, state) - np.pi / 2.0) < 1e-12


def test_physical_energy_of_vacuum_circulation_field(disk, annulus):
    vac, _ = solve_harmonic_field(annulus, 2.0 * np.pi)
    rest = PlasmaState(u=np.zeros((2,) + disk.chart.shape),
                       beta=np.zeros((2,) + disk.chart.shape), mu=1.0)
    total = energy.e0(disk, rest, annulus, vac)
    assert abs(total - np.pi * np.log(2.0)) < 1e-11


def test_physical_energy_of_column_matches_quadrature(disk, column):
    state, _, _ = column
    # int 0.5 mu r^2 dA = pi mu / 4 over the unit disk.
    assert abs(energy.e0(disk, state) - np.pi * MU / 4.0) < 1e-10


def test_physical_energy_of_rest_state(disk):
    z = np.zeros((2,) + disk.chart.shape)
    assert energy.e0(disk, PlasmaState(u=z, beta=z, mu=MU)) == 0.0


@pytest.mark.parametrize("c", [0.5, 2.0, -3.0])
def test_physical_energy_is_quadratic(disk, c):
    rng = np.random.default_rng(11)
    u = rng.standard_normal((2,) + disk.chart.shape)
    b = rng.standard_normal((2,) + disk.chart.shape)
    base = energy.e0(disk, PlasmaState(u=u, beta=b, mu=MU))
    scaled = energy.e0(disk, PlasmaState(u=c * u, beta=c * b, mu=MU))
    assert abs(scaled - c**2 * base) < 1e-10 * abs(base)


def test_cometric_is_tangential_on_interface(column, disk):
    _, _, ctx = column
    phi = disk.chart.phi
    t = np.stack([-np.sin(phi), np.cos(phi)])
    projector = np.einsum("i...,j...->ij...", t, t)
    assert np.abs(ctx.q_interface - projector).max() < 1e-10


def test_cometric_is_dominated_by_metric(disk, column):
    _, _, ctx = column
    rng = np.random.default_rng(3)
    alpha = rng.standard_normal((2,) + disk.chart.shape)
    weighted = energy.q_inner(ctx.q_label, alpha, alpha, 1)
    full = disk.norm2(alpha, 1)
    assert (weighted <= full + 1e-12).all()
    interior = ctx.eta == 0.0
    assert interior.any()
    assert np.abs(weighted - full)[interior].max() < 1e-12


def test_cutoff_profile_has_both_plateaus(column, interface):
    _, _, ctx = column
    _, _, d0 = interface
    assert np.abs(ctx.eta[0] - 1.0).max() < 1e-12        # interface row
    deep = ctx.d > 0.55 * d0
    assert deep.any()
    assert np.abs(ctx.eta[deep]).max() < 1e-12


def test_weighted_energies_match_dense_quadrature(annulus, interface):
    """All three orders for the magnetic column against independent values.

    The order-1 interior integral is the only term that sees the cutoff
    profile; it is evaluated independently with a dense Gauss-Legendre
    radial rule (the integrand is rotation invariant).  The order-2 energy
    reduces to the boundary term 2 pi mu (constant Hessian, tangential
    projector contraction, weight 1/mu) and the order-3 energy vanishes
    (cubic derivatives of a quadratic pressure).
    """
    curve, _, d0 = interface
    lo_frac, hi_frac = 0.10, 0.90
    dom = Domain(DiskChart(ring(1.0, N_PHI), 64))
    y1, y2 = dom.x
    beta = np.stack([-y2, y1])
    q = MU * (1.0 - (y1**2 + y2**2)) / 2.0
    state = PlasmaState(u=np.zeros_like(beta), beta=beta, mu=MU, q_plus=q)
    report = taylor_sign(dom, annulus, q, np.zeros(annulus.chart.shape))
    ctx = energy.build_energy_context(dom, curve, report, d0, lo_frac, hi_frac)

    nodes, wts = leggauss(4000)
    r = 0.5 * (nodes + 1.0)
    w = 0.5 * wts
    eta2 = eta_plateau(1.0 - r, lo_frac * d0, hi_frac * d0) ** 2
    grad = np.array([[0.0, 1.0], [-1.0, 0.0]])   # Eulerian grad of r e_phi
    dens = np.array([
        np.einsum("ik,jl,ij,kl->", np.diag([1.0 - e, 1.0]),
                  np.diag([1.0 - e, 1.0]), grad, grad)
        for e in eta2])
    e1_expected = MU * 2.0 * np.pi * np.sum(dens * r * w) \
        + 4.0 * np.pi * MU                        # curl beta = 2, curl u = 0

    v1, _ = energy.e_r(dom, state, 1, ctx)
    v2, _ = energy.e_r(dom, state, 2, ctx)
    v3, _ = energy.e_r(dom, state, 3, ctx)
    assert abs(v1 - e1_expected) < 1e-8
    assert abs(v2 - 2.0 * np.pi * MU) < 1e-8
    assert abs(v3) < 1e-8


def test_second_order_boundary_term_closed_form(disk, column):
    state, _, ctx = column
    v2, flags = energy.e_r(disk, state, 2, ctx)
    assert flags == []
    assert abs(v2 - 2.0 * np.pi * MU) < 1e-10


def test_first_order_energy_ignores_boundary_data(disk, column):
    state, _, ctx = column
    v, flags = energy.e_r(disk, state, 1, ctx)
    loud = dataclasses.replace(ctx, theta=1e6 * np.ones(N_PHI))
    v_loud, _ = energy.e_r(disk, state, 1, loud)
    assert v_loud == v
    silent = dataclasses.replace(ctx, theta=None)
    v_none, flags_none = energy.e_r(disk, state, 1, silent)
    assert v_none == v
    assert flags == flags_none == []


def test_violated_sign_condition_omits_boundary_term(disk, column):
    state, _, ctx = column
    broken = dataclasses.replace(ctx, theta=None, taylor_margin=-1.0)
    v, flags = energy.e_r(disk, state, 2, broken)
    assert flags == ["taylor_violated"]
    full, _ = energy.e_r(disk, state, 2, ctx)
    assert v < full               # the boundary term is strictly positive
    assert abs(v) < 1e-10         # interior of the column vanishes at order 2


def test_constant_outer_pressure_leaves_jump_unchanged(disk, annulus, column):
    state, _, ctx = column
    lone, _ = energy.e_r(disk, state, 2, ctx)
    flat = np.full(annulus.chart.shape, 7.5)
    both, _ = energy.e_r(disk, state, 2, ctx, annulus, flat)
    assert abs(both - lone) < 1e-9


def test_higher_orders_require_pressure(disk, column):
    state, _, ctx = column
    bare = state.copy()
    bare.q_plus = None
    with pytest.raises(SequencingError):
        energy.e_r(disk, bare, 2, ctx)
    v1, _ = energy.e_r(disk, bare, 1, ctx)   # order 1 never needs it
    assert np.isfinite(v1)


def test_bound_witnesses_for_column(disk, column, interface):
    state, report, _ = column
    _, geom, _ = interface
    out = energy.track_bounds(disk, state, report, geom)
    assert abs(out["K_cal"] - 1.0) < 1e-10
    assert abs(out["E_cal"] - 1.0 / MU) < 1e-10
    assert abs(out["M"] - (MU + np.sqrt(2.0))) < 1e-9
    assert abs(out["L"] - MU * np.sqrt(2.0)) < 1e-9
    assert out["flags"] == ["partial_L"]
    # A stationary state has D_t P = 0: history removes the partial flag
    # without changing the value.
    full = energy.track_bounds(disk, state, report, geom,
                               q_plus_prev=state.q_plus, dt=1e-3)
    assert full["flags"] == []
    assert abs(full["L"] - out["L"]) < 1e-9


def test_bound_witnesses_flag_degenerate_gradient(disk, annulus, interface):
    _, geom, _ = interface
    z = np.zeros((2,) + disk.chart.shape)
    state = PlasmaState(u=z, beta=z, mu=MU, q_plus=np.zeros(disk.chart.shape))
    report = taylor_sign(disk, annulus, state.q_plus,
                         np.zeros(annulus.chart.shape))
    assert report.degenerate
    out = energy.track_bounds(disk, state, report, geom)
    assert out["E_cal"] == np.inf
    assert "degenerate_gradient" in out["flags"]


def _report(t, total, flags=()):
    return energy.EnergyReport(t=t, E=np.array([total, 0.0, 0.0, 0.0]),
                               K_cal=1.0, E_cal=1.0, M=0.0, L=0.0,
                               taylor_margin=1.0, vol_omega=np.pi,
                               flags=list(flags))


def test_monitor_steady_run_holds_to_horizon():
    reps = [_report(0.1 * k, 4.0) for k in range(6)]
    out = energy.theorem_monitor(reps, horizon=0.5)
    assert out["T_observed"] == pytest.approx(0.5)
    assert out["holds_to_horizon"] is True
    assert out["violated"] is False


def test_monitor_reports_doubling_time():
    reps = [_report(0.1 * k, 4.0 * np.exp(1.2 * 0.1 * k)) for k in range(10)]
    out = energy.theorem_monitor(reps, horizon=0.9)
    # exp(1.2 t) crosses 2 at t = ln 2 / 1.2 = 0.5776: last good sample 0.5
    assert out["T_observed"] == pytest.approx(0.5)
    assert out["holds_to_horizon"] is False


def test_monitor_flags_sign_violation():
    reps = [_report(0.0, 4.0), _report(0.1, 4.0, flags=["taylor_violated"])]
    out = energy.theorem_monitor(reps, horizon=0.1)
    assert out["violated"] is True
    assert out["T_observed"] is None


def test_monitor_needs_history():
    with pytest.raises(SequencingError):
        energy.theorem_monitor([_report(0.0, 4.0)], horizon=1.0)


def test_report_serialization_keys():
    rep = _report(0.25, 4.0)
    d = rep.as_dict()
    assert list(d)[:5] == ["t", "E0", "E1", "E2", "E3"]
    for key in ("Kcal", "Ecal", "M", "L", "taylor_margin", "vol_omega"):
        assert key in d
    assert d["E0"] == 4.0 and d["t"] == 0.25
