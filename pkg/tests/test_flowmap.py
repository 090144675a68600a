"""Kinematics: map transport, material differencing, velocity extension."""

import numpy as np
import pytest

from mhd2d.charts import AnnulusChart, DiskChart
from mhd2d.curves import ClosedCurve
from mhd2d.flowmap import (
    advance_map,
    extend_velocity_to_vacuum,
    material_derivative,
    tangential_antiderivative,
)
from mhd2d.tensors import Domain


def circle_nodes(radius, n):
    phi = 2 * np.pi * np.arange(n) / n
    return radius * np.stack([np.cos(phi), np.sin(phi)], axis=1)


def test_advance_map_rigid_rotation():
    chart = DiskChart(circle_nodes(1.0, 32), n_s=8)
    omega = 1.3

    def vel(t, x):
        return omega * np.stack([-x[1], x[0]])

    half = advance_map(chart.y, vel, 0.0, np.pi / omega, steps=200)
    np.testing.assert_allclose(half, -chart.y, atol=1e-8)
    dom = Domain(chart, half)
    np.testing.assert_allclose(dom.detJ, 1.0, atol=1e-8)


def test_advance_map_long_run_det_drift():
    chart = DiskChart(circle_nodes(1.0, 64), n_s=16)

    def vel(t, x):  # steady incompressible cellular flow
        return np.stack([np.sin(x[0]) * np.cos(x[1]), -np.cos(x[0]) * np.sin(x[1])])

    x = advance_map(chart.y, vel, 0.0, 1.0, steps=1000)
    dom = Domain(chart, x)
    assert np.max(np.abs(dom.detJ - 1.0)) < 1e-8


def test_material_derivative_order():
    ts = np.linspace(0, 1, 41)
    snaps = [np.sin(t) * np.ones((3, 3)) for t in ts]
    dt = ts[1] - ts[0]
    D = material_derivative(snaps, dt)
    exact = np.cos(ts[1:-1])[:, None, None] * np.ones((1, 3, 3))
    assert np.max(np.abs(D - exact)) < dt**2


def test_tangential_antiderivative():
    n = 64
    al = 2 * np.pi * np.arange(n) / n
    psi, defect = tangential_antiderivative(np.cos(al), al)
    np.testing.assert_allclose(psi, np.sin(al), atol=1e-12)
    assert defect == pytest.approx(0.0, abs=1e-12)
    _, defect = tangential_antiderivative(1.0 + np.cos(al), al)
    assert defect == pytest.approx(2 * np.pi)


N_S, N_PHI = 36, 96


@pytest.fixture(scope="module")
def vac():
    chart = AnnulusChart(circle_nodes(1.0, N_PHI), circle_nodes(2.0, N_PHI), n_s=N_S)
    dom = Domain(chart)
    gamma = ClosedCurve(dom.x[:, chart.interface_row].T)
    wall = ClosedCurve(circle_nodes(2.0, N_PHI), is_fixed=True)
    return dom, gamma, wall


@pytest.fixture(scope="module")
def translation(vac):
    dom, gamma, wall = vac
    V = 0.4
    v_gamma = np.stack([V * np.ones(N_PHI), np.zeros(N_PHI)])
    v_hat, rep = extend_velocity_to_vacuum(dom, gamma, v_gamma, wall)
    return dom, gamma, v_gamma, v_hat, rep


def test_zero_data_extends_to_zero(vac):
    dom, gamma, wall = vac
    v_hat, rep = extend_velocity_to_vacuum(dom, gamma, np.zeros((2, N_PHI)), wall)
    assert np.max(np.abs(v_hat)) == 0.0
    assert rep.sup_ratio == 0.0


def test_rotation_extends_azimuthally(vac):
    dom, gamma, wall = vac
    al = gamma.params
    v_gamma = np.stack([-np.sin(al), np.cos(al)])  # unit rigid rotation at r=1
    v_hat, rep = extend_velocity_to_vacuum(dom, gamma, v_gamma, wall)
    x1, x2 = dom.x
    radial = (v_hat[0] * x1 + v_hat[1] * x2) / np.hypot(x1, x2)
    np.testing.assert_allclose(radial, 0.0, atol=1e-12)
    np.testing.assert_allclose(v_hat[:, 0], v_gamma, atol=1e-12)


def test_exact_interface_trace(translation):
    _, _, v_gamma, v_hat, _ = translation
    np.testing.assert_allclose(v_hat[:, 0], v_gamma, atol=1e-10)


def test_translation_normal_trace_is_cosine(translation):
    dom, gamma, v_gamma, v_hat, _ = translation
    al = gamma.params
    normal_trace = v_hat[0, 0] * np.cos(al) + v_hat[1, 0] * np.sin(al)
    np.testing.assert_allclose(normal_trace, 0.4 * np.cos(al), atol=1e-10)


def test_wall_velocity_zero(translation):
    _, _, _, v_hat, _ = translation
    np.testing.assert_allclose(v_hat[:, -1], 0.0, atol=1e-14)
    # value and slope both vanish at the wall, so the adjacent row is small
    # (linear in its wall distance through the stream function curvature)
    assert np.max(np.hypot(v_hat[0, -2], v_hat[1, -2])) < 1e-2


def test_divergence_free(translation):
    dom, _, _, v_hat, _ = translation
    u = dom.pullback_covector(v_hat)
    div = dom.divergence(u)
    assert np.max(np.abs(div)) < 1e-10


def test_near_interface_band_tracks_boundary_values(translation):
    dom, gamma, v_gamma, v_hat, _ = translation
    pts = dom.x.reshape(2, -1).T
    d, _, _ = gamma.nearest(pts)
    err = np.hypot(v_hat[0] - v_gamma[0, 0], v_hat[1]).ravel()
    band = d < 0.125  # an eighth of the vacuum gap
    assert np.all(err[band] <= 20.0 * d[band] + 1e-9)


def test_sup_bound(translation):
    _, _, _, _, rep = translation
    assert rep.sup_ratio <= 2.0


def test_no_flux_defect_for_translation(translation):
    _, _, _, _, rep = translation
    assert abs(rep.flux_defect) < 1e-12


def test_warm_start_skips_iterations(translation):
    dom, gamma, v_gamma, _, rep = translation
    wall = ClosedCurve(circle_nodes(2.0, N_PHI), is_fixed=True)
    _, rep2 = extend_velocity_to_vacuum(dom, gamma, v_gamma, wall, warm=rep.warm)
    assert rep2.solver_iterations == 0


def test_blend_mode_trades_divergence_for_locality(vac):
    dom, gamma, wall = vac
    v_gamma = np.stack([np.ones(N_PHI), np.zeros(N_PHI)])
    v_hat, rep = extend_velocity_to_vacuum(dom, gamma, v_gamma, wall, mode="blend")
    np.testing.assert_allclose(v_hat[:, 0], v_gamma, atol=1e-10)
    np.testing.assert_allclose(v_hat[:, -1], 0.0, atol=1e-14)
    # the wall-side ramp plateau really is identically zero, not just small
    assert np.max(np.abs(v_hat[:, -2])) < 1e-10
    # and that locality costs divergence: the ramps are barely resolved, so
    # the discrete divergence is orders worse than the clamped default
    u = dom.pullback_covector(v_hat)
    assert np.max(np.abs(dom.divergence(u))) < 5e-2


def test_unknown_mode_raises(vac):
    dom, gamma, wall = vac
    with pytest.raises(ValueError):
        extend_velocity_to_vacuum(dom, gamma, np.zeros((2, N_PHI)), wall,
                                  mode="sideways")
