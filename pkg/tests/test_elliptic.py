"""Elliptic solves checked by the method of manufactured pullbacks.

Naturality of the Laplace-Beltrami operator makes every Euclidean solution
q_hat(x) an exact chart solution after composition with the test map, so the
solver can be verified on genuinely curved metrics without discretizing
anything by hand.
"""

import numpy as np
import pytest

from mhd2d.charts import AnnulusChart, DiskChart
from mhd2d.elliptic import LaplaceSolver, conormal_row
from mhd2d.errors import EllipticError
from mhd2d.tensors import Domain


def circle_nodes(radius, n):
    phi = 2 * np.pi * np.arange(n) / n
    return radius * np.stack([np.cos(phi), np.sin(phi)], axis=1)


def shear_map(y, t=0.25):
    y1, y2 = y
    x1 = y1 + t * np.sin(y2)
    return np.stack([x1, y2 + t * np.cos(x1)])


@pytest.fixture(scope="module")
def disk_dom():
    chart = DiskChart(circle_nodes(1.0, 48), n_s=16)
    return Domain(chart, shear_map(chart.y))


@pytest.fixture(scope="module")
def annulus_dom():
    chart = AnnulusChart(circle_nodes(1.0, 48), circle_nodes(2.0, 48), n_s=20)
    return Domain(chart, shear_map(chart.y))


def test_disk_dirichlet_identity_map():
    chart = DiskChart(circle_nodes(1.0, 32), n_s=12)
    dom = Domain(chart)
    x1, x2 = dom.x
    exact = x1**3 * x2
    rhs = 6 * x1 * x2
    sol, info = LaplaceSolver(dom).solve(rhs, interface_values=exact[0])
    np.testing.assert_allclose(sol, exact, atol=1e-10)
    assert info["residual"] < 1e-11


def test_disk_dirichlet_sheared_metric(disk_dom):
    x1, x2 = disk_dom.x
    exact = np.exp(x1) * np.sin(x2)  # harmonic in Euclidean coordinates
    sol, info = LaplaceSolver(disk_dom).solve(None, interface_values=exact[0])
    np.testing.assert_allclose(sol, exact, atol=2e-9)


def test_annulus_dirichlet_log_solution(annulus_dom):
    r = np.hypot(*annulus_dom.x)
    exact = np.log(r)
    sol, _ = LaplaceSolver(annulus_dom, bc_wall="dirichlet").solve(
        None, interface_values=exact[0], wall_values=exact[-1])
    np.testing.assert_allclose(sol, exact, atol=2e-9)


def test_annulus_dirichlet_multipole(annulus_dom):
    x1, x2 = annulus_dom.x
    r2 = x1**2 + x2**2
    exact = x1 * (1 + 1 / r2)  # (r + 1/r) cos(theta)
    sol, _ = LaplaceSolver(annulus_dom, bc_wall="dirichlet").solve(
        None, interface_values=exact[0], wall_values=exact[-1])
    np.testing.assert_allclose(sol, exact, atol=5e-9)


def test_disk_neumann_mean_zero(disk_dom):
    dom = disk_dom
    x1, x2 = dom.x
    exact = np.cos(x1) * np.sinh(x2)  # harmonic
    grad = np.stack([-np.sin(x1) * np.sinh(x2), np.cos(x1) * np.cosh(x2)])
    N_up, _ = conormal_row(dom, 0, +1)
    u_cov = dom.pullback_covector(grad)
    h = np.einsum("a...,a...->...", N_up, u_cov[:, 0])
    solver = LaplaceSolver(dom, bc_interface="neumann")
    sol, info = solver.solve(None, interface_values=h)
    w = dom.sqrtg * dom.chart.quad_weights
    mean = (w * exact).sum() / w.sum()
    np.testing.assert_allclose(sol, exact - mean, atol=5e-8)
    # returned solution is metrically mean-free
    assert abs((w * sol).sum() / w.sum()) < 1e-9


def test_conormal_is_unit(annulus_dom):
    for row, sign in [(0, -1), (annulus_dom.chart.n_s - 1, +1)]:
        N_up, N_lo = conormal_row(annulus_dom, row, sign)
        norm = np.einsum("a...,a...->...", N_up, N_lo)
        np.testing.assert_allclose(norm, 1.0, atol=1e-12)


def test_solver_raises_on_stall(disk_dom):
    x1, _ = disk_dom.x
    with pytest.raises(EllipticError):
        LaplaceSolver(disk_dom).solve(np.sin(3 * x1), max_rounds=1, tol=1e-30)


def test_warm_start_reduces_iterations(annulus_dom):
    solver = LaplaceSolver(annulus_dom, bc_wall="dirichlet")
    bc = np.cos(2 * annulus_dom.chart.phi)
    sol, cold = solver.solve(None, interface_values=bc)
    _, warm = solver.solve(None, interface_values=bc, x0=sol)
    assert warm["iterations"] == 0  # already below tolerance
    assert cold["iterations"] > warm["iterations"]
