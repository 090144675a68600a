"""Spectral building blocks: differentiation, quadrature, and the two charts."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mhd2d.charts import (
    AnnulusChart,
    DiskChart,
    chebyshev_lobatto,
    clenshaw_curtis_weights,
    fourier_diff,
    fourier_eval,
)
from mhd2d.errors import GeometryError, ResolutionError


def circle_nodes(radius, n):
    phi = 2 * np.pi * np.arange(n) / n
    return radius * np.stack([np.cos(phi), np.sin(phi)], axis=1)


# ---------------------------------------------------------------- 1D pieces


@pytest.mark.parametrize("N", [8, 13, 20])
def test_chebyshev_derivative_exact_on_polynomials(N):
    t, D = chebyshev_lobatto(N)
    for k in range(N + 1):
        np.testing.assert_allclose(D @ t**k, k * t ** max(k - 1, 0) * (k > 0),
                                   atol=1e-10 * N**2)


def test_chebyshev_nodes_descending():
    t, _ = chebyshev_lobatto(9)
    assert t[0] == 1.0 and t[-1] == -1.0
    assert np.all(np.diff(t) < 0)


@pytest.mark.parametrize("N", [8, 9, 16, 33])
def test_clenshaw_curtis_exact_on_polynomials(N):
    t, _ = chebyshev_lobatto(N)
    w = clenshaw_curtis_weights(N)
    for k in range(N + 1):
        exact = (1 - (-1) ** (k + 1)) / (k + 1)  # int_{-1}^1 t^k dt
        np.testing.assert_allclose(w @ t**k, exact, atol=1e-13)


def test_fourier_diff_orders():
    n = 32
    phi = 2 * np.pi * np.arange(n) / n
    f = np.exp(np.sin(phi))
    df = np.cos(phi) * f
    d2f = (np.cos(phi) ** 2 - np.sin(phi)) * f
    np.testing.assert_allclose(fourier_diff(f), df, atol=1e-11)
    np.testing.assert_allclose(fourier_diff(f, order=2), d2f, atol=1e-9)


@given(st.integers(min_value=1, max_value=5), st.floats(-2, 2), st.floats(-2, 2))
@settings(max_examples=25, deadline=None)
def test_fourier_eval_reproduces_trig_polynomials(m, a, b):
    n = 16  # > 2*m_max, so every sampled mode is resolved
    phi = 2 * np.pi * np.arange(n) / n
    f = a * np.cos(m * phi) + b * np.sin(m * phi)
    alpha = np.array([0.1, 1.7, 3.9, 5.5])
    expected = a * np.cos(m * alpha) + b * np.sin(m * alpha)
    np.testing.assert_allclose(fourier_eval(f, alpha), expected, atol=1e-12)
    dexp = m * (-a * np.sin(m * alpha) + b * np.cos(m * alpha))
    np.testing.assert_allclose(fourier_eval(f, alpha, deriv=1), dexp, atol=1e-11)


def test_fourier_eval_at_nodes_is_identity():
    n = 24
    phi = 2 * np.pi * np.arange(n) / n
    f = np.exp(np.cos(phi)) + phi * 0
    np.testing.assert_allclose(fourier_eval(f, phi), f, atol=1e-12)


# ---------------------------------------------------------------- disk chart


def test_disk_chart_requires_symmetric_boundary():
    n = 32
    phi = 2 * np.pi * np.arange(n) / n
    wobbly = np.stack([(1 + 0.1 * np.cos(3 * phi)) * np.cos(phi),
                       (1 + 0.1 * np.cos(3 * phi)) * np.sin(phi)], axis=1)
    with pytest.raises(GeometryError):
        DiskChart(wobbly, n_s=8)
    # even harmonic perturbations keep c(phi+pi) = -c(phi)
    ok = np.stack([(1 + 0.1 * np.cos(2 * phi)) * np.cos(phi),
                   (1 + 0.1 * np.cos(2 * phi)) * np.sin(phi)], axis=1)
    DiskChart(ok, n_s=8)


def test_disk_chart_rejects_odd_angular_grid():
    phi = 2 * np.pi * np.arange(31) / 31
    nodes = np.stack([np.cos(phi), np.sin(phi)], axis=1)
    with pytest.raises(ResolutionError):
        DiskChart(nodes, n_s=8)


def test_disk_partial_derivatives_spectral():
    chart = DiskChart(circle_nodes(1.3, 64), n_s=20)
    y1, y2 = chart.y
    f = np.exp(0.7 * y1) * np.sin(0.9 * y2)
    df = chart.partial(f)
    np.testing.assert_allclose(df[0], 0.7 * f, atol=3e-9)
    np.testing.assert_allclose(df[1], np.exp(0.7 * y1) * 0.9 * np.cos(0.9 * y2),
                               atol=3e-9)


def test_disk_second_radial_derivative():
    chart = DiskChart(circle_nodes(1.0, 48), n_s=16)
    r2 = chart.y[0] ** 2 + chart.y[1] ** 2
    np.testing.assert_allclose(chart.d_ds2(r2), 2.0 * np.ones(chart.shape),
                               atol=1e-9)


def test_disk_quadrature_area_and_moment():
    R = 1.4
    chart = DiskChart(circle_nodes(R, 64), n_s=16)
    one = np.ones(chart.shape)
    np.testing.assert_allclose(chart.quad_flat(one), np.pi * R**2, rtol=1e-12)
    r2 = chart.y[0] ** 2 + chart.y[1] ** 2
    np.testing.assert_allclose(chart.quad_flat(r2), np.pi * R**4 / 2, rtol=1e-11)


def test_disk_radial_fold_matches_extension():
    # folded per-mode operators must act like the doubled-grid derivative
    chart = DiskChart(circle_nodes(1.0, 32), n_s=12)
    s = chart.s
    for m, prof in [(2, s**2 * (1 - s**2)), (3, s**3 - 0.5 * s)]:
        D1, D2 = chart.radial_fold(m)
        F = prof[:, None] * np.cos(m * chart.phi)[None, :]
        np.testing.assert_allclose(D1 @ prof, chart.d_ds(F)[:, 0], atol=1e-10)
        np.testing.assert_allclose(D2 @ prof, chart.d_ds2(F)[:, 0], atol=1e-9)


# -------------------------------------------------------------- annulus chart


@pytest.fixture
def annulus():
    return AnnulusChart(circle_nodes(1.0, 64), circle_nodes(2.0, 64), n_s=24)


def test_annulus_rows(annulus):
    np.testing.assert_allclose(np.hypot(*annulus.y[:, annulus.interface_row]), 1.0)
    np.testing.assert_allclose(np.hypot(*annulus.y[:, annulus.wall_row]), 2.0)


def test_annulus_partials_spectral(annulus):
    y1, y2 = annulus.y
    f = np.log(y1**2 + y2**2)
    df = annulus.partial(f)
    r2 = y1**2 + y2**2
    np.testing.assert_allclose(df[0], 2 * y1 / r2, atol=1e-9)
    np.testing.assert_allclose(df[1], 2 * y2 / r2, atol=1e-9)


def test_annulus_quadrature(annulus):
    np.testing.assert_allclose(annulus.quad_flat(np.ones(annulus.shape)),
                               3 * np.pi, rtol=1e-12)


def test_annulus_rejects_mismatched_grids():
    with pytest.raises(ResolutionError):
        AnnulusChart(circle_nodes(1.0, 32), circle_nodes(2.0, 64), n_s=8)


def test_annulus_rejects_wall_inside_interface():
    with pytest.raises(GeometryError):
        AnnulusChart(circle_nodes(2.0, 32), circle_nodes(1.0, 32), n_s=8)


# ---------------------------------------------------------------- smoothing


def test_disk_radial_smooth_passband_is_exact():
    chart = DiskChart(circle_nodes(1.0, 64), n_s=24)
    y1, y2 = chart.y
    for field in (-y2, 1.0 - y1**2 - y2**2, y1**3 - y1 * y2):
        np.testing.assert_allclose(chart.radial_smooth(field), field,
                                   atol=1e-13)
    vec = np.stack([y2 * y1, -(y1**2)])
    np.testing.assert_allclose(chart.radial_smooth(vec), vec, atol=1e-13)


def test_annulus_radial_smooth_passband_is_exact():
    chart = AnnulusChart(circle_nodes(1.0, 64), circle_nodes(2.0, 64), n_s=24)
    y1, y2 = chart.y
    for field in (y1, y1 * y2):
        np.testing.assert_allclose(chart.radial_smooth(field), field,
                                   atol=1e-13)


def test_radial_smooth_damps_grid_scale_noise():
    chart = AnnulusChart(circle_nodes(1.0, 64), circle_nodes(2.0, 64), n_s=24)
    top = np.cos(np.pi * np.arange(chart.n_s))     # highest Chebyshev mode
    noise = np.broadcast_to(top[:, None], chart.shape).copy()
    assert np.abs(chart.radial_smooth(noise)).max() < 1e-10
    smooth = np.broadcast_to(chart.s[:, None]**2, chart.shape).copy()
    mixed = smooth + 1e-3 * noise
    np.testing.assert_allclose(chart.radial_smooth(mixed), smooth, atol=1e-12)


def test_disk_radial_smooth_respects_center_symmetry():
    from mhd2d.charts import _filter_matrix

    chart = DiskChart(circle_nodes(1.0, 64), n_s=16)
    rng = np.random.default_rng(5)
    f = rng.standard_normal(chart.shape)
    # assemble the doubled-grid field, filter it whole, and confirm the
    # half-grid method returns its upper block while the lower block still
    # satisfies the center-crossing extension identity
    full = np.concatenate([f, chart._extend(f)], axis=0)
    filtered_full = _filter_matrix(2 * chart.n_s - 1, 0.25, 60.0) @ full
    g = chart.radial_smooth(f)
    np.testing.assert_allclose(g, filtered_full[:chart.n_s], atol=1e-12)
    np.testing.assert_allclose(chart._extend(g), filtered_full[chart.n_s:],
                               atol=1e-12)
