"""Closed-curve geometry: frames, curvature, reach, cutoffs, CSV round trips."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mhd2d.curves import (
    ClosedCurve,
    compute_geometry,
    curve_from_csv,
    curve_to_csv,
    cutoff_cometric,
    eta_plateau,
)
from mhd2d.errors import GeometryError


def ellipse(a, b, n):
    al = 2 * np.pi * np.arange(n) / n
    return ClosedCurve(np.stack([a * np.cos(al), b * np.sin(al)], axis=1))


def test_circle_frame_and_curvature():
    R = 1.7
    geom = compute_geometry(ClosedCurve.circle(R, 128))
    phi = geom.curve.params
    np.testing.assert_allclose(geom.normal.T, [np.cos(phi), np.sin(phi)], atol=1e-10)
    np.testing.assert_allclose(geom.kappa, 1 / R, rtol=1e-10)
    np.testing.assert_allclose(geom.area, np.pi * R**2, rtol=1e-12)
    np.testing.assert_allclose(geom.arc_weights.sum(), 2 * np.pi * R, rtol=1e-12)
    np.testing.assert_allclose(geom.iota0, R, rtol=1e-8)


def test_ellipse_tip_curvature():
    # kappa = a/b^2 at (a, 0); the parametrisation puts node 0 there
    geom = compute_geometry(ellipse(2.0, 1.0, 256))
    np.testing.assert_allclose(geom.kappa[0], 2.0, rtol=1e-9)
    np.testing.assert_allclose(geom.area, 2 * np.pi, rtol=1e-12)
    assert geom.iota0 == pytest.approx(0.5, rel=1e-6)  # b^2/a at the tips
    assert geom.K == pytest.approx(2.0, rel=1e-6)


def test_curvature_converges_spectrally():
    # non-band-limited radius so the node count actually matters
    def wavy(n):
        al = 2 * np.pi * np.arange(n) / n
        r = np.exp(0.25 * np.cos(2 * al))
        return ClosedCurve(np.stack([r * np.cos(al), r * np.sin(al)], axis=1))

    ref = compute_geometry(wavy(1024)).kappa[0]
    errs = [abs(compute_geometry(wavy(n)).kappa[0] - ref) for n in [16, 32, 64]]
    assert errs[1] < errs[0] / 8
    assert errs[2] < 1e-8


def test_orientation_must_be_counterclockwise():
    pts = ClosedCurve.circle(1.0, 32).xy[::-1].copy()
    with pytest.raises(GeometryError):
        compute_geometry(ClosedCurve(pts))


def test_self_intersection_detected():
    al = 2 * np.pi * np.arange(64) / 64
    r = 1 + 1.4 * np.cos(2 * al)  # limacon-like radius goes negative: crossing loops
    pts = np.stack([r * np.cos(al), r * np.sin(al)], axis=1) + np.array([3.0, 0.0])
    with pytest.raises(GeometryError):
        compute_geometry(ClosedCurve(pts))


def test_nearest_point_on_circle():
    curve = ClosedCurve.circle(2.0, 64)
    rng = np.random.default_rng(7)
    pts = rng.uniform(-1.5, 1.5, size=(40, 2))
    d, alpha, xbar = curve.nearest(pts)
    r = np.hypot(pts[:, 0], pts[:, 1])
    np.testing.assert_allclose(d, np.abs(2.0 - r), atol=1e-9)
    np.testing.assert_allclose(xbar, 2.0 * pts / r[:, None], atol=1e-8)


def test_nearest_point_on_ellipse_beats_dense_sampling():
    curve = ellipse(2.0, 1.0, 128)
    rng = np.random.default_rng(3)
    pts = rng.uniform(-0.8, 0.8, size=(25, 2)) * np.array([1.6, 0.7])
    d, alpha, xbar = curve.nearest(pts)
    dense = curve.eval(np.linspace(0, 2 * np.pi, 20000, endpoint=False))
    d_dense = np.min(np.hypot(pts[:, 0, None] - dense[:, 0], pts[:, 1, None] - dense[:, 1]), axis=1)
    assert np.all(d <= d_dense + 1e-10)


def test_eta_plateau_shape():
    d = np.linspace(0, 1, 200)
    eta = eta_plateau(d, 0.25, 0.5)
    assert np.all(eta[d <= 0.25] == 1.0)
    assert np.all(eta[d >= 0.5] == 0.0)
    assert np.all(np.diff(eta) <= 1e-15)
    assert np.all((eta >= 0) & (eta <= 1))


@given(st.floats(0.3, 0.9), st.integers(0, 39))
@settings(max_examples=30, deadline=None)
def test_cutoff_cometric_eigenvalues_bounded(scale, idx):
    curve = ClosedCurve.circle(1.0, 64)
    rng = np.random.default_rng(11)
    pts = scale * rng.uniform(-0.7, 0.7, size=(40, 2))
    cut = cutoff_cometric(curve, pts, d0=0.5)
    q = cut.q_upper[:, :, idx]
    ev = np.linalg.eigvalsh(0.5 * (q + q.T))
    assert ev.min() >= -1e-12
    assert ev.max() <= 1 + 1e-12


def test_cutoff_cometric_degenerates_only_near_curve():
    curve = ClosedCurve.circle(1.0, 64)
    pts = np.array([[0.95, 0.0], [0.0, 0.4]])
    cut = cutoff_cometric(curve, pts, d0=0.5)
    # near the curve: q annihilates the normal direction
    qn = cut.q_upper[:, :, 0] @ np.array([1.0, 0.0])
    np.testing.assert_allclose(qn, 0.0, atol=1e-12)
    # deep inside: cutoff off, q = identity
    np.testing.assert_allclose(cut.q_upper[:, :, 1], np.eye(2), atol=1e-12)


def test_curve_csv_roundtrip(tmp_path):
    curve = ellipse(1.5, 0.8, 48)
    path = tmp_path / "gamma.csv"
    curve_to_csv(curve, path)
    text = path.read_text()
    assert text.splitlines()[0] == "param,x,y"
    back = curve_from_csv(path)
    np.testing.assert_array_equal(back.xy, curve.xy)


def test_geometry_report_keys():
    rep = compute_geometry(ClosedCurve.circle(1.0, 32)).as_report()
    for key in ["n_nodes", "area", "length", "kappa_max", "iota0", "iota1", "K"]:
        assert key in rep
