import math

import numpy as np
import pytest
from scipy import integrate

from hlcone.quadrature import (
    GridSpec,
    ball_volume,
    cone_ball_volume,
    cylinder_ball_grid,
    cylinder_sphere_grid,
    sphere_area,
    sphere_rule,
    sqrt_det_link_metric,
    suggest_n_theta,
    torus_rule,
)


def test_constant_volume_matches_closed_form():
    for k, m in ((0, 3), (1, 3), (1, 5), (2, 3), (2, 4), (3, 3)):
        grid = cylinder_ball_grid(k, m, rho=1.0, spec=GridSpec(n_radial=24, n_polar=24, n_theta=6, n_sphere=12))
        vol = grid.cone_weights.sum()
        closed = cone_ball_volume(k, m, 1.0)
        assert vol == pytest.approx(closed, rel=1e-8), (k, m)


def test_volume_scales_homogeneously():
    grid1 = cylinder_ball_grid(1, 3, rho=1.0)
    grid2 = cylinder_ball_grid(1, 3, rho=2.0)
    n = 4
    assert grid2.cone_weights.sum() == pytest.approx(2**n * grid1.cone_weights.sum(), rel=1e-13)


def test_annulus_volume_against_1d_oracle():
    k, m, tau = 1, 3, 0.3
    grid = cylinder_ball_grid(k, m, rho=1.0, tau=tau)
    link_vol = (2 * math.pi) ** (m - 1) * sqrt_det_link_metric(m)
    radial, _ = integrate.quad(lambda r: r ** (m - 1) * 2.0 * math.sqrt(1 - r * r), tau, 1.0)
    assert grid.cone_weights.sum() == pytest.approx(link_vol * radial, rel=1e-8)


def test_torus_rule_exactness():
    theta, w = torus_rule(3, 8)
    # trig polynomials with per-circle frequency < 8 integrate exactly
    for nu in ((1, 0), (3, 2), (0, 3), (2, 2)):
        vals = np.cos(theta @ np.array(nu, dtype=float))
        assert abs(np.dot(w, vals)) < 1e-12
    vals = np.cos(theta @ np.array([2.0, 1.0])) ** 2
    assert np.dot(w, vals) == pytest.approx(0.5 * (2 * math.pi) ** 2, rel=1e-13)
    # frequency equal to the node count aliases to the constant: not exact
    vals = np.cos(8.0 * theta[:, 0])
    assert abs(np.dot(w, vals)) > 1.0


def test_sphere_rules():
    for k in (1, 2, 3):
        dirs, w = sphere_rule(k, 16)
        assert w.sum() == pytest.approx(sphere_area(k), rel=1e-12)
        assert np.allclose(np.linalg.norm(dirs, axis=1), 1.0)
        # odd moments vanish, second moments are area/k
        assert np.max(np.abs(w @ dirs)) < 1e-12
        second = (w[:, None] * dirs**2).sum(axis=0)
        assert np.allclose(second, sphere_area(k) / k, rtol=1e-12)
    with pytest.raises(ValueError):
        sphere_rule(4, 8)


def test_boundary_grid_area():
    # (n-1)-measure of the sphere cross-section equals d/drho of the ball volume
    for k, m in ((1, 3), (2, 3)):
        bgrid = cylinder_sphere_grid(k, m, rho=1.0, spec=GridSpec(n_polar=32, n_theta=8, n_sphere=16))
        n = k + m
        expected = n * cone_ball_volume(k, m, 1.0)
        assert bgrid.cone_weights.sum() == pytest.approx(expected, rel=1e-8)


def test_off_center_grid():
    center = np.array([0.4])
    grid = cylinder_ball_grid(1, 3, rho=1.0, center=center)
    # region is |(x - c, r)| <= rho
    d = np.sqrt((grid.x[:, 0] - 0.4) ** 2 + grid.r**2)
    assert np.max(d) <= 1.0 + 1e-12
    assert grid.cone_weights.sum() == pytest.approx(cone_ball_volume(1, 3, 1.0), rel=1e-8)


def test_grid_validation():
    with pytest.raises(ValueError):
        cylinder_ball_grid(1, 3, rho=-1.0)
    with pytest.raises(ValueError):
        cylinder_ball_grid(1, 3, rho=1.0, tau=1.5)


def test_suggest_n_theta():
    from hlcone.harmonics import expansion

    f = expansion(1, 3).mode(nu=(2, 1), parity="cos")
    assert suggest_n_theta([f]) >= 14
    assert suggest_n_theta([expansion(1, 3)]) >= 8


def test_ball_volume():
    assert ball_volume(2) == pytest.approx(math.pi)
    assert ball_volume(3) == pytest.approx(4 * math.pi / 3)
