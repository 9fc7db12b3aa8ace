"""Quadrature grids over truncated balls of the cylinder R^k x Cone(T^(m-1)).

Regions are B_rho intersected with the cylinder and optionally with the
annulus {r > tau * rho}.  The axial/radial block uses Gauss-Legendre in a
polar parametrization of the quarter disk {|x|^2 + r^2 <= rho^2}: with
|x| = rho t cos(psi), r = rho t sin(psi) the annulus cut becomes an exact
psi-interval per radial node, so the truncation costs no smoothness.  The
torus factor is a uniform product rule (trapezoidal), exact for trigonometric
polynomials of per-circle frequency below the node count.

Grids scale linearly with rho, which makes every integral of a homogeneous
integrand exactly homogeneous in rho up to floating point rounding.  Grids
are immutable after construction; integrals are plain weighted dot products
(numpy's pairwise summation), deterministic for a fixed node order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np


@dataclass(frozen=True)
class GridSpec:
    """Node counts; n_theta is per torus circle."""

    n_radial: int = 40
    n_polar: int = 32
    n_theta: int = 16
    n_sphere: int = 16

    def coarsened(self) -> "GridSpec":
        return GridSpec(
            n_radial=max(6, self.n_radial // 2),
            n_polar=max(6, self.n_polar // 2),
            n_theta=max(4, self.n_theta // 2),
            n_sphere=max(4, self.n_sphere // 2),
        )


def suggest_n_theta(expansions, pad: int = 6, floor: int = 8) -> int:
    """Node count per circle resolving products of the given expansions exactly."""
    freq = 0
    for f in expansions:
        for mode in f.modes:
            freq = max(freq, max((abs(v) for v in mode.nu), default=0))
    return max(floor, 4 * freq + pad)


def sphere_rule(k: int, n: int):
    """Directions and weights integrating over S^(k-1); supports k <= 3."""
    if k == 1:
        return np.array([[1.0], [-1.0]]), np.array([1.0, 1.0])
    if k == 2:
        ang = 2.0 * math.pi * (np.arange(n) + 0.5) / n
        dirs = np.stack([np.cos(ang), np.sin(ang)], axis=1)
        return dirs, np.full(n, 2.0 * math.pi / n)
    if k == 3:
        nodes, w = np.polynomial.legendre.leggauss(max(4, n // 2))
        ang = 2.0 * math.pi * (np.arange(n) + 0.5) / n
        ct, phi = np.meshgrid(nodes, ang, indexing="ij")
        st = np.sqrt(1.0 - ct**2)
        dirs = np.stack([st * np.cos(phi), st * np.sin(phi), ct], axis=-1).reshape(-1, 3)
        ww = np.outer(w, np.full(n, 2.0 * math.pi / n)).ravel()
        return dirs, ww
    raise ValueError(f"axial dimension k={k} not supported (k <= 3)")


MAX_TORUS_NODES = 1 << 20


def capped_n_theta(m: int, n_theta: int, cap: int = MAX_TORUS_NODES) -> int:
    """Largest per-circle count <= n_theta keeping n_theta^(m-1) under the cap."""
    n = max(4, int(n_theta))
    while n > 4 and n ** (m - 1) > cap:
        n -= 2
    return n


def torus_rule(m: int, n_theta: int):
    """Uniform product nodes on [0, 2pi)^(m-1) with flat weights (2pi/n)^(m-1).

    The per-circle count is reduced for large m so the product stays within
    MAX_TORUS_NODES.
    """
    n_theta = capped_n_theta(m, n_theta)
    one = 2.0 * math.pi * np.arange(n_theta) / n_theta
    grids = np.meshgrid(*([one] * (m - 1)), indexing="ij")
    theta = np.stack([g.ravel() for g in grids], axis=1)
    w = (2.0 * math.pi / n_theta) ** (m - 1)
    return theta, np.full(theta.shape[0], w)


def sqrt_det_link_metric(m: int) -> float:
    """sqrt(det G) for the flat link metric G = (1/m)(I + 11^T): m^((2-m)/2)."""
    return m ** (0.5 * (2 - m))


def sphere_area(k: int) -> float:
    return 2.0 * math.pi ** (0.5 * k) / math.gamma(0.5 * k)


def ball_volume(n: int) -> float:
    return math.pi ** (0.5 * n) / math.gamma(0.5 * n + 1)


def cone_ball_volume(k: int, m: int, rho: float = 1.0) -> float:
    """Closed-form H^n measure of (R^k x Cone) intersected with B_rho."""
    n = k + m
    link_vol = (2.0 * math.pi) ** (m - 1) * sqrt_det_link_metric(m)
    if k == 0:
        return link_vol * rho**m / m
    half_beta = 0.5 * math.gamma(0.5 * k) * math.gamma(0.5 * m) / math.gamma(0.5 * (k + m))
    return link_vol * sphere_area(k) * rho**n / n * half_beta


@dataclass(frozen=True)
class QuadratureGrid:
    """Nodes over a truncated cylinder ball with coordinate and cone measures.

    ``param_weights`` carry the coordinate measure dx dr dtheta;
    ``cone_weights`` additionally include the cone area factor
    r^(m-1) sqrt(det G), so that cone_weights . values integrates over H^n of
    the model cylinder.  ``t`` is |u - center|/rho per node.
    """

    k: int
    m: int
    rho: float
    tau: float
    center: np.ndarray
    x: np.ndarray
    r: np.ndarray
    theta: np.ndarray
    param_weights: np.ndarray
    cone_weights: np.ndarray
    t: np.ndarray

    @property
    def n_nodes(self) -> int:
        return int(self.r.shape[0])

    def integrate_cone(self, values) -> float:
        return float(np.dot(self.cone_weights, values))


def cylinder_ball_grid(
    k: int,
    m: int,
    rho: float = 1.0,
    tau: float = 0.0,
    center=None,
    spec: GridSpec | None = None,
) -> QuadratureGrid:
    """Grid over (R^k x Cone) within B_rho(center), cut to {r > tau * rho}."""
    if spec is None:
        spec = GridSpec()
    if not 0.0 <= tau < 1.0:
        raise ValueError(f"need 0 <= tau < 1, got tau={tau}")
    if rho <= 0.0:
        raise ValueError(f"need rho > 0, got rho={rho}")
    center = np.zeros(k) if center is None else np.asarray(center, dtype=float)
    if center.shape != (k,):
        raise ValueError(f"center must be an axial point of dimension {k}")

    theta, w_theta = torus_rule(m, spec.n_theta)
    sdg = sqrt_det_link_metric(m)

    if k == 0:
        tk, wk = np.polynomial.legendre.leggauss(spec.n_radial)
        t = 0.5 * (tk + 1.0) * (1.0 - tau) + tau
        wt = 0.5 * (1.0 - tau) * wk
        r = rho * t
        base_w = rho * wt  # dr
        nt = theta.shape[0]
        nr = t.shape[0]
        rr = np.repeat(r, nt)
        tt = np.repeat(t, nt)
        th = np.tile(theta, (nr, 1))
        pw = np.repeat(base_w, nt) * np.tile(w_theta, nr)
        cw = pw * rr ** (m - 1) * sdg
        x = np.zeros((rr.shape[0], 0))
        return QuadratureGrid(k, m, rho, tau, center, x, rr, th, pw, cw, tt)

    dirs, w_dir = sphere_rule(k, spec.n_sphere)

    tk, wk = np.polynomial.legendre.leggauss(spec.n_radial)
    pk, wpk = np.polynomial.legendre.leggauss(spec.n_polar)

    if tau > 0.0:
        # square-root substitution t = tau + (1-tau) u^2: the psi-interval
        # collapses like sqrt(t - tau) at the annulus corner, and this map
        # turns the resulting half-integer power into a polynomial
        u = 0.5 * (tk + 1.0)
        t = tau + (1.0 - tau) * u**2
        wt = 0.5 * wk * 2.0 * (1.0 - tau) * u
    else:
        t = 0.5 * (tk + 1.0)
        wt = 0.5 * wk

    rows = []
    for ti, wti in zip(t, wt):
        psi_lo = math.asin(min(1.0, tau / ti)) if tau > 0.0 else 0.0
        if psi_lo >= 0.5 * math.pi:
            continue
        psi = 0.5 * (pk + 1.0) * (0.5 * math.pi - psi_lo) + psi_lo
        wpsi = 0.5 * (0.5 * math.pi - psi_lo) * wpk
        s_ax = rho * ti * np.cos(psi)
        r_c = rho * ti * np.sin(psi)
        # measure: rho^2 t dt dpsi * s^(k-1) dsigma * dtheta
        w2d = wti * wpsi * rho**2 * ti * s_ax ** (k - 1)
        rows.append((np.full_like(psi, ti), s_ax, r_c, w2d))

    t2 = np.concatenate([row[0] for row in rows])
    s2 = np.concatenate([row[1] for row in rows])
    r2 = np.concatenate([row[2] for row in rows])
    w2 = np.concatenate([row[3] for row in rows])

    # tensor with sphere directions and torus nodes
    nd = dirs.shape[0]
    nth = theta.shape[0]
    n2 = t2.shape[0]

    x = (s2[:, None, None] * dirs[None, :, :]).reshape(n2 * nd, k)
    x = np.repeat(x, nth, axis=0) + center
    rr = np.repeat(np.repeat(r2, nd), nth)
    tt = np.repeat(np.repeat(t2, nd), nth)
    th = np.tile(theta, (n2 * nd, 1))
    pw = np.repeat(np.repeat(w2, nd) * np.tile(w_dir, n2), nth) * np.tile(w_theta, n2 * nd)
    cw = pw * rr ** (m - 1) * sdg
    return QuadratureGrid(k, m, rho, tau, center, x, rr, th, pw, cw, tt)


@dataclass(frozen=True)
class BoundaryGrid:
    """Nodes on the cone's sphere cross-section {|u - center| = rho} with (n-1)-measure weights."""

    k: int
    m: int
    rho: float
    center: np.ndarray
    x: np.ndarray
    r: np.ndarray
    theta: np.ndarray
    cone_weights: np.ndarray

    def integrate(self, values) -> float:
        return float(np.dot(self.cone_weights, values))


def cylinder_sphere_grid(
    k: int, m: int, rho: float = 1.0, center=None, spec: GridSpec | None = None
) -> BoundaryGrid:
    """Boundary grid used for thin-shell corrections at the ball edge."""
    if spec is None:
        spec = GridSpec()
    center = np.zeros(k) if center is None else np.asarray(center, dtype=float)
    theta, w_theta = torus_rule(m, spec.n_theta)
    sdg = sqrt_det_link_metric(m)
    n = k + m

    if k == 0:
        rr = np.full(theta.shape[0], rho)
        cw = w_theta * rho ** (m - 1) * sdg
        return BoundaryGrid(k, m, rho, center, np.zeros((rr.shape[0], 0)), rr, theta, cw)

    dirs, w_dir = sphere_rule(k, spec.n_sphere)
    pk, wpk = np.polynomial.legendre.leggauss(spec.n_polar)
    psi = 0.25 * math.pi * (pk + 1.0)
    wpsi = 0.25 * math.pi * wpk
    # (n-1)-measure: rho^(n-1) cos^(k-1) sin^(m-1) dpsi dsigma dtheta * sqrt(det G)
    w1 = wpsi * rho ** (n - 1) * np.cos(psi) ** (k - 1) * np.sin(psi) ** (m - 1) * sdg

    nd = dirs.shape[0]
    nth = theta.shape[0]
    np1 = psi.shape[0]
    s_ax = rho * np.cos(psi)
    r_c = rho * np.sin(psi)

    x = (s_ax[:, None, None] * dirs[None, :, :]).reshape(np1 * nd, k)
    x = np.repeat(x, nth, axis=0) + center
    rr = np.repeat(np.repeat(r_c, nd), nth)
    th = np.tile(theta, (np1 * nd, 1))
    cw = np.repeat(np.repeat(w1, nd) * np.tile(w_dir, np1), nth) * np.tile(w_theta, np1 * nd)
    return BoundaryGrid(k, m, rho, center, x, rr, th, cw)
