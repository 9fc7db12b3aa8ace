"""Measured quantities on exact Lagrangian graphs: scale-invariant norms,
volume excess two ways, Hausdorff distances, and subharmonicity probes.

Region conventions.  Cone-side norms integrate over the model ball with the
cone measure.  Graph-side integrals parametrize the surface over the model
ball; since the first-order graph displacement is symplectically orthogonal
to the position vector, graph points satisfy |point|^2 = |base|^2 + |grad f|^2
exactly, so the graph-over-base-ball region differs from the true metric ball
by an outward shell of second order.  The density form subtracts that shell
through a boundary integral, which keeps the agreement between the
Hausdorff-measure form and the monotonicity-formula form beyond quadratic
order in the graph size (measured: quartic, both forms being even in the
amplitude).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels, quadrature
from .geometry import CylinderModel, GraphChart, cylinder_point
from .harmonics import HarmonicExpansion, beta_of, y_of
from .quadrature import GridSpec, cylinder_ball_grid, cylinder_sphere_grid, suggest_n_theta


class RegimeError(RuntimeError):
    """The graph-regime gauge max r^(-1)|df| exceeded its bound."""

    def __init__(self, sup: float, bound: float):
        super().__init__(f"graph regime violated: max r^-1|df| = {sup:.3e} > {bound:.3e}")
        self.sup = sup
        self.bound = bound


class RegionError(ValueError):
    """A region constraint left no points to compare."""


GRAPH_REGIME_BOUND = 0.1
# The r^-1|df| gauge is an annulus condition: below this fraction of the ball
# radius the spine region is controlled by measure, not by graphality, and
# low-growth modes make the quotient blow up even for tiny graphs.
REGIME_FLOOR = 0.05


@dataclass(frozen=True)
class RegionSpec:
    """Ball of radius rho about an axial center, optionally cut to {r > tau rho}."""

    rho: float
    tau: float = 0.0
    center: tuple = None
    annulus: bool = None

    def __post_init__(self):
        if not 0.0 <= self.tau < 1.0:
            raise ValueError(f"need 0 <= tau < 1, got {self.tau}")
        if self.rho <= 0.0:
            raise ValueError("region radius must be positive")
        if self.annulus is None:
            object.__setattr__(self, "annulus", self.tau > 0.0)

    def mask(self, points: np.ndarray, axial_dim: int) -> np.ndarray:
        """Membership mask for ambient complex points (N, n)."""
        pts = np.atleast_2d(points)
        n = pts.shape[1]
        center = np.zeros(n, dtype=complex)
        if self.center is not None:
            center[: len(self.center)] += np.asarray(self.center, dtype=float)
        d = pts - center
        inside = np.sqrt(np.sum(np.abs(d) ** 2, axis=1)) <= self.rho * (1.0 + 1e-12)
        if self.annulus and self.tau > 0.0:
            r_part = np.sqrt(np.sum(np.abs(pts[:, axial_dim:]) ** 2, axis=1))
            inside &= r_part > self.tau * self.rho
        return inside


@dataclass(frozen=True)
class ExcessReport:
    """Normalized volume excess at radius r, measured two ways."""

    r: float
    density_form: float
    monotone_form: float
    discrepancy: float
    density_err: float
    monotone_err: float

    def to_jsonable(self) -> dict:
        return {
            "r": self.r,
            "density_form": self.density_form,
            "monotone_form": self.monotone_form,
            "discrepancy": self.discrepancy,
            "density_err": self.density_err,
            "monotone_err": self.monotone_err,
        }


def excess_csv(reports) -> str:
    """Plot-ready CSV: r, density_form, monotone_form, discrepancy."""
    rows = ["r,density_form,monotone_form,discrepancy"]
    for rep in reports:
        rows.append("%.17g,%.17g,%.17g,%.17g" % (
            rep.r, rep.density_form, rep.monotone_form, rep.discrepancy))
    return "\n".join(rows) + "\n"


@dataclass(frozen=True)
class NormReport:
    """Scale-invariant norms: beta and y over the graph ball, f over the cone annulus."""

    beta_norm: float
    y_norm: float
    f_norm: float

    @property
    def by_combined_sq(self) -> float:
        return (self.beta_norm + self.y_norm) ** 2


def _default_spec(f: HarmonicExpansion, spec: GridSpec | None) -> GridSpec:
    if spec is not None:
        return spec
    return GridSpec(n_theta=suggest_n_theta([f]))


def _check_regime(chart: GraphChart, grid) -> None:
    keep = grid.r > REGIME_FLOOR * grid.rho
    if not np.any(keep):
        keep = slice(None)
    sup = chart.regime_sup(grid.x[keep], grid.r[keep], grid.theta[keep])
    if sup >= GRAPH_REGIME_BOUND:
        raise RegimeError(sup, GRAPH_REGIME_BOUND)


CHUNK = 120_000


def _chunks(n: int):
    for lo in range(0, n, CHUNK):
        yield slice(lo, min(lo + CHUNK, n))


def graph_area(model: CylinderModel, f: HarmonicExpansion, rho: float, tau: float = 0.0,
               spec: GridSpec | None = None, shell_corrected: bool = False) -> float:
    """H^n of the graph over the model ball (optionally annulus-cut / shell-corrected)."""
    spec = _default_spec(f, spec)
    chart = GraphChart(model, f)
    grid = cylinder_ball_grid(model.axial_dim, model.m, rho=rho, tau=tau, spec=spec)
    area = 0.0
    for sl in _chunks(grid.n_nodes):
        area_el = chart.area_elements(grid.x[sl], grid.r[sl], grid.theta[sl])
        area += float(np.dot(grid.param_weights[sl], area_el))
    if shell_corrected:
        area -= _shell_correction(chart, model, rho, spec)
    return area


def _shell_correction(chart: GraphChart, model: CylinderModel, rho: float, spec: GridSpec) -> float:
    """Area of graph points pushed beyond |p| = rho: boundary integral of |p| - rho."""
    bgrid = cylinder_sphere_grid(model.axial_dim, model.m, rho=rho, spec=spec)
    out = 0.0
    for sl in _chunks(bgrid.r.shape[0]):
        pts = chart.points(bgrid.x[sl], bgrid.r[sl], bgrid.theta[sl])
        delta = np.sqrt(np.sum(np.abs(pts) ** 2, axis=1)) - rho
        out += float(np.dot(bgrid.cone_weights[sl], delta))
    return out


def _graph_geometry(chart: GraphChart, x, r, theta):
    """Positions, area elements, and squared normal components of the position vector."""
    pts = chart.points(x, r, theta)
    tan = chart.tangents(x, r, theta)
    norms = np.sqrt(np.sum(np.abs(tan) ** 2, axis=2))
    that = tan / norms[:, :, None]
    gram = np.real(np.einsum("nia,nja->nij", that, that.conj()))
    det = np.linalg.det(gram)
    area_el = np.prod(norms, axis=1) * np.sqrt(np.maximum(det, 0.0))
    rhs = np.real(np.einsum("nia,na->ni", that.conj(), pts))
    coef = np.linalg.solve(gram, rhs[..., None])[..., 0]
    tangential = np.einsum("ni,nia->na", coef, that)
    perp = pts - tangential
    perp_sq = np.sum(np.abs(perp) ** 2, axis=1)
    radius = np.sqrt(np.sum(np.abs(pts) ** 2, axis=1))
    return pts, area_el, perp_sq, radius


def _volume_excess_once(model, f, r, spec) -> tuple:
    chart = GraphChart(model, f)
    grid = cylinder_ball_grid(model.axial_dim, model.m, rho=r, tau=0.0, spec=spec)
    _check_regime(chart, grid)
    n = model.ambient_dim
    density = 0.0
    monotone = 0.0
    for sl in _chunks(grid.n_nodes):
        _pts, area_el, perp_sq, radius = _graph_geometry(chart, grid.x[sl], grid.r[sl], grid.theta[sl])
        cone_el = grid.cone_weights[sl] / grid.param_weights[sl]
        density += float(np.dot(grid.param_weights[sl], area_el - cone_el))
        monotone += float(np.dot(grid.param_weights[sl], area_el * perp_sq / radius ** (n + 2)))
    density -= _shell_correction(chart, model, r, spec)
    density *= r**-n
    return density, monotone


def volume_excess(model: CylinderModel, f: HarmonicExpansion, r: float,
                  spec: GridSpec | None = None) -> ExcessReport:
    """Normalized volume excess at radius r.

    density_form: r^(-n) [H^n(graph cap B_r) - H^n(model cap B_r)], via the
    graph area element with the boundary-shell correction.
    monotone_form: integral of |x_perp|^2 / R^(n+2) over the graph, x_perp the
    projection of the position vector onto the measured normal space.
    Both come with quadrature error estimates from a coarsened grid.
    """
    spec = _default_spec(f, spec)
    density, monotone = _volume_excess_once(model, f, r, spec)
    density_c, monotone_c = _volume_excess_once(model, f, r, spec.coarsened())
    return ExcessReport(
        r=r,
        density_form=density,
        monotone_form=monotone,
        discrepancy=density - monotone,
        density_err=abs(density - density_c),
        monotone_err=abs(monotone - monotone_c),
    )


def volume_excess_annulus(model: CylinderModel, f: HarmonicExpansion, r_hi: float, r_lo: float,
                          spec: GridSpec | None = None) -> float:
    """VolEx(r_hi) - VolEx(r_lo), as a difference of monotone forms."""
    spec = _default_spec(f, spec)
    hi = _volume_excess_once(model, f, r_hi, spec)[1]
    lo = _volume_excess_once(model, f, r_lo, spec)[1]
    return hi - lo


def average_beta(model: CylinderModel, f: HarmonicExpansion, rho: float,
                 beta_offset: float = 0.0, spec: GridSpec | None = None) -> float:
    """Volume average of beta over the graph above the model ball B_rho."""
    spec = _default_spec(f, spec)
    chart = GraphChart(model, f)
    grid = cylinder_ball_grid(model.axial_dim, model.m, rho=rho, tau=0.0, spec=spec)
    beta_terms = beta_of(f).terms()
    num = den = 0.0
    for sl in _chunks(grid.n_nodes):
        area_el = chart.area_elements(grid.x[sl], grid.r[sl], grid.theta[sl])
        beta_vals = beta_terms.eval(grid.x[sl], grid.r[sl], grid.theta[sl]) + beta_offset
        w = grid.param_weights[sl] * area_el
        num += float(np.dot(w, beta_vals))
        den += float(np.sum(w))
    return num / den


def scale_invariant_norms(model: CylinderModel, f: HarmonicExpansion, rho: float, tau: float,
                          beta_offset: float = 0.0, spec: GridSpec | None = None) -> NormReport:
    """(||beta||, ||y||, ||f||) with exponents rho^(-n-4), rho^(-n-2), rho^(-n-4).

    beta and y are derived from the potential and integrated over the graph
    with its area element; f is integrated over the cone annulus {r > tau rho}.
    Raises RegimeError when max r^(-1)|df| >= 0.1 on the region.
    """
    spec = _default_spec(f, spec)
    n = model.ambient_dim
    chart = GraphChart(model, f)
    grid = cylinder_ball_grid(model.axial_dim, model.m, rho=rho, tau=0.0, spec=spec)
    _check_regime(chart, grid)
    beta_terms = beta_of(f).terms()
    y_terms = [y_of(f, i).terms() for i in range(1, model.axial_dim + 1)]
    beta_sq = 0.0
    y_sq = 0.0
    for sl in _chunks(grid.n_nodes):
        area_el = chart.area_elements(grid.x[sl], grid.r[sl], grid.theta[sl])
        w = grid.param_weights[sl] * area_el
        beta_vals = beta_terms.eval(grid.x[sl], grid.r[sl], grid.theta[sl]) + beta_offset
        beta_sq += float(np.dot(w, beta_vals**2))
        for yt in y_terms:
            y_vals = yt.eval(grid.x[sl], grid.r[sl], grid.theta[sl])
            y_sq += float(np.dot(w, y_vals**2))
    beta_sq *= rho ** (-n - 4)
    y_sq *= rho ** (-n - 2)

    f_annulus = cylinder_ball_grid(model.axial_dim, model.m, rho=rho, tau=tau, spec=spec)
    f_vals = f.terms().eval(f_annulus.x, f_annulus.r, f_annulus.theta) + beta_offset
    f_sq = rho ** (-n - 4) * float(np.dot(f_annulus.cone_weights, f_vals**2))

    return NormReport(beta_norm=math.sqrt(max(beta_sq, 0.0)),
                      y_norm=math.sqrt(max(y_sq, 0.0)),
                      f_norm=math.sqrt(max(f_sq, 0.0)))


# ---------------------------------------------------------------------------
# Hausdorff distances
# ---------------------------------------------------------------------------

def _to_real(points: np.ndarray) -> np.ndarray:
    pts = np.atleast_2d(np.asarray(points))
    if np.iscomplexobj(pts):
        return np.concatenate([pts.real, pts.imag], axis=1)
    return pts.astype(float)


def model_point_samples(model: CylinderModel, region: RegionSpec, spec: GridSpec | None = None) -> np.ndarray:
    """Ambient sample points of the model filling the region.

    Samples come from the full ball grid (the annulus cut is applied by the
    caller's region mask) so that graph and model discretizations coincide
    when the graph is trivial.
    """
    spec = spec or GridSpec()
    grid = cylinder_ball_grid(model.axial_dim, model.m, rho=region.rho, tau=0.0,
                              center=None if region.center is None else np.asarray(region.center),
                              spec=spec)
    return cylinder_point(model, grid.x, grid.r, grid.theta)


def graph_point_samples(model: CylinderModel, f: HarmonicExpansion, region: RegionSpec,
                        spec: GridSpec | None = None) -> np.ndarray:
    spec = spec or _default_spec(f, None)
    chart = GraphChart(model, f)
    grid = cylinder_ball_grid(model.axial_dim, model.m, rho=region.rho, tau=region.tau,
                              center=None if region.center is None else np.asarray(region.center),
                              spec=spec)
    return chart.points(grid.x, grid.r, grid.theta)


def hausdorff_distance(a, b, region: RegionSpec, axial_dim: int = 0,
                       spec: GridSpec | None = None) -> float:
    """Symmetric Hausdorff distance between region-restricted point sets.

    ``a`` is a point cloud; ``b`` is a point cloud or a CylinderModel (sampled
    on a grid filling the region).  Points are compared in ambient C^n.
    """
    if isinstance(b, CylinderModel):
        axial_dim = b.axial_dim
        b_pts = model_point_samples(b, region, spec=spec)
    else:
        b_pts = np.atleast_2d(np.asarray(b))
    a_pts = np.atleast_2d(np.asarray(a))
    am = region.mask(a_pts, axial_dim)
    bm = region.mask(b_pts, axial_dim)
    if not np.any(am) or not np.any(bm):
        raise RegionError("region filter left an empty point set")
    ar = _to_real(a_pts[am])
    br = _to_real(b_pts[bm])
    d_ab = _kernels.directed_hausdorff_sq(ar, br)
    d_ba = _kernels.directed_hausdorff_sq(br, ar)
    return math.sqrt(max(d_ab, d_ba))


@dataclass(frozen=True)
class HausdorffBoundResult:
    """Outcome of the ball-versus-annulus Hausdorff comparison."""

    hypothesis_ok: bool
    lhs: float
    rhs: float
    passed: bool
    detail: dict

    def to_jsonable(self) -> dict:
        out = {"hypothesis_ok": self.hypothesis_ok, "lhs": self.lhs, "rhs": self.rhs,
               "passed": self.passed}
        out.update(self.detail)
        return out


def hausdorff_bound_check(model: CylinderModel, f: HarmonicExpansion, rho: float, tau: float,
                          epsilon: float, delta: float, constant: float = 100.0,
                          n_model: CylinderModel | None = None,
                          spec: GridSpec | None = None) -> HausdorffBoundResult:
    """Check d^H(N, model; B_rho) <= rho eps + rho C (vol-diff + tau^(n-k) + delta)^(1/n).

    N is the graph of ``f`` over ``n_model`` (defaults to ``model``).  The two
    hypotheses are verified first: the annulus volume difference must be
    below delta (after rho^-n normalization) and the annulus Hausdorff
    distance below rho * epsilon; otherwise the result reports hypothesis
    failure without evaluating the bound.
    """
    n_model = n_model or model
    spec = _default_spec(f, spec)
    k, n = model.axial_dim, model.ambient_dim

    annulus = RegionSpec(rho=rho, tau=tau)
    ball = RegionSpec(rho=rho)

    area_n_ann = graph_area(n_model, f, rho, tau=tau, spec=spec)
    area_c_ann = float(quadrature.cylinder_ball_grid(k, model.m, rho=rho, tau=tau, spec=spec)
                       .cone_weights.sum())
    vol_diff_ann = abs(area_n_ann - area_c_ann) * rho**-n

    n_pts = graph_point_samples(n_model, f, ball, spec=spec)
    d_ann = hausdorff_distance(n_pts, model, annulus, spec=spec)

    detail = {"vol_diff_annulus": vol_diff_ann, "d_annulus": d_ann,
              "delta": delta, "epsilon": epsilon, "constant": constant}
    if vol_diff_ann > delta or d_ann > rho * epsilon:
        return HausdorffBoundResult(False, math.nan, math.nan, False, detail)

    lhs = hausdorff_distance(n_pts, model, ball, spec=spec)
    area_n = graph_area(n_model, f, rho, tau=0.0, spec=spec, shell_corrected=True)
    area_c = quadrature.cone_ball_volume(k, model.m, rho)
    inner = max(0.0, (area_n - area_c) * rho**-n) + tau ** (n - k) + delta
    rhs = rho * epsilon + rho * constant * inner ** (1.0 / n)
    detail["vol_diff_ball"] = (area_n - area_c) * rho**-n
    return HausdorffBoundResult(True, lhs, rhs, lhs <= rhs, detail)


# ---------------------------------------------------------------------------
# subharmonicity probes
# ---------------------------------------------------------------------------

def _chart_function(model, chart, which, index, beta_offset):
    k = model.axial_dim
    if which == "beta2":
        beta_terms = beta_of(chart.f).terms()

        def func(x, r, theta):
            return (beta_terms.eval(x, r, theta) + beta_offset) ** 2

    elif which == "y2":
        if not 1 <= index <= k:
            raise ValueError(f"axial index {index} out of range")

        def func(x, r, theta):
            pts = chart.points(x, r, theta)
            return np.imag(pts[:, index - 1]) ** 2

    elif which == "x2":
        if not 1 <= index <= k:
            raise ValueError(f"axial index {index} out of range")

        def func(x, r, theta):
            pts = chart.points(x, r, theta)
            return np.real(pts[:, index - 1]) ** 2

    else:
        raise ValueError(f"unknown selector {which!r}; use beta2, y2 or x2")
    return func


def laplace_beltrami_fd(chart: GraphChart, func, x, r, theta, step: float = 1e-3) -> np.ndarray:
    """Divergence-form finite-difference Laplace-Beltrami of a chart function on the graph."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    r = np.atleast_1d(np.asarray(r, dtype=float))
    theta = np.atleast_2d(np.asarray(theta, dtype=float))
    npts = r.shape[0]
    k, m = chart.k, chart.m
    dim = chart.n

    def unpack(u):
        return u[:, :k], u[:, k], u[:, k + 1 :]

    def metric(u):
        xx, rr, th = unpack(u)
        tan = chart.tangents(xx, rr, th)
        return np.real(np.einsum("nia,nja->nij", tan, tan.conj()))

    def fvals(u):
        xx, rr, th = unpack(u)
        return func(xx, rr, th)

    u0 = np.concatenate([x, r[:, None], theta], axis=1)
    steps = np.full(dim, step)

    def flux(u):
        g = metric(u)
        sqrtg = np.sqrt(np.maximum(np.linalg.det(g), 1e-300))
        ginv = np.linalg.inv(g)
        grad = np.empty((npts, dim))
        for j in range(dim):
            dj = np.zeros(dim)
            dj[j] = steps[j]
            grad[:, j] = (fvals(u + dj) - fvals(u - dj)) / (2 * steps[j])
        return sqrtg[:, None] * np.einsum("nij,nj->ni", ginv, grad)

    g0 = metric(u0)
    sqrtg0 = np.sqrt(np.maximum(np.linalg.det(g0), 1e-300))
    out = np.zeros(npts)
    for i in range(dim):
        di = np.zeros(dim)
        di[i] = steps[i]
        out += (flux(u0 + di)[:, i] - flux(u0 - di)[:, i]) / (2 * steps[i])
    return out / sqrtg0


def subharmonicity_check(model: CylinderModel, f: HarmonicExpansion, which: str,
                         index: int = 1, count: int = 30, seed: int = 0,
                         rho: float = 1.0, tau: float = 0.15, tol_scale: float = 1e-4,
                         beta_offset: float = 0.0):
    """Discrete Laplacian of beta^2, y_i^2 or x_i^2 on the graph at random points.

    Passes when every sampled Laplacian is >= -tol_scale * local scale, the
    local scale being the ambient radius of the sample.
    """
    from .geometry import DefectReport

    rng = np.random.default_rng(seed)
    k, m = model.axial_dim, model.m
    chart = GraphChart(model, f)
    # interior samples, away from both the cone edge and the ball boundary
    t = rng.uniform(0.3, 0.85, size=count)
    psi = rng.uniform(math.asin(min(1.0, max(tau, 0.1))), 0.5 * math.pi - 0.05, size=count)
    r = rho * t * np.sin(psi)
    s = rho * t * np.cos(psi)
    if k:
        dirs = rng.normal(size=(count, k))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        x = s[:, None] * dirs
    else:
        x = np.zeros((count, 0))
    theta = rng.uniform(0, 2 * math.pi, size=(count, m - 1))

    func = _chart_function(model, chart, which, index, beta_offset)
    lap = laplace_beltrami_fd(chart, func, x, r, theta)
    pts = chart.points(x, r, theta)
    scale = np.sqrt(np.sum(np.abs(pts) ** 2, axis=1))
    margin = lap + tol_scale * scale
    worst = float(np.min(margin))
    return DefectReport(
        what=f"subharmonic:{which}",
        max_defect=max(0.0, -worst),
        tol=0.0,
        samples=count,
        extras={"min_laplacian": float(np.min(lap)), "tol_scale": tol_scale},
    )


# ---------------------------------------------------------------------------
# graph property predicates
# ---------------------------------------------------------------------------

def small_graph_property(model: CylinderModel, f: HarmonicExpansion, eta: float, tau: float,
                         delta: float, rho: float = 1.0, beta_offset: float = 0.0,
                         spec: GridSpec | None = None) -> bool:
    """P1: sup(r^-1|df| + |D^2 f|) <= eta on B_2rho cap {r > 2 tau rho} and ||f|| <= delta."""
    spec = spec or GridSpec(n_radial=12, n_polar=12, n_theta=suggest_n_theta([f]), n_sphere=8)
    chart = GraphChart(model, f)
    grid = cylinder_ball_grid(model.axial_dim, model.m, rho=2 * rho, tau=tau, spec=spec)
    sup = float(np.max(chart.grad_norm(grid.x, grid.r, grid.theta) / grid.r
                       + chart.hessian_norm(grid.x, grid.r, grid.theta)))
    if sup > eta:
        return False
    norms = scale_invariant_norms(model, f, 2 * rho, tau, beta_offset=beta_offset)
    return norms.f_norm <= delta


def volume_property(model: CylinderModel, f: HarmonicExpansion, gamma: float,
                    rho: float = 1.0, pitch: float = 0.25,
                    spec: GridSpec | None = None) -> bool:
    """P2: H^n(N cap B_2rho(p)) <= H^n(model cap B_2rho(p)) + omega_n (1-gamma)^n rho^n
    for each axial grid point p in B_2rho, grid pitch pitch*rho."""
    spec = _default_spec(f, spec)
    k, m, n = model.axial_dim, model.m, model.ambient_dim
    chart = GraphChart(model, f)
    slack = quadrature.ball_volume(n) * (1.0 - gamma) ** n * rho**n
    axes = [np.arange(-2 * rho, 2 * rho + 1e-9, pitch * rho)] * k
    centers = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, k) if k else np.zeros((1, 0))
    centers = centers[np.linalg.norm(centers, axis=1) <= 2 * rho]
    for p in centers:
        grid = cylinder_ball_grid(k, m, rho=2 * rho, center=p, spec=spec)
        area_n = 0.0
        for sl in _chunks(grid.n_nodes):
            area_el = chart.area_elements(grid.x[sl], grid.r[sl], grid.theta[sl])
            area_n += float(np.dot(grid.param_weights[sl], area_el))
        area_c = float(grid.cone_weights.sum())
        if area_n > area_c + slack:
            return False
    return True


def harmonic_property(model: CylinderModel, f: HarmonicExpansion, delta: float,
                      rho: float = 1.0, beta_offset: float = 0.0,
                      spec: GridSpec | None = None) -> bool:
    """P3: ||beta, y|| over the graph ball B_4rho is at most delta."""
    norms = scale_invariant_norms(model, f, 4 * rho, 0.1, beta_offset=beta_offset, spec=spec)
    return norms.beta_norm + norms.y_norm <= delta
