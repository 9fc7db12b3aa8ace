"""Harmonic function algebra on cylinders R^k x Cone(T^(m-1)).

Separation of variables writes harmonic functions on the cone as r^gamma
phi(theta) with gamma(gamma + m - 2) equal to the link eigenvalue, and on the
cylinder as finite sums of modes

    coeff * h(x) * r^gamma * {cos|sin}(nu . theta)

where h is a harmonic polynomial in the axial variables.  This module holds
the mode/expansion containers, the exact derivations used throughout the
toolkit (the exactness primitive beta, the axial momenta y_i, the split by
homogeneity degree) and the scale-invariant L^2 norm over truncated cone
balls.

All operations act on immutable data and return fresh expansions; modes with
nonzero frequency are canonicalized so that the leading nonzero frequency
entry is positive (cos is even, sin flips sign).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .lattice import FormSpec, eigenvalue_of

DEGREE_TOL = 1e-9


@dataclass(frozen=True)
class GrowthExponent:
    """Nonnegative root gamma of gamma(gamma + dim_cone - 2) = eigenvalue."""

    eigenvalue: float
    dim_cone: int
    gamma: float


def growth_exponent(eigenvalue: float, dim_cone: int) -> GrowthExponent:
    """Homogeneity degree of the separated harmonic r^gamma phi on an m-dim cone.

    Exact at the landmark eigenvalues: 0 -> 0, m-1 -> 1, 2m -> 2 (the
    discriminants (m-2)^2 + 4*lam are then perfect squares).
    """
    if dim_cone < 3:
        raise ValueError(f"cone dimension must be >= 3, got {dim_cone}")
    if eigenvalue < 0:
        raise ValueError(f"eigenvalue must be >= 0, got {eigenvalue}")
    a = dim_cone - 2
    gamma = 0.5 * (-a + math.sqrt(a * a + 4.0 * eigenvalue))
    return GrowthExponent(eigenvalue=float(eigenvalue), dim_cone=dim_cone, gamma=gamma)


def link_volume(m: int) -> float:
    """Riemannian volume of the flat torus link: (2 pi)^(m-1) * sqrt(det G)."""
    return (2.0 * math.pi) ** (m - 1) * m ** (0.5 * (2 - m))


def link_eigenfunction_norm_sq(m: int, nu) -> float:
    """L^2(link) norm squared of the raw trig eigenfunction cos/sin(nu . theta)."""
    vol = link_volume(m)
    return vol if all(v == 0 for v in nu) else 0.5 * vol


def _poly_laplacian(h: dict, k: int) -> dict:
    out: dict = {}
    for mono, c in h.items():
        for i in range(k):
            e = mono[i]
            if e >= 2:
                key = tuple(v - 2 if j == i else v for j, v in enumerate(mono))
                out[key] = out.get(key, 0.0) + c * e * (e - 1)
    return {key: c for key, c in out.items() if c != 0.0}


def _clean_poly(h: dict, k: int) -> dict:
    clean = {}
    for mono, c in h.items():
        mono = tuple(int(e) for e in mono)
        if len(mono) != k:
            raise ValueError(f"monomial {mono} has {len(mono)} exponents, axial dim is {k}")
        if any(e < 0 for e in mono):
            raise ValueError(f"negative exponent in monomial {mono}")
        c = float(c)
        if c != 0.0:
            clean[mono] = clean.get(mono, 0.0) + c
    return clean


@dataclass(frozen=True)
class CylinderMode:
    """One separated mode coeff * h(x) * r^gamma(q(nu)) * trig(nu . theta).

    ``h`` maps axial monomial exponent tuples to coefficients and must be a
    harmonic polynomial.  ``p`` is the radial correction order; only p=0 is
    supported, which together with harmonic ``h`` makes the mode exactly
    harmonic on the cylinder.
    """

    nu: tuple
    parity: str
    h: dict
    coeff: float
    p: int = 0
    axial_dim: int = 1
    m: int = 3

    def __post_init__(self):
        if self.p != 0:
            raise ValueError("radial correction orders p > 0 are not supported")
        if self.parity not in ("cos", "sin"):
            raise ValueError(f"parity must be 'cos' or 'sin', got {self.parity!r}")
        nu = tuple(int(v) for v in self.nu)
        if len(nu) != self.m - 1:
            raise ValueError(f"frequency length {len(nu)} != m-1 = {self.m - 1}")
        coeff = float(self.coeff)
        parity = self.parity
        nz = next((v for v in nu if v != 0), 0)
        if nz == 0 and parity == "sin":
            raise ValueError("sin mode with zero frequency vanishes identically")
        if nz < 0:
            nu = tuple(-v for v in nu)
            if parity == "sin":
                coeff = -coeff
        h = _clean_poly(self.h, self.axial_dim)
        if _poly_laplacian(h, self.axial_dim):
            raise ValueError(f"axial polynomial {h} is not harmonic")
        object.__setattr__(self, "nu", nu)
        object.__setattr__(self, "parity", parity)
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "coeff", coeff)

    @property
    def eigenvalue(self) -> int:
        return eigenvalue_of(self.m, self.nu)

    @property
    def gamma(self) -> float:
        return growth_exponent(self.eigenvalue, self.m).gamma

    def degree(self) -> float:
        """Homogeneity degree deg(h) + 2p + gamma (deg(h) is the max monomial degree)."""
        if not self.h:
            return self.gamma
        return max(sum(mono) for mono in self.h) + 2 * self.p + self.gamma


@dataclass(frozen=True)
class Terms:
    """Flattened per-monomial view of an expansion, closed under differentiation."""

    k: int
    m: int
    coeff: np.ndarray
    expo: np.ndarray
    gamma: np.ndarray
    nu: np.ndarray
    parity: np.ndarray

    @property
    def size(self) -> int:
        return int(self.coeff.shape[0])

    def eval(self, x, r, theta) -> np.ndarray:
        return _kernels.eval_terms(x, r, theta, self.coeff, self.expo, self.gamma, self.nu, self.parity)

    def dx(self, i: int) -> "Terms":
        keep = self.expo[:, i] > 0
        expo = self.expo[keep].copy()
        coeff = self.coeff[keep] * expo[:, i]
        expo[:, i] -= 1
        return Terms(self.k, self.m, coeff, expo, self.gamma[keep], self.nu[keep], self.parity[keep])

    def dr(self) -> "Terms":
        keep = self.gamma != 0.0
        return Terms(
            self.k,
            self.m,
            self.coeff[keep] * self.gamma[keep],
            self.expo[keep],
            self.gamma[keep] - 1.0,
            self.nu[keep],
            self.parity[keep],
        )

    def dtheta(self, b: int) -> "Terms":
        keep = self.nu[:, b] != 0
        sign = np.where(self.parity[keep] == 0, -1.0, 1.0)
        return Terms(
            self.k,
            self.m,
            self.coeff[keep] * sign * self.nu[keep, b],
            self.expo[keep],
            self.gamma[keep],
            self.nu[keep],
            1 - self.parity[keep],
        )


def _empty_terms(k: int, m: int) -> Terms:
    return Terms(
        k,
        m,
        np.zeros(0),
        np.zeros((0, k), dtype=np.int64),
        np.zeros(0),
        np.zeros((0, m - 1), dtype=np.int64),
        np.zeros(0, dtype=np.int8),
    )


@dataclass(frozen=True)
class HarmonicExpansion:
    """Finite sum of cylinder modes over a fixed link and axial dimension."""

    axial_dim: int
    link: FormSpec
    modes: tuple = field(default_factory=tuple)

    def __post_init__(self):
        modes = []
        for mode in self.modes:
            if mode.axial_dim != self.axial_dim or mode.m != self.link.m:
                raise ValueError("mode dimensions do not match the expansion")
            if mode.coeff != 0.0 and mode.h:
                modes.append(mode)
        object.__setattr__(self, "modes", tuple(modes))

    @property
    def m(self) -> int:
        return self.link.m

    def mode(self, nu, parity="cos", h=None, coeff=1.0) -> "HarmonicExpansion":
        """Return a copy with one more mode appended."""
        if h is None:
            h = {(0,) * self.axial_dim: 1.0}
        new = CylinderMode(nu=tuple(nu), parity=parity, h=h, coeff=coeff, axial_dim=self.axial_dim, m=self.m)
        return HarmonicExpansion(self.axial_dim, self.link, self.modes + (new,))

    def __add__(self, other: "HarmonicExpansion") -> "HarmonicExpansion":
        if other.axial_dim != self.axial_dim or other.m != self.m:
            raise ValueError("expansions live on different cylinders")
        return HarmonicExpansion(self.axial_dim, self.link, self.modes + other.modes)

    def scaled(self, factor: float) -> "HarmonicExpansion":
        return HarmonicExpansion(
            self.axial_dim,
            self.link,
            tuple(
                CylinderMode(m.nu, m.parity, m.h, m.coeff * factor, m.p, m.axial_dim, m.m)
                for m in self.modes
            ),
        )

    def plus_constant(self, c: float) -> "HarmonicExpansion":
        if c == 0.0:
            return self
        return self.mode(nu=(0,) * (self.m - 1), parity="cos", h={(0,) * self.axial_dim: 1.0}, coeff=c)

    def constant_part(self) -> float:
        tot = 0.0
        for mode in self.modes:
            if any(mode.nu):
                continue
            tot += mode.coeff * mode.h.get((0,) * self.axial_dim, 0.0)
        return tot

    # -- canonical coefficient view -------------------------------------------------

    def canonical(self) -> dict:
        """Aggregate coefficients keyed by (nu, parity, monomial); drops exact zeros."""
        out: dict = {}
        for mode in self.modes:
            for mono, c in mode.h.items():
                key = (mode.nu, mode.parity, mono)
                out[key] = out.get(key, 0.0) + mode.coeff * c
        return {key: c for key, c in out.items() if c != 0.0}

    def terms(self) -> Terms:
        can = self.canonical()
        if not can:
            return _empty_terms(self.axial_dim, self.m)
        coeff = np.array([c for c in can.values()])
        expo = np.array([key[2] for key in can], dtype=np.int64).reshape(len(can), self.axial_dim)
        nu = np.array([key[0] for key in can], dtype=np.int64).reshape(len(can), self.m - 1)
        parity = np.array([0 if key[1] == "cos" else 1 for key in can], dtype=np.int8)
        gamma = np.array([growth_exponent(eigenvalue_of(self.m, key[0]), self.m).gamma for key in can])
        return Terms(self.axial_dim, self.m, coeff, expo, gamma, nu, parity)

    def degrees(self) -> list:
        """Distinct per-monomial homogeneity degrees present in the expansion."""
        degs = set()
        for (nu, _parity, mono) in self.canonical():
            gamma = growth_exponent(eigenvalue_of(self.m, nu), self.m).gamma
            degs.add(sum(mono) + gamma)
        return sorted(degs)

    # -- serialization ---------------------------------------------------------------

    def to_jsonable(self) -> dict:
        return {
            "axial_dim": self.axial_dim,
            "m": self.m,
            "modes": [
                {
                    "nu": list(mode.nu),
                    "parity": mode.parity,
                    "h": {",".join(str(e) for e in mono): c for mono, c in sorted(mode.h.items())},
                    "p": mode.p,
                    "coeff": mode.coeff,
                }
                for mode in self.modes
            ],
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_jsonable(), **kwargs)

    @staticmethod
    def from_jsonable(data: dict) -> "HarmonicExpansion":
        k = int(data["axial_dim"])
        m = int(data["m"])
        modes = []
        for md in data["modes"]:
            h = {}
            for key, c in md["h"].items():
                mono = tuple(int(e) for e in key.split(",")) if key else ()
                h[mono] = float(c)
            modes.append(
                CylinderMode(
                    nu=tuple(md["nu"]),
                    parity=md["parity"],
                    h=h,
                    coeff=float(md["coeff"]),
                    p=int(md.get("p", 0)),
                    axial_dim=k,
                    m=m,
                )
            )
        return HarmonicExpansion(k, FormSpec(m), tuple(modes))

    @staticmethod
    def from_json(text: str) -> "HarmonicExpansion":
        return HarmonicExpansion.from_jsonable(json.loads(text))


def expansion(k: int, m: int, modes=()) -> HarmonicExpansion:
    return HarmonicExpansion(k, FormSpec(m), tuple(modes))


def mode_degree(mode: CylinderMode, link: FormSpec) -> float:
    """Homogeneity degree of a mode as a function on the cylinder."""
    if mode.m != link.m:
        raise ValueError("mode link does not match")
    return mode.degree()


def evaluate(f: HarmonicExpansion, point) -> float:
    """Evaluate at a cylinder point (x, r, theta); the cone is singular at r=0."""
    x, r, theta = point
    x = np.atleast_1d(np.asarray(x, dtype=float))
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    if float(r) <= 0.0:
        raise ValueError(f"cone radius must be positive, got r={r}")
    if x.shape != (f.axial_dim,) or theta.shape != (f.m - 1,):
        raise ValueError("point has wrong dimensions for this cylinder")
    return float(f.terms().eval(x.reshape(1, -1), np.array([float(r)]), theta.reshape(1, -1))[0])


def _monomials_by_degree(h: dict) -> dict:
    by_deg: dict = {}
    for mono, c in h.items():
        by_deg.setdefault(sum(mono), {})[mono] = c
    return by_deg


def beta_of(f: HarmonicExpansion) -> HarmonicExpansion:
    """Exactness primitive beta = -1/2 R^3 d/dR (f / R^2), computed mode-wise.

    A homogeneous degree-d piece maps to -(d-2)/2 times itself; in particular
    degree-2 pieces are annihilated exactly and constants are fixed.
    """
    out = []
    for mode in f.modes:
        gamma = mode.gamma
        for deg, part in _monomials_by_degree(mode.h).items():
            factor = -0.5 * (deg + gamma - 2.0)
            if factor != 0.0:
                out.append(
                    CylinderMode(mode.nu, mode.parity, part, mode.coeff * factor, 0, f.axial_dim, f.m)
                )
    return HarmonicExpansion(f.axial_dim, f.link, tuple(out))


def y_of(f: HarmonicExpansion, i: int) -> HarmonicExpansion:
    """Axial momentum y_i = -df/dx_i with exact polynomial differentiation."""
    if not 1 <= i <= f.axial_dim:
        raise ValueError(f"axial index {i} out of range 1..{f.axial_dim}")
    j = i - 1
    out = []
    for mode in f.modes:
        dh: dict = {}
        for mono, c in mode.h.items():
            e = mono[j]
            if e:
                key = tuple(v - 1 if t == j else v for t, v in enumerate(mono))
                dh[key] = dh.get(key, 0.0) + c * e
        if dh:
            out.append(CylinderMode(mode.nu, mode.parity, dh, -mode.coeff, 0, f.axial_dim, f.m))
    return HarmonicExpansion(f.axial_dim, f.link, tuple(out))


@dataclass(frozen=True)
class DegreeSplit:
    """Partition of an expansion by homogeneity degree: (0,2), exactly 2, > 2, constant."""

    low: HarmonicExpansion
    quad: HarmonicExpansion
    high: HarmonicExpansion
    constant: float

    def recompose(self) -> HarmonicExpansion:
        return (self.low + self.quad + self.high).plus_constant(self.constant)


def degree_split(f: HarmonicExpansion) -> DegreeSplit:
    """Split mode-by-mode (per homogeneous monomial block) with exact coefficients."""
    low, quad, high = [], [], []
    constant = 0.0
    for mode in f.modes:
        gamma = mode.gamma
        for deg, part in _monomials_by_degree(mode.h).items():
            d = deg + gamma
            piece = CylinderMode(mode.nu, mode.parity, part, mode.coeff, 0, f.axial_dim, f.m)
            if abs(d) <= DEGREE_TOL:
                constant += mode.coeff * part.get((0,) * f.axial_dim, 0.0)
            elif abs(d - 2.0) <= DEGREE_TOL:
                quad.append(piece)
            elif d < 2.0:
                low.append(piece)
            else:
                high.append(piece)
    mk = lambda lst: HarmonicExpansion(f.axial_dim, f.link, tuple(lst))
    return DegreeSplit(low=mk(low), quad=mk(quad), high=mk(high), constant=constant)


class QuadratureAccuracyError(RuntimeError):
    """Grid refinement failed to reach the requested relative accuracy."""

    def __init__(self, value: float, estimate: float, rtol: float):
        super().__init__(
            f"quadrature error estimate {estimate:.3e} exceeds rtol {rtol:.1e} "
            f"(achieved value {value:.17g})"
        )
        self.value = value
        self.estimate = estimate


def scale_norm(f: HarmonicExpansion, rho: float, tau: float, grid=None, rtol=None) -> float:
    """Scale-invariant squared L^2 norm rho^(-n-4) * int_{cone ball, r > tau*rho} f^2.

    n = axial_dim + m is the cylinder dimension.  The quadrature grid scales
    linearly with rho, so for a single homogeneous degree-d mode the value
    transforms exactly as rho^(2d-4).  With ``rtol`` set, the value is
    cross-checked on a coarsened grid and QuadratureAccuracyError is raised
    (carrying the achieved value) when the two disagree beyond the tolerance.
    """
    from . import quadrature

    if not 0.0 < tau < 1.0:
        raise ValueError(f"need 0 < tau < 1, got {tau}")
    if rho <= 0.0:
        raise ValueError(f"need rho > 0, got {rho}")
    spec = None
    if grid is None:
        spec = quadrature.GridSpec(n_theta=quadrature.suggest_n_theta([f]))
        grid = quadrature.cylinder_ball_grid(f.axial_dim, f.m, rho=rho, tau=tau, spec=spec)
    n = f.axial_dim + f.m
    vals = f.terms().eval(grid.x, grid.r, grid.theta)
    out = float(rho ** (-n - 4) * np.dot(grid.cone_weights, vals * vals))
    if rtol is not None and spec is not None and out != 0.0:
        coarse_grid = quadrature.cylinder_ball_grid(
            f.axial_dim, f.m, rho=rho, tau=tau, spec=spec.coarsened()
        )
        cvals = f.terms().eval(coarse_grid.x, coarse_grid.r, coarse_grid.theta)
        coarse = float(rho ** (-n - 4) * np.dot(coarse_grid.cone_weights, cvals * cvals))
        est = abs(out - coarse)
        if est > rtol * abs(out):
            raise QuadratureAccuracyError(out, est, rtol)
    return out


def cylinder_laplacian_fd(f: HarmonicExpansion, x, r, theta, step=1e-4) -> np.ndarray:
    """Finite-difference cylinder Laplacian of an expansion at given points.

    Uses the flat axial part, the radial cone part d_rr + (m-1)/r d_r, and the
    angular part (1/r^2) G^{ab} d_ab with the inverse flat link metric
    G^{ab} = m delta_ab - 1.  Central differences, mixed stencils for a != b.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    r = np.atleast_1d(np.asarray(r, dtype=float))
    theta = np.atleast_2d(np.asarray(theta, dtype=float))
    t = f.terms()
    m = f.m
    k = f.axial_dim

    def ev(xx, rr, tt):
        return t.eval(xx, rr, tt)

    base = ev(x, r, theta)
    out = np.zeros_like(base)
    h = step
    for i in range(k):
        dx = np.zeros_like(x)
        dx[:, i] = h
        out += (ev(x + dx, r, theta) - 2 * base + ev(x - dx, r, theta)) / h**2
    out += (ev(x, r + h, theta) - 2 * base + ev(x, r - h, theta)) / h**2
    out += (m - 1) / r * (ev(x, r + h, theta) - ev(x, r - h, theta)) / (2 * h)
    for a in range(m - 1):
        for b in range(m - 1):
            g_ab = m * (1 if a == b else 0) - 1
            if a == b:
                da = np.zeros_like(theta)
                da[:, a] = h
                second = (ev(x, r, theta + da) - 2 * base + ev(x, r, theta - da)) / h**2
            else:
                da = np.zeros_like(theta)
                db = np.zeros_like(theta)
                da[:, a] = h
                db[:, b] = h
                second = (
                    ev(x, r, theta + da + db)
                    - ev(x, r, theta + da - db)
                    - ev(x, r, theta - da + db)
                    + ev(x, r, theta - da - db)
                ) / (4 * h**2)
            out += g_ab * second / r**2
    return out
