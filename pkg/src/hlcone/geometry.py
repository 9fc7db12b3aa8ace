"""Embedded geometry of Harvey-Lawson cylinders in C^n.

The model is R^k x Cone(T^(m-1)) inside C^k x C^m, with the flat torus link

    z_j = e^(i theta_j) / sqrt(m),   Arg(i^(m+1) z_1 ... z_m) = 0,

so the last angle is eliminated: theta_m = phase - sum(theta_a) with
phase = -(m+1) pi / 2.  Conventions, fixed once here and used everywhere:

* omega(v, w) = -Im <v, w> with the hermitian product <v, w> = sum v conj(w);
  the Liouville form is lambda_p(v) = omega(p, v) and d(lambda) = 2 omega.
* Moment hamiltonians satisfy dh = omega(X, .) exactly (checked by finite
  differences in the tests), h(0) = 0.
* First-order graphs move by base + (-i) grad(f).  The -i (rather than +i)
  is pinned by two contracts: an axial-only potential must produce
  y_j = -df/dx_j, and the graph of a small moment hamiltonian h_a must track
  the rotation flow exp(+epsilon a).  Both fail with the opposite sign.

Holomorphic volume form: Omega = dz_1 ^ ... ^ dz_n times a phase calibrated
numerically once per (k, m) so that Omega is real on the unrotated model.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .harmonics import CylinderMode, HarmonicExpansion
from .lattice import FormSpec, rigidity_report

_UNITARY_TOL = 1e-12


def hl_phase(m: int) -> float:
    """The constant value of sum(theta_j) on the link: -(m+1) pi / 2 mod 2 pi."""
    return float((-(m + 1) * math.pi / 2.0) % (2.0 * math.pi))


@dataclass(frozen=True)
class HLLink:
    """Harvey-Lawson torus link T^(m-1) in S^(2m-1)."""

    m: int

    def __post_init__(self):
        FormSpec(self.m)  # validates the range of m

    @property
    def phase(self) -> float:
        return hl_phase(self.m)


@dataclass(frozen=True)
class RotationGenerator:
    """Skew-hermitian traceless generator of an ambient su(n) rotation."""

    a: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.a, dtype=complex)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError("generator must be a square matrix")
        scale = max(1.0, float(np.linalg.norm(a)))
        if np.max(np.abs(a + a.conj().T)) > 1e-10 * scale:
            raise ValueError("generator is not skew-hermitian")
        if abs(np.trace(a)) > 1e-10 * scale:
            raise ValueError("generator is not traceless")
        object.__setattr__(self, "a", a)

    @property
    def n(self) -> int:
        return self.a.shape[0]

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.a))

    def to_jsonable(self) -> dict:
        return {"re": self.a.real.tolist(), "im": self.a.imag.tolist()}

    @staticmethod
    def from_jsonable(data: dict) -> "RotationGenerator":
        return RotationGenerator(np.array(data["re"], dtype=float) + 1j * np.array(data["im"], dtype=float))


def _project_special_unitary(u: np.ndarray) -> np.ndarray:
    w, _s, vh = np.linalg.svd(u)
    out = w @ vh
    det = np.linalg.det(out)
    return out * np.exp(-1j * np.angle(det) / out.shape[0])


@dataclass(frozen=True)
class CylinderModel:
    """Axial dimension k, HL link, and an applied special-unitary rotation."""

    axial_dim: int
    link: HLLink
    rotation: np.ndarray = None

    def __post_init__(self):
        if self.axial_dim < 0:
            raise ValueError("axial dimension must be >= 0")
        n = self.ambient_dim
        u = np.eye(n, dtype=complex) if self.rotation is None else np.asarray(self.rotation, dtype=complex)
        if u.shape != (n, n):
            raise ValueError(f"rotation must be {n}x{n}")
        if np.max(np.abs(u.conj().T @ u - np.eye(n))) > _UNITARY_TOL or abs(np.linalg.det(u) - 1.0) > 1e-10:
            raise ValueError("rotation is not special unitary")
        object.__setattr__(self, "rotation", u)

    @property
    def m(self) -> int:
        return self.link.m

    @property
    def ambient_dim(self) -> int:
        return self.axial_dim + self.link.m


def cylinder_model(k: int, m: int, rotation=None) -> CylinderModel:
    return CylinderModel(axial_dim=k, link=HLLink(m), rotation=rotation)


@dataclass(frozen=True)
class TangentFrame:
    """A base point with n tangent vectors (rows), Gram matrix nonsingular."""

    base: np.ndarray
    vectors: np.ndarray

    def __post_init__(self):
        base = np.asarray(self.base, dtype=complex)
        vecs = np.asarray(self.vectors, dtype=complex)
        n = base.shape[0]
        if vecs.shape != (n, n):
            raise ValueError("need n tangent vectors in C^n")
        gram = np.real(vecs @ vecs.conj().T)
        if np.linalg.det(gram) <= 1e-300:
            raise ValueError("degenerate tangent frame")
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "vectors", vecs)


# ---------------------------------------------------------------------------
# link embedding
# ---------------------------------------------------------------------------

def link_angles(link: HLLink, theta) -> np.ndarray:
    """Full angle vector (theta_1..theta_m) with the phase-constrained last entry."""
    theta = np.atleast_2d(np.asarray(theta, dtype=float))
    last = link.phase - theta.sum(axis=1, keepdims=True)
    return np.concatenate([theta, last], axis=1)


def link_point(link: HLLink, theta) -> np.ndarray:
    """Unit-radius link point(s) in C^m for free angles theta in R^(m-1)."""
    ang = link_angles(link, theta)
    pts = np.exp(1j * ang) / math.sqrt(link.m)
    return pts[0] if np.asarray(theta).ndim == 1 else pts


def link_tangents(link: HLLink, theta) -> np.ndarray:
    """d(link_point)/d(theta_a): shape (N, m-1, m)."""
    pts = np.atleast_2d(link_point(link, theta))
    m = link.m
    sel = np.zeros((m - 1, m))
    sel[:, :-1] = np.eye(m - 1)
    sel[:, -1] = -1.0
    return 1j * sel[None, :, :] * pts[:, None, :]


def induced_metric(link: HLLink) -> np.ndarray:
    """Flat link metric G_ab = (1/m)(delta_ab + 1), constant in theta."""
    m = link.m
    return (np.eye(m - 1) + np.ones((m - 1, m - 1))) / m


def inverse_link_metric(m: int) -> np.ndarray:
    return m * np.eye(m - 1) - np.ones((m - 1, m - 1))


# ---------------------------------------------------------------------------
# symplectic/complex structure helpers
# ---------------------------------------------------------------------------

def symplectic_form(v, w) -> np.ndarray:
    """omega(v, w) = -Im <v, w>, batched over leading axes."""
    v = np.asarray(v, dtype=complex)
    w = np.asarray(w, dtype=complex)
    return -np.imag(np.sum(v * w.conj(), axis=-1))


def liouville(p, v) -> np.ndarray:
    """Liouville one-form at p applied to v: omega(p, v)."""
    return symplectic_form(p, v)


@dataclass(frozen=True)
class DefectReport:
    """Maximum defects of a pointwise identity over a sample batch."""

    what: str
    max_defect: float
    tol: float
    samples: int
    extras: dict = None

    @property
    def passed(self) -> bool:
        return self.max_defect <= self.tol

    def to_jsonable(self) -> dict:
        out = {
            "what": self.what,
            "max_defect": self.max_defect,
            "tol": self.tol,
            "samples": self.samples,
            "passed": self.passed,
        }
        if self.extras:
            out.update(self.extras)
        return out


def check_legendrian(link: HLLink, theta, tol: float = 1e-12, points=None, tangents=None) -> DefectReport:
    """Evaluate the contact form lambda/(2 r^2) on link tangents; zero iff Legendrian.

    ``points``/``tangents`` may override the analytic embedding (used to feed
    in deliberately non-Legendrian perturbations).
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    theta = np.atleast_2d(np.asarray(theta, dtype=float))
    pts = np.atleast_2d(link_point(link, theta)) if points is None else np.atleast_2d(points)
    tans = link_tangents(link, theta) if tangents is None else np.asarray(tangents)
    r2 = np.sum(np.abs(pts) ** 2, axis=-1, keepdims=True)
    eta = liouville(pts[:, None, :], tans) / (2.0 * r2)
    return DefectReport("legendrian", float(np.max(np.abs(eta))), tol, pts.shape[0])


# ---------------------------------------------------------------------------
# cylinder charts, frames, calibration
# ---------------------------------------------------------------------------

def cylinder_point(model: CylinderModel, x, r, theta) -> np.ndarray:
    """Ambient position(s) of chart coordinates (x, r, theta) on the model."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    r = np.atleast_1d(np.asarray(r, dtype=float))
    theta = np.atleast_2d(np.asarray(theta, dtype=float))
    cone = r[:, None] * link_point(model.link, theta)
    pts = np.concatenate([x.astype(complex), cone], axis=1)
    return pts @ model.rotation.T


def model_frame(model: CylinderModel, x, r, theta) -> TangentFrame:
    """Analytic tangent frame (axial, radial, angular) at one model point."""
    k, m = model.axial_dim, model.m
    x = np.asarray(x, dtype=float).reshape(k)
    theta = np.asarray(theta, dtype=float).reshape(m - 1)
    if r <= 0:
        raise ValueError("chart requires r > 0")
    phi = link_point(model.link, theta)
    dphi = link_tangents(model.link, theta)[0]
    n = model.ambient_dim
    vecs = np.zeros((n, n), dtype=complex)
    for i in range(k):
        vecs[i, i] = 1.0
    vecs[k, k:] = phi
    for a in range(m - 1):
        vecs[k + 1 + a, k:] = r * dphi[a]
    base = cylinder_point(model, x[None, :], np.array([r]), theta[None, :])[0]
    vecs = vecs @ model.rotation.T
    return TangentFrame(base=base, vectors=vecs)


_PHASE_CACHE: dict = {}


def holomorphic_phase(k: int, m: int) -> float:
    """Phase e^(i phi) making Omega real on the unrotated model, frozen per (k, m)."""
    key = (k, m)
    if key not in _PHASE_CACHE:
        model = cylinder_model(k, m)
        frame = model_frame(model, np.zeros(k), 1.0, np.zeros(m - 1))
        det = np.linalg.det(frame.vectors.T)
        _PHASE_CACHE[key] = float(-np.angle(det))
    return _PHASE_CACHE[key]


def frame_volume(frame: TangentFrame) -> float:
    gram = np.real(frame.vectors @ frame.vectors.conj().T)
    return float(math.sqrt(max(np.linalg.det(gram), 0.0)))


def check_special_lagrangian(model: CylinderModel, frame: TangentFrame, tol: float = 1e-10) -> DefectReport:
    """Max |omega(v_i, v_j)| and |Im Omega(v_1..v_n)| / vol over one frame."""
    vecs = frame.vectors
    n = vecs.shape[0]
    omega = symplectic_form(vecs[:, None, :], vecs[None, :, :])
    omega_defect = float(np.max(np.abs(omega)))
    phase = holomorphic_phase(model.axial_dim, model.m)
    det = np.linalg.det(vecs.T) * np.exp(1j * phase)
    vol = frame_volume(frame)
    im_defect = float(abs(det.imag) / vol)
    return DefectReport(
        "special_lagrangian",
        max(omega_defect, im_defect),
        tol,
        1,
        extras={"max_omega_defect": omega_defect, "max_imOmega_defect": im_defect},
    )


# ---------------------------------------------------------------------------
# moment hamiltonians
# ---------------------------------------------------------------------------

def moment_hamiltonian(generator, z) -> np.ndarray:
    """Hamiltonian of the flow z -> az (rotation) or z -> z + tv (translation).

    Fixed by dh = omega(X, .) and h(0) = 0:
        rotation a:    h(z) = -1/2 Im <a z, z> = -1/2 Im(z^dagger a z)
        translation v: h(z) = omega(v, z)
    """
    z = np.asarray(z, dtype=complex)
    single = z.ndim == 1
    zz = np.atleast_2d(z)
    if isinstance(generator, RotationGenerator):
        a = generator.a
    else:
        a = np.asarray(generator, dtype=complex)
    if a.ndim == 1:
        vals = symplectic_form(a[None, :], zz)
    else:
        a = RotationGenerator(a).a  # validates skew-hermitian traceless
        az = zz @ a.T
        vals = -0.5 * np.imag(np.sum(zz.conj() * az, axis=1))
    return float(vals[0]) if single else vals


def su_basis(n: int) -> list:
    """Real basis of su(n): antisymmetric, i*symmetric off-diagonal, i*diagonal traceless."""
    out = []
    for j in range(n):
        for l in range(j + 1, n):
            e = np.zeros((n, n), dtype=complex)
            e[j, l] = 1.0
            e[l, j] = -1.0
            out.append(e)
            e = np.zeros((n, n), dtype=complex)
            e[j, l] = 1j
            e[l, j] = 1j
            out.append(e)
    for j in range(n - 1):
        e = np.zeros((n, n), dtype=complex)
        e[j, j] = 1j
        e[j + 1, j + 1] = -1j
        out.append(e)
    return out


def cone_samples(m: int, count: int, seed: int = 0, r_range=(0.5, 1.5)) -> np.ndarray:
    """Random points on the unrotated cone factor in C^m."""
    rng = np.random.default_rng(seed)
    theta = rng.uniform(0.0, 2.0 * math.pi, size=(count, m - 1))
    r = rng.uniform(*r_range, size=count)
    return r[:, None] * link_point(HLLink(m), theta)


def su_harmonics_rank(model: CylinderModel, sample_count: int, seed: int = 0, rel_tol: float = 1e-8) -> int:
    """Numerical rank of the su(m) moment hamiltonians restricted to the cone.

    The diagonal torus stabilizing the cone contributes m-1 null directions,
    so the expected rank is m^2 - m.
    """
    m = model.m
    basis = su_basis(m)
    if sample_count < len(basis):
        raise ValueError(f"need at least dim su(m) = {len(basis)} samples, got {sample_count}")
    z = cone_samples(m, sample_count, seed=seed)
    rows = np.stack([moment_hamiltonian(a, z) for a in basis])
    sing = np.linalg.svd(rows, compute_uv=False)
    return int(np.sum(sing > rel_tol * sing[0]))


def rotate_model(model: CylinderModel, gen: RotationGenerator, t: float = 1.0) -> CylinderModel:
    """Compose exp(t * a) onto the stored rotation (exact unitary via eigendecomposition)."""
    h = 1j * gen.a  # hermitian
    vals, vecs = np.linalg.eigh(h)
    u = (vecs * np.exp(-1j * t * vals)) @ vecs.conj().T
    new = u @ model.rotation
    if np.max(np.abs(new.conj().T @ new - np.eye(new.shape[0]))) > _UNITARY_TOL:
        new = _project_special_unitary(new)
    det = np.linalg.det(new)
    if abs(det - 1.0) > _UNITARY_TOL:
        new = new * np.exp(-1j * np.angle(det) / new.shape[0])
    return CylinderModel(model.axial_dim, model.link, new)


# ---------------------------------------------------------------------------
# first-order graphs over the model
# ---------------------------------------------------------------------------

class GraphChart:
    """Analytic chart u = (x, r, theta) -> model + (-i) grad f, with tangents.

    All derivatives of the potential are exact term-array manipulations, so
    tangent vectors, area elements and pullback defects carry no finite
    difference noise.  Chart coordinate order: x_1..x_k, r, theta_1..theta_(m-1).
    """

    def __init__(self, model: CylinderModel, f: HarmonicExpansion):
        if f.axial_dim != model.axial_dim or f.m != model.m:
            raise ValueError("potential does not live on this model")
        self.model = model
        self.f = f
        self.k = model.axial_dim
        self.m = model.m
        self.n = model.ambient_dim
        t = f.terms()
        self._t = t
        self._dx = [t.dx(i) for i in range(self.k)]
        self._dr = t.dr()
        self._dth = [t.dtheta(b) for b in range(self.m - 1)]
        self._d2 = {}
        firsts = self._dx + [self._dr] + self._dth
        for i, ti in enumerate(firsts):
            row = []
            for j in range(self.n):
                if j < self.k:
                    row.append(ti.dx(j))
                elif j == self.k:
                    row.append(ti.dr())
                else:
                    row.append(ti.dtheta(j - self.k - 1))
            self._d2[i] = row
        self._ginv = inverse_link_metric(self.m)

    def _coerce(self, x, r, theta):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        r = np.atleast_1d(np.asarray(r, dtype=float))
        theta = np.atleast_2d(np.asarray(theta, dtype=float))
        if np.any(r <= 0.0):
            raise ValueError("chart region requires r > 0")
        return x, r, theta

    def first_partials(self, x, r, theta):
        """(fx (N,k), fr (N,), fth (N,m-1))."""
        x, r, theta = self._coerce(x, r, theta)
        fx = np.stack([d.eval(x, r, theta) for d in self._dx], axis=1) if self.k else np.zeros((r.shape[0], 0))
        fr = self._dr.eval(x, r, theta)
        fth = np.stack([d.eval(x, r, theta) for d in self._dth], axis=1)
        return fx, fr, fth

    def grad_norm(self, x, r, theta) -> np.ndarray:
        """Riemannian |grad f| on the cylinder."""
        x, r, theta = self._coerce(x, r, theta)
        fx, fr, fth = self.first_partials(x, r, theta)
        ang = np.einsum("nb,ab,na->n", fth, self._ginv, fth)
        return np.sqrt(np.sum(fx**2, axis=1) + fr**2 + ang / r**2)

    def regime_sup(self, x, r, theta) -> float:
        """sup of r^(-1) |grad f| over the given nodes (graph-regime gauge)."""
        x, r, theta = self._coerce(x, r, theta)
        return float(np.max(self.grad_norm(x, r, theta) / r))

    def hessian_norm(self, x, r, theta) -> np.ndarray:
        """Frobenius norm of the covariant Hessian of f on the cylinder."""
        x, r, theta = self._coerce(x, r, theta)
        npts = r.shape[0]
        k, m = self.k, self.m
        fr = self._dr.eval(x, r, theta)
        fth = np.stack([d.eval(x, r, theta) for d in self._dth], axis=1)
        h2 = np.empty((npts, self.n, self.n))
        for i in range(self.n):
            for j in range(i, self.n):
                h2[:, i, j] = h2[:, j, i] = self._d2[i][j].eval(x, r, theta)
        # covariant corrections on the cone block: coords (r, theta)
        g = induced_metric(self.model.link)
        for a in range(m - 1):
            h2[:, k, k + 1 + a] -= fth[:, a] / r
            h2[:, k + 1 + a, k] = h2[:, k, k + 1 + a]
            for b in range(m - 1):
                h2[:, k + 1 + a, k + 1 + b] += r * g[a, b] * fr
        # raise indices: diag(1_k, 1, G^{ab}/r^2)
        ginv = np.zeros((npts, self.n, self.n))
        ginv[:, :k, :k] = np.eye(k)
        ginv[:, k, k] = 1.0
        ginv[:, k + 1 :, k + 1 :] = self._ginv[None, :, :] / (r**2)[:, None, None]
        hu = np.einsum("nip,npq,nqj->nij", ginv, h2, ginv)
        return np.sqrt(np.einsum("nij,nij->n", hu, h2))

    def displacement(self, x, r, theta) -> np.ndarray:
        """Ambient displacement (-i) grad f in the unrotated model frame: (N, n) complex."""
        x, r, theta = self._coerce(x, r, theta)
        fx, fr, fth = self.first_partials(x, r, theta)
        phi = link_point(self.model.link, theta)
        c = fth @ self._ginv.T  # c_j for j < m
        c_full = np.concatenate([c, -np.sum(fth, axis=1, keepdims=True)], axis=1)
        cone = phi * (c_full / r[:, None] - 1j * fr[:, None])
        axial = -1j * fx
        return np.concatenate([axial.astype(complex), cone], axis=1)

    def points(self, x, r, theta) -> np.ndarray:
        """Ambient graph points (rotated): (N, n) complex."""
        x, r, theta = self._coerce(x, r, theta)
        base = np.concatenate(
            [x.astype(complex), r[:, None] * link_point(self.model.link, theta)], axis=1
        )
        return (base + self.displacement(x, r, theta)) @ self.model.rotation.T

    def tangents(self, x, r, theta) -> np.ndarray:
        """Chart tangent vectors of the graph (rotated): (N, n, n) complex.

        Row j is d(graph point)/d(u_j) for u = (x_1..x_k, r, theta_1..theta_(m-1)).
        """
        x, r, theta = self._coerce(x, r, theta)
        npts = r.shape[0]
        k, m, n = self.k, self.m, self.n
        fr = self._dr.eval(x, r, theta)
        fth = np.stack([d.eval(x, r, theta) for d in self._dth], axis=1)
        h2 = {i: {} for i in range(n)}
        for i in range(n):
            for j in range(n):
                lo, hi = min(i, j), max(i, j)
                h2[i][j] = self._d2[lo][hi]
        phi = link_point(self.model.link, theta)
        m_sel = np.zeros((m - 1, m))
        m_sel[:, :-1] = np.eye(m - 1)
        m_sel[:, -1] = -1.0  # d(theta_j^full)/d(theta_a)

        c = fth @ self._ginv.T
        c_full = np.concatenate([c, -np.sum(fth, axis=1, keepdims=True)], axis=1)
        s_mult = r[:, None] + c_full / r[:, None] - 1j * fr[:, None]

        def dc_full(idx):
            # derivative of c_full w.r.t. chart coordinate idx
            dth_second = np.stack(
                [h2[k + 1 + b][idx].eval(x, r, theta) for b in range(m - 1)], axis=1
            )
            dc = dth_second @ self._ginv.T
            return np.concatenate([dc, -np.sum(dth_second, axis=1, keepdims=True)], axis=1)

        tan = np.zeros((npts, n, n), dtype=complex)
        for j in range(n):
            frj = h2[k][j].eval(x, r, theta)
            dS = dc_full(j) / r[:, None] - 1j * frj[:, None]
            if j == k:  # radial coordinate
                dS += 1.0 - c_full / (r**2)[:, None]
            cone = phi * dS
            if j > k:  # angular coordinate theta_a
                a = j - k - 1
                cone += 1j * m_sel[a][None, :] * phi * s_mult
            tan[:, j, k:] = cone
            for i in range(k):
                tan[:, j, i] = (1.0 if i == j else 0.0) - 1j * h2[i][j].eval(x, r, theta)
        return tan @ self.model.rotation.T

    def area_elements(self, x, r, theta) -> np.ndarray:
        """sqrt(det Gram) of the chart tangents; reduces to r^(m-1) sqrt(det G) at f = 0."""
        tan = self.tangents(x, r, theta)
        gram = np.real(np.einsum("nia,nja->nij", tan, tan.conj()))
        return np.sqrt(np.maximum(np.linalg.det(gram), 0.0))

    def frame_at(self, x, r, theta) -> TangentFrame:
        x = np.asarray(x, dtype=float).reshape(1, self.k)
        theta = np.asarray(theta, dtype=float).reshape(1, self.m - 1)
        pts = self.points(x, np.array([float(r)]), theta)
        tan = self.tangents(x, np.array([float(r)]), theta)
        return TangentFrame(base=pts[0], vectors=tan[0])


def project_to_model(model: CylinderModel, points) -> tuple:
    """First-order nearest-point projection onto the model; returns (feet, distances).

    Valid near the model: the axial factor keeps the real part, the cone
    factor moves the coordinate moduli to a common least-squares radius and
    shifts all arguments equally to restore the phase constraint.  The
    returned distance is exact to second order in the offset, which is what
    the graph-versus-rotated-model checks need.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=complex))
    k, m = model.axial_dim, model.m
    local = pts @ model.rotation.conj()
    w = local[:, k:]
    # guard the singular axis: zero moduli get a flat direction
    mod = np.abs(w)
    arg = np.angle(np.where(mod > 0, w, 1.0))
    mism = model.link.phase - np.sum(arg, axis=1)
    mism = np.angle(np.exp(1j * mism))  # representative in (-pi, pi]
    psi = arg + (mism / m)[:, None]
    c = np.mean(np.real(w * np.exp(-1j * psi)), axis=1)
    c = np.maximum(c, 0.0)
    cone = c[:, None] * np.exp(1j * psi)
    feet_local = np.concatenate([np.real(local[:, :k]).astype(complex), cone], axis=1)
    feet = feet_local @ model.rotation.T
    dist = np.sqrt(np.sum(np.abs(pts - feet) ** 2, axis=1))
    return feet, dist


def graph_point(model: CylinderModel, f: HarmonicExpansion, base) -> np.ndarray:
    """First-order Lagrangian graph point over chart coordinates base = (x, r, theta)."""
    x, r, theta = base
    chart = GraphChart(model, f)
    x = np.asarray(x, dtype=float).reshape(1, model.axial_dim)
    theta = np.asarray(theta, dtype=float).reshape(1, model.m - 1)
    return chart.points(x, np.array([float(r)]), theta)[0]


# ---------------------------------------------------------------------------
# representing moment hamiltonians as expansions
# ---------------------------------------------------------------------------

def moment_expansion(model: CylinderModel, gen: RotationGenerator, tol: float = 1e-12) -> HarmonicExpansion:
    """Represent the restriction of h_a to the model as a cylinder expansion.

    Decomposing a (conjugated into the model frame) into axial/mixed/cone
    blocks, the representable part consists of traceless axial quadratics,
    the mixed x_i times linear link modes, and the off-diagonal cone
    quadratics at eigenvalue 2m.  Pure-trace parts would require an r^2
    radial correction (p = 1) and are rejected.
    """
    k, m = model.axial_dim, model.m
    a = model.rotation.conj().T @ gen.a @ model.rotation
    A = a[:k, :k]
    B = a[:k, k:]
    D = a[k:, k:]
    scale = max(1.0, float(np.linalg.norm(gen.a)))

    T = np.imag(A)
    T = 0.5 * (T + T.T)
    if abs(np.trace(T)) > tol * scale:
        raise ValueError("generator has an axial trace part; its hamiltonian needs a radial correction mode")
    dphi = np.imag(np.diag(D))
    if abs(np.sum(dphi)) > tol * scale:
        raise ValueError("generator has a cone trace part; its hamiltonian needs a radial correction mode")

    phase = model.link.phase
    cphase, sphase = math.cos(phase), math.sin(phase)
    modes = []
    zero_nu = (0,) * (m - 1)
    unit_h = {(0,) * k: 1.0}

    # axial block: h = -1/2 x^T T x (harmonic since tr T = 0)
    poly = {}
    for i in range(k):
        for j in range(k):
            if T[i, j] != 0.0:
                mono = tuple((2 if t == i else 0) for t in range(k)) if i == j else tuple(
                    (1 if t in (i, j) else 0) for t in range(k)
                )
                poly[mono] = poly.get(mono, 0.0) - 0.5 * T[i, j]
    if poly:
        modes.append(CylinderMode(zero_nu, "cos", poly, 1.0, 0, k, m))

    sqm = math.sqrt(m)

    def add(nu, parity, h, coeff):
        if coeff != 0.0:
            modes.append(CylinderMode(tuple(nu), parity, h, coeff, 0, k, m))

    # mixed block: h = -sum_i x_i Im(sum_j B_ij w_j), w_j = (r/sqrt(m)) e^(i theta_j)
    for i in range(k):
        xi = tuple((1 if t == i else 0) for t in range(k))
        for j in range(m):
            bre, bim = B[i, j].real, B[i, j].imag
            if bre == 0.0 and bim == 0.0:
                continue
            if j < m - 1:
                nu = tuple(1 if t == j else 0 for t in range(m - 1))
                add(nu, "sin", {xi: 1.0}, -bre / sqm)
                add(nu, "cos", {xi: 1.0}, -bim / sqm)
            else:
                # theta_m = phase - sum(theta): sin/cos split over nu = (1,...,1)
                ones = (1,) * (m - 1)
                add(ones, "cos", {xi: 1.0}, -(bre * sphase + bim * cphase) / sqm)
                add(ones, "sin", {xi: 1.0}, -(-bre * cphase + bim * sphase) / sqm)

    # cone block: pairs (j < l): h += -(r^2/m) Im(D_jl e^{i(theta_l - theta_j)})
    for j in range(m):
        for l in range(j + 1, m):
            dre, dim_ = D[j, l].real, D[j, l].imag
            if dre == 0.0 and dim_ == 0.0:
                continue
            if l < m - 1:
                nu = tuple((1 if t == l else 0) - (1 if t == j else 0) for t in range(m - 1))
                add(nu, "sin", unit_h, -dre / m)
                add(nu, "cos", unit_h, -dim_ / m)
            else:
                # theta_m - theta_j = phase - (sum theta + theta_j)
                nu = tuple(1 + (1 if t == j else 0) for t in range(m - 1))
                add(nu, "cos", unit_h, -(dre * sphase + dim_ * cphase) / m)
                add(nu, "sin", unit_h, (dre * cphase - dim_ * sphase) / m)

    return HarmonicExpansion(k, FormSpec(m), tuple(modes))


def representable_generator(model: CylinderModel, gen: RotationGenerator) -> RotationGenerator:
    """Remove the trace obstructions so moment_expansion accepts the generator.

    Subtracts the i*identity parts of the axial and cone diagonal blocks; the
    removed directions generate exactly the hamiltonians that would need the
    radial correction mode (outside the p = 0 basis).  The result is still
    skew-hermitian and traceless.
    """
    k, m = model.axial_dim, model.m
    a = model.rotation.conj().T @ gen.a @ model.rotation
    out = a.copy()
    if k:
        t_ax = float(np.trace(np.imag(a[:k, :k])))
        out[:k, :k] -= 1j * t_ax / k * np.eye(k)
    t_cone = float(np.trace(np.imag(out[k:, k:])))
    out[k:, k:] -= 1j * t_cone / m * np.eye(m)
    out = model.rotation @ out @ model.rotation.conj().T
    return RotationGenerator(out)


def stabilizer_free_generator(model: CylinderModel, gen: RotationGenerator) -> RotationGenerator:
    """Canonical representative modulo the restriction kernel.

    On top of the trace obstructions this zeroes the cone-block diagonal
    (the stabilizer torus), whose hamiltonians vanish identically on the
    model: least-squares extraction returns exactly this representative.
    """
    gen = representable_generator(model, gen)
    k = model.ambient_dim - model.m
    a = model.rotation.conj().T @ gen.a @ model.rotation
    out = a.copy()
    for j in range(k, model.ambient_dim):
        out[j, j] = 0.0
    out = model.rotation @ out @ model.rotation.conj().T
    return RotationGenerator(out)


def require_rigid(m: int) -> None:
    """Raise when the link is not rigid (the moduli deformation step is out of scope)."""
    rep = rigidity_report(m)
    if not rep.rigid:
        raise ValueError(
            f"link with m={m} is not rigid (quadratic excess {rep.excess}); "
            "rotation extraction is only supported for rigid links"
        )
