"""Exact integer spectrum of the flat torus link of the Harvey-Lawson cone.

The link of the Harvey-Lawson cone in complex dimension ``m`` is a flat
(m-1)-torus whose Laplace eigenfunctions are indexed by integer frequency
vectors ``nu`` in Z^(m-1) with eigenvalue

    q(nu) = m * |nu|^2 - (sum nu_i)^2.

Everything in this module is exact integer arithmetic: eigenvalues,
enumeration of all frequency vectors at a given eigenvalue, multiplicity
tables, and the rigidity bookkeeping (linear multiplicity 2m versus the
su(m) orbit dimension m^2 - m).  All functions are pure, results are sorted
deterministically, and everything is safe to call from multiple threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

# q(nu) grows quadratically in m * |nu|^2; with the cap below every value met
# during enumeration stays far inside 64-bit range even if callers hand the
# results to numpy later.
MAX_M = 64


def _check_m(m: int) -> None:
    if not isinstance(m, int) or isinstance(m, bool):
        raise TypeError(f"m must be an integer, got {type(m).__name__}")
    if m < 3:
        raise ValueError(f"need m >= 3, got m={m}")
    if m > MAX_M:
        raise ValueError(f"m={m} exceeds supported limit {MAX_M}")


@dataclass(frozen=True)
class FormSpec:
    """Positive definite quadratic form q(nu) = m|nu|^2 - (sum nu)^2 on Z^(m-1)."""

    m: int

    def __post_init__(self):
        _check_m(self.m)

    @property
    def rank(self) -> int:
        return self.m - 1

    def __call__(self, nu) -> int:
        return eigenvalue_of(self.m, nu)


@dataclass(frozen=True)
class FrequencyMode:
    """A torus eigenfunction index: frequency vector plus its eigenvalue."""

    nu: tuple
    eigenvalue: int

    def __post_init__(self):
        object.__setattr__(self, "nu", tuple(int(v) for v in self.nu))


@dataclass(frozen=True)
class RigidityReport:
    """Dimension count deciding whether every quadratic-growth harmonic is an su(m) rotation."""

    m: int
    linear_mult: int
    quadratic_mult: int
    su_orbit_dim: int
    excess: int
    rigid: bool

    def as_dict(self) -> dict:
        return {
            "m": self.m,
            "linear_mult": self.linear_mult,
            "quadratic_mult": self.quadratic_mult,
            "su_orbit_dim": self.su_orbit_dim,
            "excess": self.excess,
            "rigid": self.rigid,
        }


def eigenvalue_of(m: int, nu) -> int:
    """Exact eigenvalue q(nu) = m * sum(nu_i^2) - (sum nu_i)^2."""
    _check_m(m)
    nu = [int(v) for v in nu]
    if len(nu) != m - 1:
        raise ValueError(f"frequency vector must have length m-1={m - 1}, got {len(nu)}")
    s = sum(nu)
    q = sum(v * v for v in nu)
    return m * q - s * s


def _vectors_with_sum_and_square(length: int, s: int, q: int):
    """All integer vectors of given length with sum s and sum of squares q.

    Depth-first over coordinates.  Pruning: remaining square budget must be
    nonnegative and the Cauchy-Schwarz bound s_rem^2 <= t_rem * q_rem must be
    satisfiable by the remaining coordinates.
    """
    out = []
    vec = [0] * length

    def rec(idx: int, s_rem: int, q_rem: int) -> None:
        t = length - idx
        if t == 0:
            if s_rem == 0 and q_rem == 0:
                out.append(tuple(vec))
            return
        if q_rem < 0 or s_rem * s_rem > t * q_rem:
            return
        c = math.isqrt(q_rem)
        for v in range(-c, c + 1):
            vec[idx] = v
            rec(idx + 1, s_rem - v, q_rem - v * v)
        vec[idx] = 0

    rec(0, s, q)
    return out


def enumerate_modes(m: int, lam: int) -> list:
    """All frequency vectors nu with q(nu) = lam, sorted lexicographically.

    Since (sum nu)^2 <= (m-1)|nu|^2, every solution has |nu|^2 <= lam, which
    caps each coordinate at floor(sqrt(lam)).  The search splits on the value
    of S = sum nu_i: a solution needs m | (lam + S^2), and then has
    |nu|^2 = (lam + S^2)/m exactly.
    """
    _check_m(m)
    lam = int(lam)
    if lam < 0:
        raise ValueError(f"eigenvalue must be nonnegative, got {lam}")
    rank = m - 1
    if lam == 0:
        return [FrequencyMode(nu=(0,) * rank, eigenvalue=0)]

    vectors = []
    s_max = math.isqrt((m - 1) * lam)
    for s in range(-s_max, s_max + 1):
        if (lam + s * s) % m != 0:
            continue
        q = (lam + s * s) // m
        if q > lam:
            continue
        vectors.extend(_vectors_with_sum_and_square(rank, s, q))

    vectors.sort()
    return [FrequencyMode(nu=v, eigenvalue=lam) for v in vectors]


def multiplicity(m: int, lam: int) -> int:
    """Number of frequency vectors with eigenvalue lam (1 at lam=0 for the constant)."""
    return len(enumerate_modes(m, lam))


def rigidity_report(m: int) -> RigidityReport:
    """Compare harmonic-growth multiplicities against the ambient symmetry orbit.

    linear_mult counts eigenvalue m-1 (linear growth), quadratic_mult counts
    eigenvalue 2m (quadratic growth).  The su(m) action modulo the diagonal
    stabilizer torus provides an (m^2 - m)-dimensional family of quadratic
    growth harmonics; the cone is rigid exactly when linear_mult == 2m and the
    quadratic excess over that family vanishes.
    """
    _check_m(m)
    linear = multiplicity(m, m - 1)
    quadratic = multiplicity(m, 2 * m)
    orbit = m * m - m
    excess = quadratic - orbit
    return RigidityReport(
        m=m,
        linear_mult=linear,
        quadratic_mult=quadratic,
        su_orbit_dim=orbit,
        excess=excess,
        rigid=(linear == 2 * m and excess == 0),
    )
