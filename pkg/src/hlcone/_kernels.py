"""Hot numeric kernels with a numba fast path and a pure-numpy fallback.

Two inner loops dominate runtime: evaluating flattened mode-term sums over
quadrature grids (hundreds of thousands of nodes, called once per derivative
component) and brute-force directed Hausdorff distances between point clouds.
Both are provided as ``@njit`` kernels and as vectorized numpy equivalents.

Backend selection: the environment variable ``HLCONE_NO_NUMBA`` (set to
anything but ``"0"``) forces the numpy path; otherwise numba is used when it
imports cleanly.  ``HLCONE_THREADS`` caps the numba thread count.  Every
public function also accepts ``use_numba`` to pin the backend explicitly,
which is what the benchmark harness does.
"""

from __future__ import annotations

import os

import numpy as np

_env_off = os.environ.get("HLCONE_NO_NUMBA", "0") not in ("", "0")

try:
    import numba
    from numba import njit, prange

    # workqueue needs no TBB/OpenMP and keeps the parallel loops deterministic
    numba.config.THREADING_LAYER = os.environ.get("HLCONE_THREAD_LAYER", "workqueue")
    if os.environ.get("HLCONE_THREADS"):
        numba.set_num_threads(max(1, int(os.environ["HLCONE_THREADS"])))
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only on stripped installs
    HAVE_NUMBA = False

NUMBA_ENABLED = HAVE_NUMBA and not _env_off


def backend_name() -> str:
    return "numba" if NUMBA_ENABLED else "numpy"


# ---------------------------------------------------------------------------
# term evaluation: sum_t coeff_t * prod_i x_i^e_ti * r^gamma_t * trig(nu_t . theta)
# ---------------------------------------------------------------------------

def _eval_terms_numpy(x, r, theta, coeff, expo, gamma, nu, parity):
    n = r.shape[0]
    out = np.zeros(n)
    for t in range(coeff.shape[0]):
        term = np.full(n, coeff[t])
        for i in range(expo.shape[1]):
            e = expo[t, i]
            if e:
                term *= x[:, i] ** e
        g = gamma[t]
        if g != 0.0:
            term *= r**g
        phase = theta @ nu[t].astype(np.float64)
        term *= np.sin(phase) if parity[t] else np.cos(phase)
        out += term
    return out


if HAVE_NUMBA:

    @njit(cache=True, parallel=True)
    def _eval_terms_numba(x, r, theta, coeff, expo, gamma, nu, parity):  # pragma: no cover - compiled
        n = r.shape[0]
        nt = coeff.shape[0]
        k = expo.shape[1]
        d = nu.shape[1]
        out = np.zeros(n)
        for p in prange(n):
            acc = 0.0
            for t in range(nt):
                v = coeff[t]
                for i in range(k):
                    e = expo[t, i]
                    for _ in range(e):
                        v *= x[p, i]
                g = gamma[t]
                if g != 0.0:
                    v *= r[p] ** g
                phase = 0.0
                for j in range(d):
                    phase += nu[t, j] * theta[p, j]
                if parity[t]:
                    v *= np.sin(phase)
                else:
                    v *= np.cos(phase)
                acc += v
            out[p] = acc
        return out


def eval_terms(x, r, theta, coeff, expo, gamma, nu, parity, use_numba=None):
    """Evaluate a flattened term sum at each node.

    x: (n, k) axial coordinates, r: (n,) cone radii (> 0), theta: (n, m-1)
    torus angles.  Term arrays: coeff (t,), expo (t, k) integer monomial
    exponents, gamma (t,) radial powers, nu (t, m-1) integer frequencies,
    parity (t,) 0 for cos, 1 for sin.
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    r = np.ascontiguousarray(r, dtype=np.float64)
    theta = np.ascontiguousarray(theta, dtype=np.float64)
    coeff = np.ascontiguousarray(coeff, dtype=np.float64)
    expo = np.ascontiguousarray(expo, dtype=np.int64)
    gamma = np.ascontiguousarray(gamma, dtype=np.float64)
    nu = np.ascontiguousarray(nu, dtype=np.int64)
    parity = np.ascontiguousarray(parity, dtype=np.int8)
    if coeff.shape[0] == 0:
        return np.zeros(r.shape[0])
    pick = NUMBA_ENABLED if use_numba is None else (use_numba and HAVE_NUMBA)
    if pick:
        return _eval_terms_numba(x, r, theta, coeff, expo, gamma, nu, parity)
    return _eval_terms_numpy(x, r, theta, coeff, expo, gamma, nu, parity)


# ---------------------------------------------------------------------------
# directed Hausdorff distance between point clouds
# ---------------------------------------------------------------------------

def _directed_hausdorff_sq_numpy(a, b, chunk=512):
    # expanded form a^2 - 2ab + b^2 for speed; rows whose minimum lands near
    # zero are recomputed with exact differences so identical points give 0
    worst = 0.0
    bb = np.sum(b * b, axis=1)
    noise = 64.0 * np.finfo(np.float64).eps * (float(np.max(bb)) + 1.0)
    for lo in range(0, a.shape[0], chunk):
        blk = a[lo : lo + chunk]
        d2 = np.sum(blk * blk, axis=1)[:, None] - 2.0 * (blk @ b.T) + bb[None, :]
        mins = np.min(d2, axis=1)
        for i in np.nonzero(mins <= noise)[0]:
            mins[i] = np.min(np.sum((b - blk[i]) ** 2, axis=1))
        worst = max(worst, float(np.max(mins)))
    return max(worst, 0.0)


if HAVE_NUMBA:

    @njit(cache=True, parallel=True)
    def _directed_hausdorff_sq_numba(a, b):  # pragma: no cover - compiled
        n, dim = a.shape
        m = b.shape[0]
        per_pt = np.empty(n)
        for i in prange(n):
            best = np.inf
            for j in range(m):
                d2 = 0.0
                for t in range(dim):
                    diff = a[i, t] - b[j, t]
                    d2 += diff * diff
                if d2 < best:
                    best = d2
                    if best == 0.0:
                        break
            per_pt[i] = best
        return np.max(per_pt)


def directed_hausdorff_sq(a, b, use_numba=None) -> float:
    """max over rows of ``a`` of the squared distance to the nearest row of ``b``."""
    a = np.ascontiguousarray(a, dtype=np.float64)
    b = np.ascontiguousarray(b, dtype=np.float64)
    if a.size == 0 or b.size == 0:
        raise ValueError("empty point cloud")
    pick = NUMBA_ENABLED if use_numba is None else (use_numba and HAVE_NUMBA)
    if pick:
        return float(_directed_hausdorff_sq_numba(a, b))
    return _directed_hausdorff_sq_numpy(a, b)
