#!/usr/bin/env python3
"""Time the numba kernels against the pure-numpy fallback.

Run:  python benchmarks/bench_backends.py [--sizes 50000,200000]
The same comparison can be forced package-wide with HLCONE_NO_NUMBA=1.
"""

import argparse
import time

import numpy as np

from hlcone import _kernels
from hlcone.geometry import cylinder_model
from hlcone.harmonics import expansion
from hlcone.quadrature import GridSpec, cylinder_ball_grid


def timed(fn, repeat=3):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def bench_eval_terms(n_nodes: int):
    f = (expansion(1, 3)
         .mode(nu=(1, -1), parity="cos", h={(1,): 1.0})
         .mode(nu=(2, 1), parity="sin", h={(0,): 0.5, (1,): -0.25})
         .mode(nu=(1, 0), parity="cos", h={(1,): 0.3}))
    terms = f.terms()
    spec = GridSpec(n_radial=max(8, n_nodes // 4096), n_polar=32, n_theta=16)
    grid = cylinder_ball_grid(1, 3, spec=spec)
    x, r, th = grid.x[:n_nodes], grid.r[:n_nodes], grid.theta[:n_nodes]
    args = (x, r, th, terms.coeff, terms.expo, terms.gamma, terms.nu, terms.parity)
    rows = {}
    if _kernels.HAVE_NUMBA:
        _kernels.eval_terms(*args, use_numba=True)  # compile outside the timer
        rows["numba"], ref = timed(lambda: _kernels.eval_terms(*args, use_numba=True))
    rows["numpy"], out = timed(lambda: _kernels.eval_terms(*args, use_numba=False))
    return rows


def bench_hausdorff(n_pts: int):
    rng = np.random.default_rng(0)
    a = rng.normal(size=(n_pts, 8))
    b = rng.normal(size=(n_pts, 8))
    rows = {}
    if _kernels.HAVE_NUMBA:
        _kernels.directed_hausdorff_sq(a[:64], b[:64], use_numba=True)
        rows["numba"], va = timed(lambda: _kernels.directed_hausdorff_sq(a, b, use_numba=True))
    rows["numpy"], vb = timed(lambda: _kernels.directed_hausdorff_sq(a, b, use_numba=False))
    if _kernels.HAVE_NUMBA and abs(va - vb) > 1e-9 * max(va, vb):
        raise AssertionError("backends disagree")
    return rows


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--nodes", default="100000,400000", help="node counts for term evaluation")
    ap.add_argument("--points", default="2000,8000", help="cloud sizes for hausdorff")
    args = ap.parse_args()

    print(f"numba available: {_kernels.HAVE_NUMBA}   active backend: {_kernels.backend_name()}")
    print("\nterm evaluation (seconds, best of 3)")
    print(f"{'nodes':>10} {'numpy':>10} {'numba':>10} {'speedup':>8}")
    for n in (int(s) for s in args.nodes.split(",")):
        rows = bench_eval_terms(n)
        np_t = rows["numpy"]
        nb_t = rows.get("numba", float("nan"))
        print(f"{n:>10} {np_t:>10.4f} {nb_t:>10.4f} {np_t / nb_t:>8.2f}" if "numba" in rows
              else f"{n:>10} {np_t:>10.4f} {'-':>10} {'-':>8}")

    print("\ndirected hausdorff (seconds, best of 3)")
    print(f"{'points':>10} {'numpy':>10} {'numba':>10} {'speedup':>8}")
    for n in (int(s) for s in args.points.split(",")):
        rows = bench_hausdorff(n)
        np_t = rows["numpy"]
        if "numba" in rows:
            print(f"{n:>10} {np_t:>10.4f} {rows['numba']:>10.4f} {np_t / rows['numba']:>8.2f}")
        else:
            print(f"{n:>10} {np_t:>10.4f} {'-':>10} {'-':>8}")


if __name__ == "__main__":
    main()
