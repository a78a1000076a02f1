"""Time the compiled kernels against the pure-Python fallback.

Usage: python benchmarks/bench_kernels.py [--repeat N]

Both modules are imported directly, so the result does not depend on
DPMC_BACKEND.  Outputs are cross-checked before timing.
"""
import argparse
import timeit

import numpy as np

from dpmc import _pykernels

try:
    from dpmc import _ckernels
except ImportError:  # extension not built
    _ckernels = None


def _jacobi_case(mod, A):
    G = np.array(A.T, order="C", copy=True)
    V = np.eye(G.shape[0])
    mod.jacobi_sweeps(G, V, np.finfo(float).eps * G.shape[1], 60, 0.0)
    return G


def cases(rng):
    u = rng.uniform(1e-12, 1 - 1e-12, size=200_000)
    A16 = rng.normal(size=(16, 16))
    A64 = rng.normal(size=(64, 48))
    k = 4
    grid = np.geomspace(0.1, 10.0, 9)
    pts = np.array(np.meshgrid(*[grid] * k)).reshape(k, -1).T
    s1 = np.sort(pts, axis=1)[:, ::-1][:400].copy()
    s2 = np.sort(pts, axis=1)[:, ::-1][-400:].copy()
    a = (s1 ** 2).sum(axis=1)
    b = (s2 ** 2).sum(axis=1)
    return {
        "norm_icdf 2e5": lambda m: m.norm_icdf(u),
        "jacobi 16x16": lambda m: _jacobi_case(m, A16),
        "jacobi 64x48": lambda m: _jacobi_case(m, A64),
        "grid_min 400x400": lambda m: m.grid_min(a, s1, b, s2, 1.0),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    rng = np.random.default_rng(0)
    if _ckernels is None:
        print("compiled extension not available; timing the fallback only")
    print(f"{'kernel':<20}{'python [ms]':>14}{'cython [ms]':>14}{'speedup':>10}")
    for name, fn in cases(rng).items():
        py = min(timeit.repeat(lambda: fn(_pykernels), number=1, repeat=args.repeat))
        if _ckernels is None:
            print(f"{name:<20}{py * 1e3:>14.2f}{'-':>14}{'-':>10}")
            continue
        r_py, r_c = np.asarray(fn(_pykernels)), np.asarray(fn(_ckernels))
        if not np.allclose(r_py, r_c, rtol=1e-9, atol=1e-12):
            raise SystemExit(f"{name}: backends disagree")
        cy = min(timeit.repeat(lambda: fn(_ckernels), number=1, repeat=args.repeat))
        print(f"{name:<20}{py * 1e3:>14.2f}{cy * 1e3:>14.2f}{py / cy:>9.1f}x")


if __name__ == "__main__":
    main()
