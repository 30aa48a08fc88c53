"""Benchmark: compiled pair-sum kernels vs the NumPy fallback.

Usage:
    python benchmarks/bench_pairsum.py [--sizes 256,1024,2048] [--repeats 5]

Prints a table of per-call times for the four hot kernels at each problem
size and the speedup of the compiled backend, after checking that both
backends agree to 1e-12.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from fracplap._pairsum import py_backend

try:
    from fracplap._pairsum import _c_backend
except ImportError:
    _c_backend = None


def _system(n: int, seed: int = 0):
    rng = np.random.default_rng(seed)
    u = rng.standard_normal(n)
    xi = rng.standard_normal(n)
    W = np.abs(rng.standard_normal((n, n)))
    W = np.ascontiguousarray((W + W.T) / 2.0)
    np.fill_diagonal(W, 0.0)
    kappa = np.abs(rng.standard_normal(n))
    return u, xi, W, kappa


def _time(fn, args, repeats: int) -> float:
    fn(*args)  # warm-up
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sizes", default="256,1024,2048")
    parser.add_argument("--repeats", type=int, default=5)
    parser.add_argument("--p", type=float, default=2.5)
    args = parser.parse_args()
    sizes = [int(s) for s in args.sizes.split(",")]
    p = args.p

    if _c_backend is None:
        print("compiled backend not built; showing the NumPy fallback only")

    kernels = ["seminorm_pp", "seminorm_grad", "pairing_pp", "halfpair_pos_grad"]
    header = f"{'kernel':<18}{'n':>6}{'numpy [ms]':>12}"
    if _c_backend is not None:
        header += f"{'cython [ms]':>12}{'speedup':>9}"
    print(header)
    print("-" * len(header))
    for n in sizes:
        u, xi, W, kappa = _system(n)
        for name in kernels:
            call = (u, xi, W, kappa, p) if name == "pairing_pp" else (u, W, kappa, p)
            py_fn = getattr(py_backend, name)
            t_py = _time(py_fn, call, args.repeats)
            row = f"{name:<18}{n:>6}{1e3 * t_py:>12.3f}"
            if _c_backend is not None:
                c_fn = getattr(_c_backend, name)
                ref, got = py_fn(*call), c_fn(*call)
                err = np.max(np.abs(np.asarray(ref) - np.asarray(got)))
                scale = max(np.max(np.abs(np.asarray(ref))), 1e-300)
                assert err <= 1e-12 * scale, f"backend disagreement in {name}: {err}"
                t_c = _time(c_fn, call, args.repeats)
                row += f"{1e3 * t_c:>12.3f}{t_py / t_c:>9.2f}"
            print(row)
    print("\nbackends agree to 1e-12 on every kernel checked above")


if __name__ == "__main__":
    main()
