"""Side-by-side timing of the two kernel backends.

Runs each hot kernel on a fixed workload under the pure-numpy fallback and
the numba JIT backend, reports best-of-N wall times, and checks that the two
backends produce bitwise-identical outputs (they share one integer
arithmetic contract, so any mismatch is a bug, not noise).

Usage: python3 benchmarks/kernel_bench.py [--repeat 3] [--scale 1.0]
"""

import argparse
import time

import numpy as np

from reclab._kernels import numpy_backend
from reclab._kernels.numpy_backend import digit_depth

try:
    from reclab._kernels import numba_backend
except ImportError:
    numba_backend = None

CAT = np.array([[2, 1], [1, 1]], dtype=np.uint64)


def _best(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def _workloads(scale):
    rng = np.random.default_rng(2026)
    n_orbit = int(1_000_000 * scale)
    n_scan = int(1_000_000 * scale)
    v0 = rng.integers(0, 2 ** 64, size=2, dtype=np.uint64)
    zero = np.uint64(0)  # threshold 0 never hits, forcing a full scan

    loads = []
    loads.append((f"cat orbit, {n_orbit:.0e} steps",
                  lambda be: be.toral_orbit_positions(v0, CAT, n_orbit)))
    loads.append((f"cat return scan, cap {n_scan:.0e}",
                  lambda be: be.toral_return_time(v0, CAT, zero, n_scan)))
    for base, n in ((2, n_orbit), (10, max(1, int(300_000 * scale)))):
        depth = digit_depth(base)
        queue = rng.integers(0, base, size=depth, dtype=np.uint64)
        fresh = rng.integers(0, base, size=n, dtype=np.uint64)
        loads.append((f"shift base {base} windows, {n:.0e} digits",
                      lambda be, q=queue, f=fresh, m=base: be.shift_orbit_positions(q, f, m)))
    depth = digit_depth(2)
    queue = rng.integers(0, 2, size=depth, dtype=np.uint64)
    fresh = rng.integers(0, 2, size=n_scan, dtype=np.uint64)
    start = int(rng.integers(0, 2 ** 64, dtype=np.uint64))
    loads.append((f"shift return scan, cap {n_scan:.0e}",
                  lambda be, q=queue, f=fresh: be.shift_return_scan(q, f, zero, 0, start, 2)))
    return loads


def _flatten(out):
    if isinstance(out, tuple):
        return [np.asarray(o) for o in out]
    return [np.asarray(out)]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3, help="best-of-N timing")
    ap.add_argument("--scale", type=float, default=1.0,
                    help="multiply all workload sizes")
    args = ap.parse_args()

    if numba_backend is None:
        print("numba backend unavailable (numba not importable); nothing to compare")
        return 1

    header = f"{'workload':<38} {'numpy':>9} {'numba':>9} {'speedup':>8}  bitwise"
    print(header)
    print("-" * len(header))
    all_equal = True
    for name, run in _workloads(args.scale):
        run(numba_backend)  # warm the JIT before timing
        t_np = _best(lambda: run(numpy_backend), args.repeat)
        t_nb = _best(lambda: run(numba_backend), args.repeat)
        outs_np = _flatten(run(numpy_backend))
        outs_nb = _flatten(run(numba_backend))
        equal = len(outs_np) == len(outs_nb) and all(
            np.array_equal(a, b) for a, b in zip(outs_np, outs_nb)
        )
        all_equal &= equal
        print(f"{name:<38} {t_np:>8.4f}s {t_nb:>8.4f}s {t_np / t_nb:>7.1f}x"
              f"  {'equal' if equal else 'MISMATCH'}")
    print("-" * len(header))
    print("all outputs bitwise identical" if all_equal
          else "BACKEND MISMATCH: outputs differ")
    return 0 if all_equal else 1


if __name__ == "__main__":
    raise SystemExit(main())
