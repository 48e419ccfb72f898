"""Benchmark the compiled kernels against the pure NumPy reference.

Runs the three hot paths (pairwise distances, greedy net construction,
nearest-center assignment) on synthetic workloads, checks both backends
agree, and prints a timing table.

Usage: python benchmarks/bench_kernels.py [--quick]
"""

import argparse
import sys
import time

import numpy as np

from cubedim import _reference as pure

try:
    from cubedim import _kernels as compiled
except ImportError:
    compiled = None


def timed(fn, *args, repeat=3):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return out, best


def bench(quick=False):
    if compiled is None:
        print("compiled kernels not built; run `pip install -e .` with Cython "
              "and a C compiler available")
        return 1

    n_pair = 1500 if quick else 3000
    n_net = 6000 if quick else 20000
    rng = np.random.default_rng(42)
    rows = []

    coords2 = rng.uniform(size=(n_pair, 2))
    (a, t_c) = timed(compiled.pairwise_distances, coords2)
    (b, t_p) = timed(pure.pairwise_distances, coords2)
    assert np.allclose(a, b)
    rows.append((f"pairwise_distances n={n_pair}", t_c, t_p))

    coords = rng.uniform(size=(n_net, 2))
    order = np.arange(n_net, dtype=np.int64)
    for thr in (0.05, 0.01):
        (a, t_c) = timed(compiled.greedy_net_coords, coords, order, thr)
        (b, t_p) = timed(pure.greedy_net_coords, coords, order, thr)
        assert np.array_equal(a, b), "backends disagree on the greedy net"
        rows.append((f"greedy_net n={n_net} thr={thr} (|net|={a.size})", t_c, t_p))

    centers = np.sort(rng.choice(n_net, size=400, replace=False))
    (ia, t_c) = timed(compiled.nearest_center_coords, coords, coords[centers])
    (ib, t_p) = timed(pure.nearest_center_coords, coords, coords[centers])
    assert np.array_equal(ia[0], ib[0])
    rows.append((f"nearest_center n={n_net} centers=400", t_c, t_p))

    dmat = pure.pairwise_distances(rng.uniform(size=(1200, 1)))
    order_m = np.arange(1200, dtype=np.int64)
    (a, t_c) = timed(compiled.greedy_net_matrix, dmat, order_m, 0.01)
    (b, t_p) = timed(pure.greedy_net_matrix, dmat, order_m, 0.01)
    assert np.array_equal(a, b)
    rows.append(("greedy_net_matrix n=1200 thr=0.01", t_c, t_p))

    width = max(len(r[0]) for r in rows)
    print(f"{'workload':<{width}}  {'compiled':>10}  {'pure':>10}  {'speedup':>8}")
    for name, t_c, t_p in rows:
        print(f"{name:<{width}}  {t_c * 1e3:>8.1f}ms  {t_p * 1e3:>8.1f}ms  "
              f"{t_p / t_c:>7.1f}x")
    return 0


if __name__ == "__main__":
    ap = argparse.ArgumentParser()
    ap.add_argument("--quick", action="store_true")
    sys.exit(bench(quick=ap.parse_args().quick))
