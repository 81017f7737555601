"""Time every numba kernel against its numpy twin.

    python3 benchmarks/bench_kernels.py [--repeat 3]

The first numba call per kernel is reported separately since it includes
compilation (or loading from the on-disk cache).
"""
import argparse
import sys
import time
from pathlib import Path

import networkx as nx
import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "tests"))

from builders import zipf_pairs  # noqa: E402
from daogov._accel import HAVE_NUMBA  # noqa: E402
from daogov.covote.kernels import bfs_path_stats, core_numbers, count_copairs, rewire, triangles  # noqa: E402
from daogov.covote.stats import _unweighted_csr  # noqa: E402


def cases():
    u, p = zipf_pairs(100_000, 20_000, 1_000, seed=11)
    g = nx.gnm_random_graph(20_000, 200_000, seed=1)
    e = np.array(list(g.edges()), dtype=np.int64)
    indptr, indices = _unweighted_csr(e[:, 0], e[:, 1], 20_000)
    sources = np.arange(0, 20_000, 100, dtype=np.int64)
    return {
        "count_copairs T=10": lambda b: count_copairs(u, p, 20_000, 1_000, 10, b),
        "triangles": lambda b: triangles(indptr, indices, b),
        "core_numbers": lambda b: core_numbers(indptr, indices, b),
        "bfs 200 sources": lambda b: bfs_path_stats(indptr, indices, sources, b),
        "rewire 400k attempts": lambda b: rewire(e[:, 0], e[:, 1], 20_000, 400_000, np.random.default_rng(0), b),
    }


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if not HAVE_NUMBA:
        print("numba unavailable; only numpy timings are shown")
    print(f"{'kernel':24s} {'numpy s':>9s} {'numba s':>9s} {'first s':>9s} {'speedup':>8s}")
    for name, fn in cases().items():
        t_np = best_of(lambda: fn("numpy"), args.repeat)
        if HAVE_NUMBA:
            t0 = time.perf_counter()
            fn("numba")
            first = time.perf_counter() - t0
            t_nb = best_of(lambda: fn("numba"), args.repeat)
            print(f"{name:24s} {t_np:9.3f} {t_nb:9.3f} {first:9.3f} {t_np / t_nb:7.1f}x")
        else:
            print(f"{name:24s} {t_np:9.3f} {'-':>9s} {'-':>9s} {'-':>8s}")


if __name__ == "__main__":
    main()
