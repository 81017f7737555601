import os
import subprocess
import sys

import networkx as nx
import numpy as np
import pytest

from conftest import BACKENDS, graph_from_nx
from daogov._accel import HAVE_NUMBA, resolve_backend
from daogov.covote.kernels import (
    bfs_path_stats,
    core_numbers,
    count_copairs,
    local_clustering,
    rewire,
    triangles,
)
from oracles import naive_projection


def random_pairs(rng, n_users, n_props, density):
    m = rng.random((n_users, n_props)) < density
    u, p = np.nonzero(m)
    return u.astype(np.int64), p.astype(np.int64)


@pytest.mark.parametrize("threshold", [0, 1, 3])
def test_copairs_backends_agree_with_oracle(backend, threshold):
    rng = np.random.default_rng(threshold)
    u, p = random_pairs(rng, 40, 30, 0.2)
    src, dst, w = count_copairs(u, p, 40, 30, threshold, backend)
    got = {(int(a), int(b)): int(c) for a, b, c in zip(src, dst, w)}
    assert got == naive_projection(zip(u.tolist(), p.tolist()), threshold)
    assert np.all(src < dst)


def test_copairs_empty(backend):
    e = np.empty(0, dtype=np.int64)
    src, dst, w = count_copairs(e, e, 0, 0, 0, backend)
    assert len(src) == len(dst) == len(w) == 0


def _csr(g):
    cg = graph_from_nx(g)
    indptr, indices, _ = cg.csr()
    return indptr, indices


GRAPHS = {
    "karate": nx.karate_club_graph(),
    "gnm": nx.gnm_random_graph(120, 400, seed=3),
    "ws": nx.connected_watts_strogatz_graph(150, 6, 0.1, seed=4),
    "path": nx.path_graph(9),
}


@pytest.mark.parametrize("name", sorted(GRAPHS))
def test_triangles_and_clustering_match_networkx(backend, name):
    g = nx.convert_node_labels_to_integers(GRAPHS[name])
    nx.set_edge_attributes(g, 1, "weight")
    indptr, indices = _csr(g)
    tri = triangles(indptr, indices, backend)
    assert tri.tolist() == [nx.triangles(g)[i] for i in range(len(g))]
    cc = local_clustering(indptr, indices, backend)
    assert cc == pytest.approx([nx.clustering(g)[i] for i in range(len(g))], abs=1e-12)


@pytest.mark.parametrize("name", sorted(GRAPHS))
def test_core_numbers_match_networkx(backend, name):
    g = nx.convert_node_labels_to_integers(GRAPHS[name])
    indptr, indices = _csr(g)
    ref = nx.core_number(g)
    assert core_numbers(indptr, indices, backend).tolist() == [ref[i] for i in range(len(g))]


@pytest.mark.parametrize("name", sorted(GRAPHS))
def test_bfs_stats_match_networkx(backend, name):
    g = nx.convert_node_labels_to_integers(GRAPHS[name])
    indptr, indices = _csr(g)
    total, pairs, diam = bfs_path_stats(indptr, indices, np.arange(len(g)), backend)
    lengths = dict(nx.all_pairs_shortest_path_length(g))
    ref = [d for s in lengths for t, d in lengths[s].items() if s != t]
    assert (total, pairs, diam) == (sum(ref), len(ref), max(ref))


def test_bfs_disconnected_counts_reachable_pairs(backend):
    g = nx.disjoint_union(nx.path_graph(3), nx.path_graph(2))
    indptr, indices = _csr(g)
    total, pairs, diam = bfs_path_stats(indptr, indices, np.arange(5), backend)
    assert (total, pairs, diam) == (8 + 2, 6 + 2, 2)


def test_rewire_preserves_degrees_and_simplicity(backend):
    g = nx.gnm_random_graph(300, 1500, seed=5)
    e = np.array(sorted(g.edges()), dtype=np.int64)
    rng = np.random.default_rng(9)
    s, d, done = rewire(e[:, 0], e[:, 1], 300, 20_000, rng, backend)
    assert done > 1000
    before = np.bincount(e.ravel(), minlength=300)
    after = np.bincount(np.concatenate([s, d]), minlength=300)
    assert np.array_equal(before, after)
    assert np.all(s != d)
    keys = set(zip(np.minimum(s, d).tolist(), np.maximum(s, d).tolist()))
    assert len(keys) == len(s)


@pytest.mark.skipif(not HAVE_NUMBA, reason="numba not installed")
def test_rewire_backends_identical_under_churn():
    # heavy add/remove churn on a dense graph exercises probe-chain repair in the hash table
    g = nx.gnm_random_graph(60, 900, seed=1)
    e = np.array(sorted(g.edges()), dtype=np.int64)
    out = []
    for b in ("numpy", "numba"):
        rng = np.random.default_rng(42)
        out.append(rewire(e[:, 0], e[:, 1], 60, 50_000, rng, b))
    assert out[0][2] == out[1][2]
    assert np.array_equal(out[0][0], out[1][0]) and np.array_equal(out[0][1], out[1][1])


@pytest.mark.skipif(not HAVE_NUMBA, reason="numba not installed")
def test_all_kernels_identical_across_backends():
    g = nx.gnm_random_graph(500, 3000, seed=8)
    indptr, indices = _csr(g)
    for fn in (triangles, core_numbers):
        assert np.array_equal(fn(indptr, indices, "numpy"), fn(indptr, indices, "numba"))
    src = np.arange(0, 500, 7)
    assert bfs_path_stats(indptr, indices, src, "numpy") == bfs_path_stats(indptr, indices, src, "numba")


def test_backend_resolution():
    assert resolve_backend("numpy") == "numpy"
    with pytest.raises(ValueError):
        resolve_backend("cuda")
    assert "numpy" in BACKENDS


def test_env_flag_forces_numpy():
    code = "from daogov._accel import DEFAULT_BACKEND, HAVE_NUMBA; print(DEFAULT_BACKEND, HAVE_NUMBA)"
    env = dict(os.environ, DAOGOV_DISABLE_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.split() == ["numpy", "False"]
