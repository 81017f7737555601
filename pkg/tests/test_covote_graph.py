import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from builders import random_bipartite_votes
from conftest import addr
from daogov.covote.graph import build_bipartite, project, top_spaces_by_tvl
from daogov.errors import ConfigurationError
from daogov.model import Proposal, Vote, rank_outcome
from oracles import naive_projection


def edge_dict(g):
    return {(g.nodes[a], g.nodes[b]): int(w) for a, b, w in zip(g.src, g.dst, g.weight)}


def test_minimal_bipartite():
    b = build_bipartite([Vote(addr(1), "p", 0, 1.0)])
    assert (len(b.users), len(b.proposals), b.n_edges) == (1, 1, 1)


def test_revote_keeps_latest_option():
    b = build_bipartite([Vote(addr(1), "p", 0, 1.0, 5), Vote(addr(1), "p", 1, 1.0, 9)])
    assert b.n_edges == 1 and b.option.tolist() == [1]


def test_degree_sums_equal_deduplicated_votes():
    rng = np.random.default_rng(0)
    votes = [Vote(addr(int(rng.integers(1, 15))), f"p{int(rng.integers(0, 12))}", 0, 1.0, i) for i in range(100)]
    b = build_bipartite(votes)
    distinct = {(v.user, v.proposal) for v in votes}
    assert b.user_degrees().sum() == b.proposal_degrees().sum() == len(distinct)
    for i, u in enumerate(b.users):
        assert b.user_degrees()[i] == sum(1 for x in distinct if x[0] == u)


def co_votes(n_shared, extra=()):
    votes = []
    for j in range(n_shared):
        votes += [Vote(addr(1), f"s{j}", 0, 1.0), Vote(addr(2), f"s{j}", 0, 1.0)]
    return votes + list(extra)


@pytest.mark.parametrize("t", [0, 1, 2, 10])
def test_threshold_boundary(backend, t):
    g = project(build_bipartite(co_votes(t)), threshold=t, backend=backend)
    assert g.n_edges == 0
    g = project(build_bipartite(co_votes(t + 1)), threshold=t, backend=backend)
    assert edge_dict(g) == {(addr(1), addr(2)): t + 1}


@pytest.mark.parametrize("t", [0, 1, 2, 5])
def test_projection_matches_pairwise_oracle(backend, t):
    rng = np.random.default_rng(100 + t)
    for _ in range(5):
        votes, pairs = random_bipartite_votes(rng, 30, 40, 0.25)
        g = project(build_bipartite(votes), threshold=t, backend=backend)
        assert edge_dict(g) == naive_projection(pairs, t)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(0, 4))
def test_monotone_in_threshold(seed, t):
    votes, _ = random_bipartite_votes(np.random.default_rng(seed), 20, 25, 0.3)
    b = build_bipartite(votes)
    lo, hi = edge_dict(project(b, threshold=t)), edge_dict(project(b, threshold=t + 1))
    assert set(hi) <= set(lo)
    assert all(w > t for w in lo.values())


def _variant_fixture(rng):
    votes, _ = random_bipartite_votes(rng, 25, 30, 0.35)
    spaces = {f"p{j:03d}": ("big" if j % 3 else "small") for j in range(30)}
    proposals = [Proposal(p, s, ("a", "b")) for p, s in spaces.items()]
    b = build_bipartite(votes, proposals)
    by_prop = {}
    for v in votes:
        by_prop.setdefault(v.proposal, []).append(v)
    outcomes = {p: rank_outcome(vs, 2) for p, vs in by_prop.items()}
    return b, outcomes


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(0, 3))
def test_variant_subgraph_relations(seed, t):
    b, outcomes = _variant_fixture(np.random.default_rng(seed))
    aa = edge_dict(project(b, "AA", t))
    aw = edge_dict(project(b, "AW", t, outcomes=outcomes))
    ta = edge_dict(project(b, "TA", t, top_spaces={"big"}))
    tw = edge_dict(project(b, "TW", t, outcomes=outcomes, top_spaces={"big"}))
    for sub in (aw, ta, tw):
        assert set(sub) <= set(aa)
        assert all(sub[k] <= aa[k] for k in sub)
    assert set(tw) <= set(aw) and set(tw) <= set(ta)


def test_weight_bounded_by_degrees_and_symmetric():
    votes, _ = random_bipartite_votes(np.random.default_rng(7), 30, 40, 0.3)
    b = build_bipartite(votes)
    g = project(b, threshold=1)
    deg = dict(zip(b.users, b.user_degrees()))
    for (u, v), w in edge_dict(g).items():
        assert u < v
        assert w <= min(deg[u], deg[v])
    indptr, indices, w = g.csr()
    dense = np.zeros((g.n_nodes, g.n_nodes))
    for i in range(g.n_nodes):
        dense[i, indices[indptr[i]:indptr[i + 1]]] = w[indptr[i]:indptr[i + 1]]
    assert np.array_equal(dense, dense.T)


def test_configuration_errors():
    b = build_bipartite(co_votes(3))
    with pytest.raises(ConfigurationError):
        project(b, "XX")
    with pytest.raises(ConfigurationError):
        project(b, "AW", 0)
    with pytest.raises(ConfigurationError):
        project(b, "AW", 0, outcomes={})
    with pytest.raises(ConfigurationError):
        project(b, "TA", 0, top_spaces={"x"})
    with pytest.raises(ConfigurationError):
        project(b, threshold=-1)


def test_contributor_flags_and_giant_component():
    votes = co_votes(3)
    for j in range(3):
        votes += [Vote(addr(5), f"z{j}", 0, 1.0), Vote(addr(6), f"z{j}", 0, 1.0), Vote(addr(7), f"z{j}", 0, 1.0)]
    g = project(build_bipartite(votes), threshold=2, contributors={addr(2), addr(6)})
    assert g.n_nodes == 5 and g.contributor.sum() == 2
    giant = g.giant_component()
    assert set(giant.nodes) == {addr(5), addr(6), addr(7)}
    assert giant.n_edges == 3


def test_top_spaces_by_tvl_orders_and_breaks_ties():
    assert top_spaces_by_tvl({"a": 1.0, "b": 5.0, "c": 5.0}, 2) == {"b", "c"}
    assert top_spaces_by_tvl({"a": 1.0, "b": 5.0, "c": 5.0}, 1) == {"b"}
