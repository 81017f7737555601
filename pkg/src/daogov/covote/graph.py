"""Bipartite user-proposal graph and its thresholded user projections."""
from __future__ import annotations

from collections.abc import Iterable, Mapping
from dataclasses import dataclass

import networkx as nx
import numpy as np
from scipy.sparse import csgraph
import scipy.sparse as sp

from ..errors import ConfigurationError
from ..model import Outcome, Proposal, Vote, latest_votes
from .kernels import count_copairs

VARIANTS = ("AA", "AW", "TA", "TW")
DEFAULT_THRESHOLD = 10
MULTI_OPTION = -1


@dataclass(frozen=True)
class BipartiteVoteGraph:
    """Users x proposals incidence with the chosen option on each edge.

    Magnitude-vector votes carry option ``-1``.
    """

    users: tuple[str, ...]
    proposals: tuple[str, ...]
    user_idx: np.ndarray
    proposal_idx: np.ndarray
    option: np.ndarray
    proposal_space: tuple[str, ...] | None = None

    @property
    def n_edges(self) -> int:
        return len(self.user_idx)

    def user_degrees(self) -> np.ndarray:
        return np.bincount(self.user_idx, minlength=len(self.users))

    def proposal_degrees(self) -> np.ndarray:
        return np.bincount(self.proposal_idx, minlength=len(self.proposals))


def build_bipartite(votes: Iterable[Vote], proposals: Iterable[Proposal] | None = None) -> BipartiteVoteGraph:
    """One edge per (user, proposal); revotes collapse to the latest timestamp."""
    votes = latest_votes(votes)
    users = tuple(sorted({v.user for v in votes}))
    props = tuple(sorted({v.proposal for v in votes}))
    uix = {u: i for i, u in enumerate(users)}
    pix = {p: i for i, p in enumerate(props)}
    votes.sort(key=lambda v: (uix[v.user], pix[v.proposal]))
    user_idx = np.fromiter((uix[v.user] for v in votes), dtype=np.int64, count=len(votes))
    prop_idx = np.fromiter((pix[v.proposal] for v in votes), dtype=np.int64, count=len(votes))
    option = np.fromiter(
        (v.choice if isinstance(v.choice, int) else MULTI_OPTION for v in votes), dtype=np.int64, count=len(votes)
    )
    spaces = None
    if proposals is not None:
        pmap = {p.id: p.space for p in proposals}
        spaces = tuple(pmap.get(p, "") for p in props)
    return BipartiteVoteGraph(users, props, user_idx, prop_idx, option, spaces)


@dataclass(frozen=True)
class CoVoteGraph:
    """Undirected user graph; edge weight counts co-voted proposals (> threshold)."""

    nodes: tuple[str, ...]
    contributor: np.ndarray
    src: np.ndarray
    dst: np.ndarray
    weight: np.ndarray
    variant: str = "AA"
    threshold: int = DEFAULT_THRESHOLD

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_edges(self) -> int:
        return len(self.src)

    def degrees(self) -> np.ndarray:
        return np.bincount(np.concatenate([self.src, self.dst]), minlength=self.n_nodes)

    def csr(self):
        """Symmetric (indptr, indices, weights) adjacency."""
        rows = np.concatenate([self.src, self.dst])
        cols = np.concatenate([self.dst, self.src])
        w = np.concatenate([self.weight, self.weight])
        order = np.lexsort((cols, rows))
        indptr = np.zeros(self.n_nodes + 1, dtype=np.int64)
        np.cumsum(np.bincount(rows, minlength=self.n_nodes), out=indptr[1:])
        return indptr, cols[order].astype(np.int64), w[order]

    def components(self) -> np.ndarray:
        adj = sp.coo_matrix((np.ones(self.n_edges), (self.src, self.dst)), shape=(self.n_nodes, self.n_nodes))
        _, labels = csgraph.connected_components(adj, directed=False)
        return labels

    def subgraph(self, keep: np.ndarray) -> "CoVoteGraph":
        keep = np.asarray(keep, dtype=bool)
        new_id = np.cumsum(keep) - 1
        emask = keep[self.src] & keep[self.dst]
        nodes = tuple(n for n, k in zip(self.nodes, keep) if k)
        return CoVoteGraph(
            nodes, self.contributor[keep], new_id[self.src[emask]], new_id[self.dst[emask]],
            self.weight[emask], self.variant, self.threshold,
        )

    def giant_component(self) -> "CoVoteGraph":
        if self.n_nodes == 0:
            return self
        labels = self.components()
        sizes = np.bincount(labels)
        # ties go to the component holding the lowest node index
        return self.subgraph(labels == int(np.argmax(sizes)))

    def to_networkx(self, inverse_distance: bool = True) -> nx.Graph:
        g = nx.Graph()
        for i, (addr, c) in enumerate(zip(self.nodes, self.contributor)):
            g.add_node(i, address=addr, contributor=bool(c))
        for a, b, w in zip(self.src.tolist(), self.dst.tolist(), self.weight.tolist()):
            g.add_edge(a, b, weight=float(w), distance=1.0 / w if inverse_distance else float(w))
        return g


def winners_from(outcomes: Mapping[str, Outcome], bipartite: BipartiteVoteGraph) -> np.ndarray:
    missing = [p for p in bipartite.proposals if p not in outcomes]
    if missing:
        raise ConfigurationError(f"winning-vote projection needs outcomes for every proposal; missing {missing[:5]}")
    return np.array([outcomes[p].decision for p in bipartite.proposals], dtype=np.int64)


def top_spaces_by_tvl(tvl: Mapping[str, float], n: int = 100) -> frozenset[str]:
    ranked = sorted(tvl.items(), key=lambda kv: (-kv[1], kv[0]))
    return frozenset(s for s, _ in ranked[:n])


def project(
    bipartite: BipartiteVoteGraph,
    variant: str = "AA",
    threshold: int = DEFAULT_THRESHOLD,
    outcomes: Mapping[str, Outcome] | None = None,
    top_spaces: Iterable[str] | None = None,
    contributors: Iterable[str] = (),
    backend: str | None = None,
) -> CoVoteGraph:
    """Monopartite projection on users keeping pairs with more than ``threshold`` co-votes.

    ``AW``/``TW`` count only votes for each proposal's decision (needs
    ``outcomes``); ``TA``/``TW`` count only proposals of ``top_spaces``.
    Users whose own vote count is at most ``threshold`` are pruned before
    counting, since no pair involving them can pass.
    """
    if variant not in VARIANTS:
        raise ConfigurationError(f"unknown variant {variant!r}; expected one of {VARIANTS}")
    if threshold < 0:
        raise ConfigurationError("threshold must be non-negative")
    mask = np.ones(bipartite.n_edges, dtype=bool)
    if variant in ("AW", "TW"):
        if outcomes is None:
            raise ConfigurationError(f"variant {variant} needs proposal outcomes")
        winners = winners_from(outcomes, bipartite)
        mask &= bipartite.option == winners[bipartite.proposal_idx]
    if variant in ("TA", "TW"):
        if top_spaces is None or bipartite.proposal_space is None:
            raise ConfigurationError(f"variant {variant} needs the top-space set and proposal spaces")
        top = frozenset(top_spaces)
        in_top = np.array([s in top for s in bipartite.proposal_space], dtype=bool).reshape(-1)
        mask &= in_top[bipartite.proposal_idx]

    u = bipartite.user_idx[mask]
    p = bipartite.proposal_idx[mask]
    deg = np.bincount(u, minlength=len(bipartite.users))
    active = deg > threshold
    keep = active[u]
    u, p = u[keep], p[keep]
    users_kept = np.flatnonzero(active)
    compact = np.full(len(bipartite.users), -1, dtype=np.int64)
    compact[users_kept] = np.arange(len(users_kept))
    src, dst, w = count_copairs(compact[u], p, len(users_kept), len(bipartite.proposals), threshold, backend)

    src_u, dst_u = users_kept[src], users_kept[dst]
    node_users = np.unique(np.concatenate([src_u, dst_u]))
    node_id = np.full(len(bipartite.users), -1, dtype=np.int64)
    node_id[node_users] = np.arange(len(node_users))
    contributors = frozenset(contributors)
    nodes = tuple(bipartite.users[i] for i in node_users)
    flags = np.array([n in contributors for n in nodes], dtype=bool)
    return CoVoteGraph(nodes, flags, node_id[src_u], node_id[dst_u], w, variant, threshold)
