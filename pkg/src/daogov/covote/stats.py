"""Descriptive statistics of co-voting networks."""
from __future__ import annotations

import math
from dataclasses import dataclass, fields

import numpy as np

from ..errors import EmptyDomainError
from .community import louvain
from .graph import CoVoteGraph
from .kernels import bfs_path_stats, local_clustering, rewire

APL_EXACT_BELOW = 100_000
APL_SOURCES = 1000
SW_REPLICATES = 5
SWAPS_PER_EDGE = 10


@dataclass(frozen=True)
class PathStats:
    apl: float | None
    diameter: int | None
    n_sources: int
    exact: bool


def _unweighted_csr(src, dst, n):
    rows = np.concatenate([src, dst])
    cols = np.concatenate([dst, src])
    order = np.lexsort((cols, rows))
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(rows, minlength=n), out=indptr[1:])
    return indptr, np.ascontiguousarray(cols[order], dtype=np.int64)


def path_stats(src, dst, n, rng=None, exact_below=APL_EXACT_BELOW, n_sources=APL_SOURCES, backend=None) -> PathStats:
    """Mean shortest-path length over reachable ordered pairs, plus the largest distance seen.

    BFS runs from every node below ``exact_below`` nodes, otherwise from a
    random sample of ``n_sources`` nodes (the diameter is then a lower bound).
    """
    if n < 2:
        return PathStats(None, None, 0, True)
    indptr, indices = _unweighted_csr(np.asarray(src), np.asarray(dst), n)
    exact = n < exact_below
    if exact:
        sources = np.arange(n, dtype=np.int64)
    else:
        rng = rng if rng is not None else np.random.default_rng(0)
        sources = np.sort(rng.choice(n, size=min(n_sources, n), replace=False)).astype(np.int64)
    total, pairs, diameter = bfs_path_stats(indptr, indices, sources, backend)
    if pairs == 0:
        return PathStats(None, None, len(sources), exact)
    return PathStats(total / pairs, diameter, len(sources), exact)


def average_clustering(src, dst, n, backend=None) -> float | None:
    if n == 0:
        return None
    indptr, indices = _unweighted_csr(np.asarray(src), np.asarray(dst), n)
    return math.fsum(local_clustering(indptr, indices, backend)) / n


def degree_assortativity(src, dst, n) -> float | None:
    """Pearson correlation of endpoint degrees over both edge orientations."""
    if len(src) == 0:
        return None
    deg = np.bincount(np.concatenate([src, dst]), minlength=n).astype(np.float64)
    x = np.concatenate([deg[src], deg[dst]])
    y = np.concatenate([deg[dst], deg[src]])
    x -= x.mean()
    y -= y.mean()
    denom = math.sqrt(float(x @ x) * float(y @ y))
    if denom == 0:
        return None
    return float(x @ y) / denom


@dataclass(frozen=True)
class SmallWorld:
    sw: float | None
    apl: float | None
    cc: float | None
    apl_rnd: float | None
    cc_rnd: float | None
    replicates: int


def small_worldliness(
    g: CoVoteGraph,
    replicates: int = SW_REPLICATES,
    swaps_per_edge: int = SWAPS_PER_EDGE,
    seed: int = 0,
    exact_below: int = APL_EXACT_BELOW,
    n_sources: int = APL_SOURCES,
    backend=None,
    observed: PathStats | None = None,
) -> SmallWorld:
    """Clustering gain over path-length gain against degree-preserving rewirings.

    SW = (CC / CC_rnd) / (APL / APL_rnd); well above one for small worlds.
    """
    rng = np.random.default_rng(seed)
    n = g.n_nodes
    ps = observed or path_stats(g.src, g.dst, n, rng, exact_below, n_sources, backend)
    cc = average_clustering(g.src, g.dst, n, backend)
    apls, ccs = [], []
    for _ in range(replicates):
        s, d, _ = rewire(g.src, g.dst, n, swaps_per_edge * g.n_edges, rng, backend)
        rp = path_stats(s, d, n, rng, exact_below, n_sources, backend)
        if rp.apl is not None:
            apls.append(rp.apl)
        ccs.append(average_clustering(s, d, n, backend))
    apl_rnd = math.fsum(apls) / len(apls) if apls else None
    cc_rnd = math.fsum(ccs) / len(ccs) if ccs else None
    sw = None
    if ps.apl and apl_rnd and cc_rnd and cc is not None:
        sw = (cc / cc_rnd) / (ps.apl / apl_rnd)
    return SmallWorld(sw, ps.apl, cc, apl_rnd, cc_rnd, replicates)


# display name for every exported field
TABLE_ROWS = {
    "n_nodes": "Num Nodes",
    "n_edges": "Num Edges",
    "max_degree": "Max Degree",
    "avg_degree": "Avg. Degree",
    "contrib_nodes": "Contr. Nodes",
    "contrib_edges": "Contr. Edges",
    "contrib_max_degree": "Contr. Max. Degree",
    "contrib_avg_degree": "Contr. Avg. Degree",
    "giant_component": "Giant Component",
    "assortativity": "Assortativity",
    "apl": "Avg. Path Length",
    "diameter": "Diameter",
    "clustering": "Clustering",
    "small_worldliness": "Small Worldliness",
    "n_communities": "Louvain Communities",
    "largest_community": "Largest Community",
}


@dataclass(frozen=True)
class NetworkStats:
    """Shares (contributor nodes/edges, giant component, largest community) are fractions."""

    n_nodes: int
    n_edges: int
    max_degree: int
    avg_degree: float
    contrib_nodes: float
    contrib_edges: float
    contrib_max_degree: int
    contrib_avg_degree: float | None
    giant_component: float
    assortativity: float | None
    apl: float | None
    diameter: int | None
    clustering: float | None
    small_worldliness: float | None
    n_communities: int | None
    largest_community: float | None
    apl_exact: bool = True

    def to_json(self) -> dict:
        return {TABLE_ROWS[f.name]: getattr(self, f.name) for f in fields(self) if f.name in TABLE_ROWS}


def network_stats(
    g: CoVoteGraph,
    seed: int = 0,
    sw_replicates: int = SW_REPLICATES,
    swaps_per_edge: int = SWAPS_PER_EDGE,
    exact_below: int = APL_EXACT_BELOW,
    n_sources: int = APL_SOURCES,
    communities: bool = True,
    backend=None,
) -> NetworkStats:
    if g.n_nodes == 0:
        raise EmptyDomainError("network statistics need at least one node")
    n, m = g.n_nodes, g.n_edges
    deg = g.degrees()
    cflag = g.contributor.astype(bool)
    cdeg = deg[cflag]
    touch = cflag[g.src] | cflag[g.dst]

    giant = g.giant_component()
    if giant.n_nodes >= 2:
        ps = path_stats(giant.src, giant.dst, giant.n_nodes, np.random.default_rng(seed), exact_below, n_sources, backend)
        sw = small_worldliness(giant, sw_replicates, swaps_per_edge, seed, exact_below, n_sources, backend, ps)
        apl, diameter, cc, swv = ps.apl, ps.diameter, sw.cc, sw.sw
        exact = ps.exact
    else:
        apl = diameter = cc = swv = None
        exact = True
    n_comm = largest = None
    if communities and giant.n_edges:
        assignment = louvain(giant, seed=seed)
        n_comm = assignment.n_communities
        largest = float(assignment.sizes()[0]) / giant.n_nodes
    return NetworkStats(
        n_nodes=n,
        n_edges=m,
        max_degree=int(deg.max()) if n else 0,
        avg_degree=2.0 * m / n,
        contrib_nodes=float(cflag.sum()) / n,
        contrib_edges=float(touch.sum()) / m if m else 0.0,
        contrib_max_degree=int(cdeg.max()) if len(cdeg) else 0,
        contrib_avg_degree=float(cdeg.mean()) if len(cdeg) else None,
        giant_component=giant.n_nodes / n,
        assortativity=degree_assortativity(giant.src, giant.dst, giant.n_nodes),
        apl=apl,
        diameter=diameter,
        clustering=cc,
        small_worldliness=swv,
        n_communities=n_comm,
        largest_community=largest,
        apl_exact=exact,
    )
