"""Weighted node centralities, k-core and contributor vs non-contributor summaries."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import networkx as nx
import numpy as np
import scipy.sparse as sp
from scipy import stats as sst
from scipy.sparse.linalg import eigsh

from ..errors import EmptyDomainError
from .graph import CoVoteGraph
from .kernels import core_numbers

MEASURES = ("pagerank", "closeness", "eigenvector", "betweenness", "kcore")
PAGERANK_ALPHA = 0.85
PAGERANK_TOL = 1e-9
BETWEENNESS_EXACT_BELOW = 10_000
BETWEENNESS_PIVOTS = 500


@dataclass(frozen=True)
class Centralities:
    nodes: tuple[str, ...]
    contributor: np.ndarray
    pagerank: np.ndarray
    closeness: np.ndarray
    eigenvector: np.ndarray
    betweenness: np.ndarray
    kcore: np.ndarray

    def column(self, name: str) -> np.ndarray:
        if name not in MEASURES:
            raise KeyError(name)
        return getattr(self, name)


def _as_array(values: dict, n: int) -> np.ndarray:
    return np.array([values[i] for i in range(n)], dtype=np.float64)


def _eigenvector(g: CoVoteGraph) -> np.ndarray:
    """Leading eigenvector of the weighted adjacency, unit norm, non-negative.

    ARPACK starts from a fixed all-ones vector so reruns agree to the last bit.
    """
    n = g.n_nodes
    rows = np.concatenate([g.src, g.dst])
    cols = np.concatenate([g.dst, g.src])
    w = np.concatenate([g.weight, g.weight]).astype(np.float64)
    a = sp.csr_matrix((w, (rows, cols)), shape=(n, n))
    if n < 3:
        # ARPACK needs at least three nodes; solve densely instead
        _, vecs = np.linalg.eigh(a.toarray())
    else:
        _, vecs = eigsh(a, k=1, which="LA", v0=np.ones(n))
    v = vecs[:, -1]
    v = v if v.sum() >= 0 else -v
    return np.abs(v) / np.linalg.norm(v)


def centralities(
    g: CoVoteGraph,
    seed: int = 0,
    betweenness_exact_below: int = BETWEENNESS_EXACT_BELOW,
    pivots: int = BETWEENNESS_PIVOTS,
    inverse_distance: bool = True,
    backend=None,
) -> Centralities:
    """Centralities on ``g`` (callers pass the giant component).

    Closeness and betweenness read ``1/weight`` as edge length unless
    ``inverse_distance`` is off, in which case the raw weight is the length.
    """
    if g.n_nodes == 0:
        raise EmptyDomainError("giant component is empty")
    n = g.n_nodes
    nxg = g.to_networkx(inverse_distance=inverse_distance)
    pr = _as_array(nx.pagerank(nxg, alpha=PAGERANK_ALPHA, tol=PAGERANK_TOL, weight="weight", max_iter=1000), n)
    clo = _as_array(nx.closeness_centrality(nxg, distance="distance"), n)
    k = None if n < betweenness_exact_below else min(pivots, n)
    btw = _as_array(nx.betweenness_centrality(nxg, k=k, weight="distance", normalized=True, seed=seed), n)
    eig = _eigenvector(g) if g.n_edges else np.zeros(n)
    indptr, indices, _ = g.csr()
    core = core_numbers(indptr, indices, backend)
    return Centralities(g.nodes, g.contributor.astype(bool), pr, clo, eig, btw, core.astype(np.int64))


@dataclass(frozen=True)
class GroupSummary:
    """Location estimate of one measure for one group with a 95% interval."""

    measure: str
    group: str
    n: int
    estimate: float | None
    ci_low: float | None
    ci_high: float | None
    geometric: bool = False

    def row(self) -> dict:
        return {
            "measure": self.measure, "group": self.group, "n": self.n,
            "estimate": self.estimate, "ci_low": self.ci_low, "ci_high": self.ci_high,
            "statistic": "geometric_mean" if self.geometric else "mean",
        }


def mean_ci(x: np.ndarray, level: float = 0.95) -> tuple[float | None, float | None, float | None]:
    x = np.asarray(x, dtype=np.float64)
    if len(x) == 0:
        return None, None, None
    mean = math.fsum(x) / len(x)
    if len(x) < 2:
        return mean, None, None
    sem = float(np.std(x, ddof=1)) / math.sqrt(len(x))
    if sem == 0:
        return mean, mean, mean
    half = float(sst.t.ppf(0.5 + level / 2, len(x) - 1)) * sem
    return mean, mean - half, mean + half


def summarize(values: np.ndarray, measure: str, group: str) -> GroupSummary:
    if measure == "kcore":
        # zeros cannot enter a geometric mean and are left out
        pos = values[values > 0].astype(np.float64)
        m, lo, hi = mean_ci(np.log(pos))
        exp = lambda v: None if v is None else math.exp(v)  # noqa: E731
        return GroupSummary(measure, group, len(pos), exp(m), exp(lo), exp(hi), geometric=True)
    m, lo, hi = mean_ci(values)
    return GroupSummary(measure, group, len(values), m, lo, hi)


def group_summaries(c: Centralities) -> list[GroupSummary]:
    out = []
    for measure in MEASURES:
        col = c.column(measure)
        out.append(summarize(col[c.contributor], measure, "contributor"))
        out.append(summarize(col[~c.contributor], measure, "non-contributor"))
    return out


def welch_test(c: Centralities, measure: str) -> float | None:
    """Two-sided Welch t-test p-value between contributors and the rest (log scale for k-core)."""
    col = c.column(measure).astype(np.float64)
    a, b = col[c.contributor], col[~c.contributor]
    if measure == "kcore":
        a, b = np.log(a[a > 0]), np.log(b[b > 0])
    if len(a) < 2 or len(b) < 2:
        return None
    with warnings.catch_warnings():
        # near-constant groups trigger a precision warning; the p-value is still reported
        warnings.simplefilter("ignore", RuntimeWarning)
        p = sst.ttest_ind(a, b, equal_var=False).pvalue
    return None if np.isnan(p) else float(p)


NODE_COLUMNS = ("address", "contributor_flag", "community", "pagerank", "closeness", "eigenvector", "betweenness", "kcore")


def node_rows(c: Centralities, membership: np.ndarray | None = None) -> list[dict]:
    rows = []
    for i, addr in enumerate(c.nodes):
        rows.append({
            "address": addr,
            "contributor_flag": int(c.contributor[i]),
            "community": "" if membership is None else int(membership[i]),
            "pagerank": float(c.pagerank[i]),
            "closeness": float(c.closeness[i]),
            "eigenvector": float(c.eigenvector[i]),
            "betweenness": float(c.betweenness[i]),
            "kcore": int(c.kcore[i]),
        })
    return rows
