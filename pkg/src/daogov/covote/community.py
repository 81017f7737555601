"""Louvain communities and contributor concentration across them."""
from __future__ import annotations

import logging
from dataclasses import dataclass

import networkx as nx
import numpy as np

from ..errors import EmptyDomainError
from .graph import CoVoteGraph

log = logging.getLogger(__name__)

HHI_MAX = 10_000.0
WELL_MIXED_BELOW = 1500.0
HIGHLY_ABOVE = 2500.0
DEFAULT_REPLICATES = 100_000


@dataclass(frozen=True)
class CommunityAssignment:
    """Community id per node of ``nodes``; id 0 is the largest community."""

    nodes: tuple[str, ...]
    membership: np.ndarray
    modularity: float

    @property
    def n_communities(self) -> int:
        return int(self.membership.max()) + 1 if len(self.membership) else 0

    def sizes(self) -> np.ndarray:
        return np.bincount(self.membership, minlength=self.n_communities)

    def as_dict(self) -> dict[str, int]:
        return dict(zip(self.nodes, self.membership.tolist()))


def canonical_labels(groups: list[set[int]], n: int) -> np.ndarray:
    """Relabel communities by descending size, ties by smallest member."""
    order = sorted(groups, key=lambda c: (-len(c), min(c)))
    labels = np.full(n, -1, dtype=np.int64)
    for cid, members in enumerate(order):
        labels[list(members)] = cid
    return labels


def louvain(g: CoVoteGraph, seed: int = 0, resolution: float = 1.0) -> CommunityAssignment:
    if g.n_nodes == 0:
        raise EmptyDomainError("cannot detect communities on an empty graph")
    nxg = g.to_networkx()
    groups = nx.community.louvain_communities(nxg, weight="weight", resolution=resolution, seed=seed)
    labels = canonical_labels([set(c) for c in groups], g.n_nodes)
    q = nx.community.modularity(nxg, groups, weight="weight", resolution=resolution) if g.n_edges else 0.0
    return CommunityAssignment(g.nodes, labels, float(q))


def hhi(counts) -> float | None:
    """Sum of squared percentage shares; ``None`` when nothing is counted."""
    counts = np.asarray(counts, dtype=np.float64)
    total = counts.sum()
    if total <= 0:
        return None
    pct = 100.0 * counts / total
    return float(np.sum(pct * pct))


def hhi_band(value: float | None) -> str:
    if value is None:
        return "undefined"
    if value < WELL_MIXED_BELOW:
        return "well-mixed"
    if value <= HIGHLY_ABOVE:
        return "moderately concentrated"
    return "highly concentrated"


def chi2_statistic(counts: np.ndarray, sizes: np.ndarray) -> np.ndarray:
    """Pearson statistic of contributor counts against size-proportional expectation.

    ``counts`` may be 2-D (one replicate per row).
    """
    counts = np.asarray(counts, dtype=np.float64)
    sizes = np.asarray(sizes, dtype=np.float64)
    k = counts.sum(axis=-1, keepdims=True)
    expected = k * sizes / sizes.sum()
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(expected > 0, (counts - expected) ** 2 / expected, 0.0)
    return terms.sum(axis=-1)


def bootstrap_chi2(
    membership: np.ndarray, contributor: np.ndarray, replicates: int = DEFAULT_REPLICATES, seed: int = 0,
    chunk: int = 10_000,
) -> tuple[float, float]:
    """(observed statistic, p-value) under uniformly reassigned contributor labels."""
    sizes = np.bincount(membership)
    observed_counts = np.bincount(membership[contributor], minlength=len(sizes))
    k = int(observed_counts.sum())
    observed = float(chi2_statistic(observed_counts, sizes))
    rng = np.random.default_rng(seed)
    hits = 0
    done = 0
    # float noise guard: replicates equal to the observed statistic count as extreme
    cut = observed - 1e-9 * max(1.0, abs(observed))
    while done < replicates:
        size = min(chunk, replicates - done)
        draws = rng.multivariate_hypergeometric(sizes, k, size=size)
        hits += int(np.count_nonzero(chi2_statistic(draws, sizes) >= cut))
        done += size
    return observed, (1 + hits) / (replicates + 1)


@dataclass(frozen=True)
class Concentration:
    assignment: CommunityAssignment
    hhi_contrib: float | None
    hhi_noncontrib: float | None
    share_with_contributor: float
    chi2_stat: float | None
    chi2_p: float | None
    notice: str = ""

    @property
    def band_contrib(self) -> str:
        return hhi_band(self.hhi_contrib)

    @property
    def band_noncontrib(self) -> str:
        return hhi_band(self.hhi_noncontrib)

    def to_json(self) -> dict:
        a = self.assignment
        return {
            "n_communities": a.n_communities,
            "modularity": a.modularity,
            "community_sizes": a.sizes().tolist(),
            "hhi_contrib": self.hhi_contrib,
            "hhi_noncontrib": self.hhi_noncontrib,
            "band_contrib": self.band_contrib,
            "band_noncontrib": self.band_noncontrib,
            "share_with_contributor": self.share_with_contributor,
            "chi2_stat": self.chi2_stat,
            "chi2_p": self.chi2_p,
            "notice": self.notice,
        }


def concentration_of(
    assignment: CommunityAssignment, contributor: np.ndarray, replicates: int = DEFAULT_REPLICATES, seed: int = 0
) -> Concentration:
    contributor = np.asarray(contributor, dtype=bool)
    m = assignment.membership
    nc = assignment.n_communities
    c_counts = np.bincount(m[contributor], minlength=nc)
    n_counts = np.bincount(m[~contributor], minlength=nc)
    share = float(np.count_nonzero(c_counts)) / nc if nc else 0.0
    notice = ""
    stat = p = None
    if nc < 2:
        notice = "fewer than two communities; chi-squared test skipped"
        log.info(notice)
    elif not contributor.any():
        notice = "no contributors in the graph; chi-squared test skipped"
        log.info(notice)
    else:
        stat, p = bootstrap_chi2(m, contributor, replicates, seed)
    return Concentration(assignment, hhi(c_counts), hhi(n_counts), share, stat, p, notice)


def communities_and_concentration(
    g: CoVoteGraph, seed: int = 0, replicates: int = DEFAULT_REPLICATES, resolution: float = 1.0
) -> Concentration:
    """Louvain on the giant component, then HHI and a bootstrap test of contributor spread."""
    giant = g.giant_component()
    assignment = louvain(giant, seed=seed, resolution=resolution)
    return concentration_of(assignment, giant.contributor, replicates, seed)
