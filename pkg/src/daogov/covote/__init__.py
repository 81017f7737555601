from .centrality import Centralities, GroupSummary, centralities, group_summaries, welch_test
from .community import (
    CommunityAssignment,
    Concentration,
    bootstrap_chi2,
    communities_and_concentration,
    hhi,
    hhi_band,
    louvain,
)
from .contributors import ContributorsNetwork, SpaceProjection, contributors_network
from .graph import VARIANTS, BipartiteVoteGraph, CoVoteGraph, build_bipartite, project, top_spaces_by_tvl
from .stats import NetworkStats, SmallWorld, network_stats, small_worldliness

__all__ = [
    "VARIANTS", "BipartiteVoteGraph", "CoVoteGraph", "build_bipartite", "project", "top_spaces_by_tvl",
    "NetworkStats", "SmallWorld", "network_stats", "small_worldliness",
    "Centralities", "GroupSummary", "centralities", "group_summaries", "welch_test",
    "CommunityAssignment", "Concentration", "bootstrap_chi2", "communities_and_concentration", "hhi", "hhi_band",
    "louvain", "ContributorsNetwork", "SpaceProjection", "contributors_network",
]
