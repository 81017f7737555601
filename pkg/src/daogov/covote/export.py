"""File exports of co-voting graphs and their analysis."""
from __future__ import annotations

from ..artifacts import write_csv, write_json
from .centrality import NODE_COLUMNS, Centralities, node_rows
from .graph import CoVoteGraph
from .stats import NetworkStats

EDGE_COLUMNS = ("src", "dst", "weight")


def edge_rows(g: CoVoteGraph) -> list[dict]:
    return [
        {"src": g.nodes[a], "dst": g.nodes[b], "weight": int(w)}
        for a, b, w in zip(g.src.tolist(), g.dst.tolist(), g.weight.tolist())
    ]


def write_edges(path, g: CoVoteGraph, meta=None) -> None:
    write_csv(path, EDGE_COLUMNS, edge_rows(g), meta)


def write_nodes(path, c: Centralities, membership=None, meta=None) -> None:
    write_csv(path, NODE_COLUMNS, node_rows(c, membership), meta)


def write_stats(path, stats: NetworkStats, meta=None) -> None:
    write_json(path, stats.to_json(), meta)
