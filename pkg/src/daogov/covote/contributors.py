"""Bipartite space-contributor network and its projection on spaces."""
from __future__ import annotations

from collections import Counter
from collections.abc import Iterable
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse import csgraph

from ..model import Contribution
from .kernels import count_copairs

MIN_COMPONENT_SIZE = 10


@dataclass(frozen=True)
class ContributorsNetwork:
    spaces: tuple[str, ...]
    users: tuple[str, ...]
    space_idx: np.ndarray
    user_idx: np.ndarray
    component: np.ndarray
    component_size: np.ndarray
    min_component_size: int

    @property
    def n_nodes(self) -> int:
        return len(self.spaces) + len(self.users)

    def size_distribution(self) -> dict[int, int]:
        """Component size -> number of components."""
        return dict(sorted(Counter(self.component_size.tolist()).items()))

    def kept_spaces(self) -> np.ndarray:
        """Spaces whose component is larger than the size filter."""
        comp = self.component[: len(self.spaces)]
        return self.component_size[comp] > self.min_component_size


@dataclass(frozen=True)
class SpaceProjection:
    spaces: tuple[str, ...]
    src: np.ndarray
    dst: np.ndarray
    shared: np.ndarray

    def rows(self) -> list[dict]:
        return [
            {"src": self.spaces[a], "dst": self.spaces[b], "weight": int(w)}
            for a, b, w in zip(self.src.tolist(), self.dst.tolist(), self.shared.tolist())
        ]


def contributors_network(
    contributions: Iterable[Contribution], min_component_size: int = MIN_COMPONENT_SIZE, backend=None
) -> tuple[ContributorsNetwork, SpaceProjection]:
    """Link spaces to contributor addresses (roles ignored) and project on spaces.

    Only components with more than ``min_component_size`` nodes, counting
    both spaces and users, enter the projection.
    """
    pairs = sorted({(c.space, c.user) for c in contributions})
    spaces = tuple(sorted({s for s, _ in pairs}))
    users = tuple(sorted({u for _, u in pairs}))
    six = {s: i for i, s in enumerate(spaces)}
    uix = {u: i for i, u in enumerate(users)}
    s_idx = np.array([six[s] for s, _ in pairs], dtype=np.int64)
    u_idx = np.array([uix[u] for _, u in pairs], dtype=np.int64)
    ns, nu = len(spaces), len(users)
    n = ns + nu
    adj = sp.coo_matrix((np.ones(len(pairs)), (s_idx, ns + u_idx)), shape=(n, n))
    _, labels = csgraph.connected_components(adj, directed=False)
    sizes = np.bincount(labels)
    net = ContributorsNetwork(spaces, users, s_idx, u_idx, labels, sizes, min_component_size)

    keep = sizes[labels[s_idx]] > min_component_size
    src, dst, w = count_copairs(s_idx[keep], u_idx[keep], ns, nu, 0, backend)
    return net, SpaceProjection(spaces, src, dst, w)


def component_size_rows(net: ContributorsNetwork) -> list[dict]:
    return [{"component_size": k, "n_components": v} for k, v in net.size_distribution().items()]
