"""Fixture builders shared between unit and acceptance tests."""
from __future__ import annotations

import numpy as np

from conftest import addr
from daogov.ingestion import DatasetBundle
from daogov.model import Contribution, Proposal, Space, Vote

N_FILLERS = 501


def _proposal(pid, space, votes, **kw):
    totals = [0.0, 0.0]
    for _, opt, w in votes:
        totals[opt] += w
    kw.setdefault("reported_scores", tuple(totals))
    p = Proposal(pid, space, ("yes", "no"), block_height=1000, **kw)
    return p, [Vote(addr(u), pid, opt, w, 1) for u, opt, w in votes]


def cleaning_fixture() -> DatasetBundle:
    """Spaces and proposals straddling every cleaning boundary.

    501 filler spaces outrank the two boundary spaces on every feature, so
    those two live or die by TVL alone. The host space carries one proposal
    per proposal rule plus two that must survive.
    """
    spaces, proposals, votes = [], [], []

    def add(p_and_v):
        proposals.append(p_and_v[0])
        votes.extend(p_and_v[1])

    for i in range(N_FILLERS):
        sid = f"filler-{i:03d}.eth"
        spaces.append(Space(sid, follower_count=1000 + i, tvl_usd=1e9))
        add(_proposal(f"{sid}/busy", sid, [(100 + k, 0, 1.0) for k in range(11)]))
        add(_proposal(f"{sid}/quiet", sid, []))

    spaces.append(Space("below.eth", tvl_usd=99_999.0))
    spaces.append(Space("at.eth", tvl_usd=100_000.0))
    spaces.append(Space("host.eth", follower_count=10**6, tvl_usd=1e10))
    add(_proposal("below/p", "below.eth", [(1, 0, 2.0), (2, 1, 1.0), (3, 0, 1.0)]))
    add(_proposal("at/p", "at.eth", [(1, 0, 2.0), (2, 1, 1.0), (3, 0, 1.0)]))

    three = [(1, 0, 5.0), (2, 1, 3.0), (3, 0, 1.0)]
    add(_proposal("host/final", "host.eth", three))
    add(_proposal("host/pending", "host.eth", three, status="pending"))
    add(_proposal("host/weighted", "host.eth", three, vote_type="weighted"))
    add(_proposal("host/perturbed", "host.eth", three, reported_scores=(6.0 * 1.01, 3.0)))
    add(_proposal("host/nudged", "host.eth", three, reported_scores=(6.0 * (1 + 1e-8), 3.0)))

    contributions = [
        Contribution(addr(1), "below.eth", frozenset({"owner"})),
        Contribution(addr(1), "host.eth", frozenset({"developer"})),
    ]
    return DatasetBundle(tuple(spaces), tuple(proposals), tuple(votes), tuple(contributions))


EXPECTED_REMOVED = {
    "spaces": {"immature_space": 1},
    "proposals": {"immature_space": 1, "non_final": 1, "non_single_choice": 1, "score_inconsistent": 1},
    "votes": {"immature_space": 3, "non_final": 3, "non_single_choice": 3, "score_inconsistent": 3},
    "contributions": {"immature_space": 1},
}


def zipf_pairs(n_votes, n_users, n_props, seed=0, a=1.3):
    """Distinct (user, proposal) pairs with Zipf-distributed user activity and proposal popularity."""
    rng = np.random.default_rng(seed)
    ranks_u = np.arange(1, n_users + 1, dtype=np.float64)
    ranks_p = np.arange(1, n_props + 1, dtype=np.float64)
    pu = ranks_u ** -a / np.sum(ranks_u ** -a)
    pp = ranks_p ** -a / np.sum(ranks_p ** -a)
    seen = set()
    out_u, out_p = [], []
    while len(out_u) < n_votes:
        need = n_votes - len(out_u)
        us = rng.choice(n_users, size=2 * need, p=pu)
        ps = rng.choice(n_props, size=2 * need, p=pp)
        for u, p in zip(us.tolist(), ps.tolist()):
            if (u, p) not in seen:
                seen.add((u, p))
                out_u.append(u)
                out_p.append(p)
                if len(out_u) == n_votes:
                    break
    return np.array(out_u, dtype=np.int64), np.array(out_p, dtype=np.int64)


def random_metric_case(rng, pid="p", space="S", max_voters=20, user_base=0):
    """Random single-choice proposal with contributor classes; weights are exact multiples of 1/64.

    Returns the proposal, its votes, the contributions and the oracle input
    list of (weight, option, class).
    """
    n_opt = int(rng.integers(2, 5))
    n_voters = int(rng.integers(1, max_voters + 1))
    votes, contributions, oracle = [], [], []
    for k in range(n_voters):
        user = addr(10_000 + user_base + k)
        w = float(rng.integers(1, 64 * 50)) / 64.0
        # a few concentrated options make decisive wins and ties both happen
        opt = int(rng.integers(0, n_opt)) if rng.random() < 0.7 else 0
        cls = str(rng.choice(["same", "other", "none"], p=[0.3, 0.2, 0.5]))
        if cls == "same":
            contributions.append(Contribution(user, space, frozenset({"developer"})))
        elif cls == "other":
            contributions.append(Contribution(user, space + "-elsewhere", frozenset({"owner"})))
        votes.append(Vote(user, pid, opt, w, k))
        oracle.append((w, opt, cls))
    p = Proposal(pid, space, tuple(f"o{i}" for i in range(n_opt)))
    return p, votes, contributions, oracle


def random_bipartite_votes(rng, n_users, n_props, density):
    """Votes for a random user x proposal incidence; returns (votes, pairs as address/proposal ids)."""
    hits = rng.random((n_users, n_props)) < density
    votes, pairs = [], []
    for u, p in zip(*np.nonzero(hits)):
        votes.append(Vote(addr(int(u) + 1), f"p{int(p):03d}", int(rng.integers(0, 2)), 1.0, int(rng.integers(0, 100))))
        pairs.append((addr(int(u) + 1), f"p{int(p):03d}"))
    return votes, pairs
