"""Reference implementations kept deliberately naive and independent of the package code."""
from __future__ import annotations

from fractions import Fraction
from itertools import combinations

import numpy as np


# --- metrics ------------------------------------------------------------------


def brute_force_terms(n_options, votes):
    """``votes``: list of (weight, option, cls) with cls in {"same", "other", "none"}.

    Exact rational arithmetic; returns the ranked decision, a tie flag and
    the three predicates of interest.
    """
    total = sum(Fraction(w) for w, _, _ in votes)
    wt = [(Fraction(w) / total, o, c) for w, o, c in votes]
    per_opt = [sum((x for x, o, _ in wt if o == k), Fraction(0)) for k in range(n_options)]
    best = max(per_opt)
    winners = [k for k in range(n_options) if per_opt[k] == best]
    win = winners[0]
    rest = [k for k in range(n_options) if k != win]
    second = max(rest, key=lambda k: (per_opt[k], -k))
    tie = len(winners) > 1

    def s(pred):
        return sum((x for x, o, c in wt if pred(o, c)), Fraction(0))

    contrib = s(lambda o, c: c != "none")
    d_self = s(lambda o, c: o == win and c == "same")
    cv = s(lambda o, c: o == win and c != "same")
    o2 = s(lambda o, c: o == second)
    d_other = s(lambda o, c: o == win and c == "other")
    co = s(lambda o, c: o == win and c != "other")
    ss2 = s(lambda o, c: o == second and c == "same")
    return {
        "decision": win,
        "tie": tie,
        "contributor_share": contrib,
        "self_decided": d_self > cv and d_self > o2,
        "other_decided": d_other > co and d_other > ss2 and ss2 > 0,
    }


# --- projection ---------------------------------------------------------------


def naive_projection(pairs, threshold):
    """O(n^2) pairwise intersection of users' proposal sets; {(u, v): weight}."""
    sets = {}
    for u, p in pairs:
        sets.setdefault(u, set()).add(p)
    out = {}
    for a, b in combinations(sorted(sets), 2):
        w = len(sets[a] & sets[b])
        if w > threshold:
            out[(a, b)] = w
    return out


# --- centrality ---------------------------------------------------------------


def dense_pagerank(n, edges, alpha=0.85, tol=1e-13, max_iter=10_000):
    """Power iteration on the dense Google matrix of an undirected weighted graph."""
    a = np.zeros((n, n))
    for u, v, w in edges:
        a[u, v] += w
        a[v, u] += w
    out = a.sum(axis=1)
    p = np.zeros((n, n))
    for i in range(n):
        p[i] = a[i] / out[i] if out[i] > 0 else 1.0 / n
    x = np.full(n, 1.0 / n)
    for _ in range(max_iter):
        nxt = alpha * x @ p + (1 - alpha) / n
        if np.abs(nxt - x).sum() < tol:
            return nxt
        x = nxt
    return x


# --- shifts -------------------------------------------------------------------


def replay_oracle(h_tau, lookback, voters, balance_fn, n_options):
    """Day-by-day decisions and shift days from scratch.

    ``voters``: list of (account, option); ``balance_fn(account, height)``
    gives the voting power, assumed always available.
    """
    decisions = []
    for t in range(lookback + 1):
        h = h_tau - 5760 * t
        if h <= 0:
            decisions.append(None)
            continue
        totals = [0.0] * n_options
        for acct, opt in voters:
            totals[opt] += balance_fn(acct, h)
        if max(totals) <= 0:
            decisions.append(None)
            continue
        decisions.append(min(range(n_options), key=lambda k: (-totals[k], k)))
    days = [t for t in range(lookback) if decisions[t] is not None and decisions[t + 1] is not None
            and decisions[t] != decisions[t + 1]]
    return decisions, days


def histogram_oracle(shift_day_lists, lookback):
    h = np.zeros(lookback, dtype=int)
    for days in shift_day_lists:
        for d in days:
            h[d] += 1
    return h.tolist()
