"""Day-by-day replay of voting power before each poll and majority-shift detection."""
from __future__ import annotations

from collections.abc import Iterable, Mapping, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .artifacts import write_csv, write_json
from .errors import ProviderError
from .model import Proposal, Vote, contributor_index, latest_votes, option_totals, rank_totals
from .strategy import BalanceProvider, compute_power

BLOCKS_PER_DAY = 86400 // 15
LOOKBACK_DAYS = 100

# day markers besides an option index
TRUNCATED = "truncated"
INDETERMINATE = "indeterminate"
NO_POWER = "no-power"


def sample_block(h_tau: int, t: int) -> int | None:
    """Block ``t`` days before ``h_tau``; ``None`` once the chain history runs out."""
    h = h_tau - BLOCKS_PER_DAY * t
    return h if h > 0 else None


@dataclass(frozen=True)
class ShiftSeries:
    """``decisions[t]`` is the hypothetical decision ``t`` days before the poll, or a marker."""

    proposal: str
    space: str
    decisions: tuple
    shift_days: tuple[int, ...]
    contributor_voted: bool = False
    same_space_contributor_voted: bool = False

    @property
    def n_shifts(self) -> int:
        return len(self.shift_days)

    @property
    def lookback(self) -> int:
        return len(self.decisions) - 1

    def days_marked(self, marker: str) -> list[int]:
        return [t for t, d in enumerate(self.decisions) if d == marker]

    def to_json(self) -> dict:
        return {
            "proposal": self.proposal,
            "space": self.space,
            "decisions": list(self.decisions),
            "shift_days": list(self.shift_days),
            "n_shifts": self.n_shifts,
            "truncated_days": self.days_marked(TRUNCATED),
            "indeterminate_days": self.days_marked(INDETERMINATE),
            "contributor_voted": self.contributor_voted,
            "same_space_contributor_voted": self.same_space_contributor_voted,
        }


def replay_day(proposal: Proposal, votes: Sequence[Vote], provider: BalanceProvider, height: int):
    """(decision or marker, per-voter weights) with every choice fixed and power read at ``height``."""
    try:
        weights = [compute_power(v, proposal, provider, height) for v in votes]
    except ProviderError:
        return INDETERMINATE, None
    if not any(w > 0 for w in weights):
        return NO_POWER, weights
    return rank_totals(option_totals(votes, proposal.n_options, weights)).decision, weights


def decision_at(proposal: Proposal, votes: Sequence[Vote], provider: BalanceProvider, height: int):
    return replay_day(proposal, votes, provider, height)[0]


def shift_days_of(decisions: Sequence) -> tuple[int, ...]:
    """Days ``t`` whose decision differs from day ``t+1``, both being actual decisions."""
    days = []
    for t in range(len(decisions) - 2, -1, -1):
        a, b = decisions[t + 1], decisions[t]
        if isinstance(a, int) and isinstance(b, int) and a != b:
            days.append(t)
    return tuple(sorted(days))


def detect_shifts(
    proposal: Proposal,
    votes: Iterable[Vote],
    provider: BalanceProvider,
    lookback: int = LOOKBACK_DAYS,
    contributions: Mapping[str, frozenset] | None = None,
) -> ShiftSeries:
    votes = sorted((v for v in latest_votes(votes) if v.proposal == proposal.id), key=lambda v: v.user)
    decisions = []
    active = [False] * len(votes)
    for t in range(lookback + 1):
        h = sample_block(proposal.block_height, t)
        if h is None:
            decisions.append(TRUNCATED)
            continue
        d, weights = replay_day(proposal, votes, provider, h)
        decisions.append(d)
        if weights is not None:
            active = [a or w > 0 for a, w in zip(active, weights)]
    contributions = contributions or {}
    # voters without power on any sampled day do not count as participants
    voted = [contributions.get(v.user, frozenset()) for v, a in zip(votes, active) if a]
    return ShiftSeries(
        proposal=proposal.id,
        space=proposal.space,
        decisions=tuple(decisions),
        shift_days=shift_days_of(decisions),
        contributor_voted=any(bool(s) for s in voted),
        same_space_contributor_voted=any(proposal.space in s for s in voted),
    )


def detect_all(
    proposals: Iterable[Proposal],
    votes: Iterable[Vote],
    provider: BalanceProvider,
    lookback: int = LOOKBACK_DAYS,
    contributions=(),
    workers: int = 1,
) -> list[ShiftSeries]:
    by_prop: dict[str, list[Vote]] = {}
    for v in votes:
        by_prop.setdefault(v.proposal, []).append(v)
    cindex = contributor_index(contributions)
    todo = sorted(proposals, key=lambda p: p.id)

    def run(p):
        return detect_shifts(p, by_prop.get(p.id, []), provider, lookback, cindex)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(run, todo))
    return [run(p) for p in todo]


@dataclass(frozen=True)
class ShiftSummary:
    histogram: tuple[int, ...]
    n_proposals: int
    n_shifted: int
    median: float | None
    std: float | None
    max: int
    median_shifted: float | None
    std_shifted: float | None
    contributor_in_shifted: int
    same_space_contributor_in_shifted: int

    def rows(self) -> list[dict]:
        return [{"day_offset": t, "shift_count": c} for t, c in enumerate(self.histogram)]

    def to_json(self) -> dict:
        return {
            "n_proposals": self.n_proposals,
            "n_shifted": self.n_shifted,
            "total_shifts": sum(self.histogram),
            "median": self.median,
            "std": self.std,
            "max": self.max,
            "median_shifted": self.median_shifted,
            "std_shifted": self.std_shifted,
            "contributor_in_shifted": self.contributor_in_shifted,
            "same_space_contributor_in_shifted": self.same_space_contributor_in_shifted,
        }


def _spread(x: list[int]) -> tuple[float | None, float | None]:
    if not x:
        return None, None
    a = np.asarray(x, dtype=np.float64)
    return float(np.median(a)), (float(np.std(a, ddof=1)) if len(a) > 1 else None)


def aggregate_shifts(series: Iterable[ShiftSeries], lookback: int = LOOKBACK_DAYS) -> ShiftSummary:
    series = list(series)
    hist = [0] * lookback
    for s in series:
        for t in s.shift_days:
            hist[t] += 1
    counts = [s.n_shifts for s in series]
    shifted = [s for s in series if s.n_shifts]
    med, std = _spread(counts)
    med_s, std_s = _spread([s.n_shifts for s in shifted])
    return ShiftSummary(
        histogram=tuple(hist),
        n_proposals=len(series),
        n_shifted=len(shifted),
        median=med,
        std=std,
        max=max(counts, default=0),
        median_shifted=med_s,
        std_shifted=std_s,
        contributor_in_shifted=sum(s.contributor_voted for s in shifted),
        same_space_contributor_in_shifted=sum(s.same_space_contributor_voted for s in shifted),
    )


def write_histogram(path, summary: ShiftSummary, meta=None) -> None:
    write_csv(path, ("day_offset", "shift_count"), summary.rows(), meta)


def write_series(path, series: Sequence[ShiftSeries], meta=None) -> None:
    write_json(path, [s.to_json() for s in series], meta)


def per_space_counts(series: Iterable[ShiftSeries]) -> list[dict]:
    acc: dict[str, list[int]] = {}
    for s in series:
        acc.setdefault(s.space, []).append(s.n_shifts)
    return [
        {"space": k, "n_proposals": len(v), "n_shifted": sum(1 for x in v if x), "n_shifts": sum(v)}
        for k, v in sorted(acc.items())
    ]


__all__ = [
    "BLOCKS_PER_DAY", "LOOKBACK_DAYS", "ShiftSeries", "ShiftSummary", "aggregate_shifts", "decision_at",
    "detect_all", "detect_shifts", "per_space_counts", "sample_block", "shift_days_of",
]
