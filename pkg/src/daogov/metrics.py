"""Contributor involvement, self-decisions and other-space decisions per space."""
from __future__ import annotations

import logging
import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateProposalError, EmptyDomainError, ValidationError
from .model import (
    Outcome,
    Proposal,
    Vote,
    VoteClass,
    VoteIndex,
    classify_vote,
    contributor_index,
    rank_outcome,
)

log = logging.getLogger(__name__)

# self-decision ranking display cut-off (fraction of proposals)
DISPLAY_THRESHOLD = 0.001


@dataclass(frozen=True)
class NormalizedVote:
    vote: Vote
    w_tilde: float
    vote_class: VoteClass = VoteClass.NON_CONTRIBUTOR


def normalize_proposal(votes: Sequence[Vote], classes: Sequence[VoteClass] | None = None) -> list[NormalizedVote]:
    """Divide every weight by the proposal total.

    Raises :class:`DegenerateProposalError` when the total is zero.
    """
    for v in votes:
        if v.reported_weight < 0:
            raise ValidationError(f"vote {v.key}: negative weight")
    total = math.fsum(v.reported_weight for v in votes)
    if total <= 0:
        raise DegenerateProposalError("proposal has zero total voting power")
    if classes is None:
        classes = [VoteClass.NON_CONTRIBUTOR] * len(votes)
    return [NormalizedVote(v, v.reported_weight / total, c) for v, c in zip(votes, classes)]


@dataclass(frozen=True)
class ProposalTerms:
    """Per-proposal weight sums feeding the decision predicates.

    Sums are kept in reported (unnormalized) units: the predicates are
    scale-invariant, and comparing exactly rounded raw sums avoids ties
    flipping through the rounding of individual normalized weights.
    """

    proposal: str
    outcome: Outcome
    total: float
    contributor: float
    decisive_self: float
    self_complement: float
    runner_up: float
    decisive_other: float
    other_complement: float
    same_space_runner_up: float

    @property
    def contributor_share(self) -> float:
        return self.contributor / self.total

    def normalized(self, name: str) -> float:
        return getattr(self, name) / self.total

    @property
    def self_decided(self) -> bool:
        return self.decisive_self > self.self_complement and self.decisive_self > self.runner_up

    @property
    def other_decided(self) -> bool:
        return (
            self.decisive_other > self.other_complement
            and self.decisive_other > self.same_space_runner_up
            and self.same_space_runner_up > 0
        )


def proposal_terms(proposal: Proposal, normalized: Sequence[NormalizedVote]) -> ProposalTerms:
    n = proposal.n_options
    outcome = rank_outcome([nv.vote for nv in normalized], n)
    win, second = outcome.decision, outcome.runner_up
    contrib, win_ss, win_not_ss, win_os, win_not_os, sec_all, sec_ss = [], [], [], [], [], [], []
    for nv in normalized:
        cls = nv.vote_class
        weight = nv.vote.reported_weight
        if cls.is_contributor:
            contrib.append(weight)
        for opt, share in nv.vote.allocation(n):
            w = weight * share
            if opt == win:
                (win_ss if cls is VoteClass.SAME_SPACE else win_not_ss).append(w)
                (win_os if cls is VoteClass.OTHER_SPACE else win_not_os).append(w)
            elif opt == second:
                sec_all.append(w)
                if cls is VoteClass.SAME_SPACE:
                    sec_ss.append(w)
    return ProposalTerms(
        proposal=proposal.id,
        outcome=outcome,
        total=math.fsum(nv.vote.reported_weight for nv in normalized),
        contributor=math.fsum(contrib),
        decisive_self=math.fsum(win_ss),
        self_complement=math.fsum(win_not_ss),
        runner_up=math.fsum(sec_all),
        decisive_other=math.fsum(win_os),
        other_complement=math.fsum(win_not_os),
        same_space_runner_up=math.fsum(sec_ss),
    )


ProposalItems = Sequence[tuple[Proposal, Sequence[NormalizedVote]]]


@dataclass(frozen=True)
class SpaceInvolvement:
    space: str
    mean: float
    median: float
    std: float | None
    min: float
    max: float
    n_proposals: int


@dataclass(frozen=True)
class SelfDecisionScore:
    space: str
    delta: float
    n_decided: int
    n_proposals: int
    n_tied: int = 0
    n_skipped: int = 0
    decided: tuple[str, ...] = ()


@dataclass(frozen=True)
class OtherDecisions:
    space: str
    flags: dict[str, bool]
    n_tied: int = 0
    n_skipped: int = 0

    @property
    def n_flagged(self) -> int:
        return sum(self.flags.values())


def contributor_share(votes: Sequence[NormalizedVote]) -> float:
    """Contributors' part of the proposal's total voting power."""
    total = math.fsum(nv.vote.reported_weight for nv in votes)
    return math.fsum(nv.vote.reported_weight for nv in votes if nv.vote_class.is_contributor) / total


def contributor_involvement(space: str, items: ProposalItems) -> SpaceInvolvement:
    if not items:
        raise EmptyDomainError(f"space {space}: no proposals to average over")
    shares = np.array([contributor_share(votes) for _, votes in items])
    # fsum keeps the mean order-independent
    mean = math.fsum(shares) / len(shares)
    return SpaceInvolvement(
        space=space,
        mean=mean,
        median=float(np.median(shares)),
        std=float(np.std(shares, ddof=1)) if len(shares) > 1 else None,
        min=float(shares.min()),
        max=float(shares.max()),
        n_proposals=len(shares),
    )


def _decidable(space: str, items: ProposalItems):
    """Yield terms for proposals with >=2 options and no tie at the top."""
    tied = skipped = 0
    terms = []
    for proposal, votes in items:
        if proposal.n_options < 2:
            log.warning("space %s: proposal %s has a single option, skipped", space, proposal.id)
            skipped += 1
            continue
        t = proposal_terms(proposal, votes)
        if t.outcome.tie_at_top:
            tied += 1
            continue
        terms.append(t)
    return terms, tied, skipped


def self_decisions(space: str, items: ProposalItems) -> SelfDecisionScore:
    terms, tied, skipped = _decidable(space, items)
    decided = tuple(t.proposal for t in terms if t.self_decided)
    n = len(terms)
    return SelfDecisionScore(
        space=space,
        delta=len(decided) / n if n else 0.0,
        n_decided=len(decided),
        n_proposals=n,
        n_tied=tied,
        n_skipped=skipped,
        decided=decided,
    )


def other_decisions(space: str, items: ProposalItems) -> OtherDecisions:
    terms, tied, skipped = _decidable(space, items)
    return OtherDecisions(space, {t.proposal: t.other_decided for t in terms}, tied, skipped)


# --- bundle-level driver ----------------------------------------------------


@dataclass
class SpaceItems:
    space: str
    items: list[tuple[Proposal, list[NormalizedVote]]] = field(default_factory=list)
    n_degenerate: int = 0
    degenerate: list[str] = field(default_factory=list)


def group_by_space(proposals: Iterable[Proposal], votes: Iterable[Vote], contributions) -> dict[str, SpaceItems]:
    """Normalize every proposal's deduplicated votes and group by space."""
    index = VoteIndex.build(votes)
    contrib = contributor_index(contributions)
    out: dict[str, SpaceItems] = {}
    for p in sorted(proposals, key=lambda p: (p.space, p.id)):
        group = out.setdefault(p.space, SpaceItems(p.space))
        vs = index.get(p.id)
        classes = [classify_vote(v, contrib, p.space) for v in vs]
        try:
            group.items.append((p, normalize_proposal(vs, classes)))
        except DegenerateProposalError:
            group.n_degenerate += 1
            group.degenerate.append(p.id)
    return out


@dataclass(frozen=True)
class SpaceMetrics:
    involvement: SpaceInvolvement | None
    self_decision: SelfDecisionScore
    other: OtherDecisions
    n_degenerate: int

    @property
    def space(self) -> str:
        return self.self_decision.space

    def row(self) -> dict:
        inv = self.involvement
        return {
            "space": self.space,
            "n_proposals": inv.n_proposals if inv else 0,
            "mean": inv.mean if inv else "",
            "max": inv.max if inv else "",
            "std": "" if inv is None or inv.std is None else inv.std,
            "min": inv.min if inv else "",
            "median": inv.median if inv else "",
            "self_decisions": self.self_decision.delta,
            "n_self_decided": self.self_decision.n_decided,
            "n_decidable": self.self_decision.n_proposals,
            "n_tied": self.self_decision.n_tied,
            "n_degenerate": self.n_degenerate,
            "n_other_decided": self.other.n_flagged,
        }


SPACE_METRIC_COLUMNS = (
    "space", "n_proposals", "mean", "max", "std", "min", "median",
    "self_decisions", "n_self_decided", "n_decidable", "n_tied", "n_degenerate", "n_other_decided",
)


def space_metrics(proposals, votes, contributions) -> list[SpaceMetrics]:
    out = []
    for sid, group in group_by_space(proposals, votes, contributions).items():
        inv = contributor_involvement(sid, group.items) if group.items else None
        out.append(
            SpaceMetrics(inv, self_decisions(sid, group.items), other_decisions(sid, group.items), group.n_degenerate)
        )
    return out
