"""Entities of DAO voting: spaces, contributions, proposals, votes, outcomes."""
from __future__ import annotations

import enum
import math
import re
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from typing import Union

from .errors import UnknownProposalError, ValidationError

_ADDRESS_RE = re.compile(r"^0x[0-9a-f]{40}$")

ROLES = frozenset({"owner", "administrator", "developer"})
PROPOSAL_STATUSES = frozenset({"pending", "final", "invalid"})
SINGLE_CHOICE = "single-choice"

# tie tolerance on the two leading aggregates
TIE_RTOL = 1e-12
MAGNITUDE_ATOL = 1e-9


def canonical_address(value: str) -> str:
    """Lowercase a 0x-prefixed 20-byte hex address, rejecting anything else."""
    if not isinstance(value, str):
        raise ValidationError(f"address must be a string, got {type(value).__name__}")
    addr = value.strip().lower()
    if not _ADDRESS_RE.match(addr):
        raise ValidationError(f"not a 20-byte hex address: {value!r}")
    return addr


def _check_weight(value, what):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValidationError(f"{what} must be a number, got {value!r}")
    value = float(value)
    if not math.isfinite(value) or value < 0:
        raise ValidationError(f"{what} must be finite and non-negative, got {value!r}")
    return value


@dataclass(frozen=True)
class Space:
    id: str
    follower_count: int = 0
    tvl_usd: float | None = None
    token_accounts: frozenset[str] = frozenset()
    name: str | None = None

    def __post_init__(self):
        if not self.id:
            raise ValidationError("space id must be non-empty")
        if isinstance(self.follower_count, bool) or not isinstance(self.follower_count, int) or self.follower_count < 0:
            raise ValidationError(f"space {self.id}: follower_count must be a non-negative integer")
        if self.tvl_usd is not None:
            object.__setattr__(self, "tvl_usd", _check_weight(self.tvl_usd, f"space {self.id}: tvl_usd"))
        object.__setattr__(self, "token_accounts", frozenset(canonical_address(a) for a in self.token_accounts))

    @property
    def display_name(self) -> str:
        return self.name or self.id


@dataclass(frozen=True)
class Contribution:
    user: str
    space: str
    roles: frozenset[str]

    def __post_init__(self):
        object.__setattr__(self, "user", canonical_address(self.user))
        roles = frozenset(self.roles)
        if not roles:
            raise ValidationError(f"contribution {self.user}@{self.space}: roles must be non-empty")
        unknown = roles - ROLES
        if unknown:
            raise ValidationError(f"contribution {self.user}@{self.space}: unknown roles {sorted(unknown)}")
        object.__setattr__(self, "roles", roles)


@dataclass(frozen=True)
class StrategySpec:
    """One voting-power strategy attached to a proposal.

    ``kind`` is the strategy name as published by the voting platform:
    ``erc20-balance-of``, ``erc721`` and ``eth-balance`` are understood by
    :mod:`daogov.strategy`; any other name is carried through and rejected at
    evaluation time.
    """

    kind: str
    token_address: str | None = None
    decimals: int | None = None

    def __post_init__(self):
        if not self.kind:
            raise ValidationError("strategy kind must be non-empty")
        if self.token_address is not None:
            object.__setattr__(self, "token_address", canonical_address(self.token_address))
        if self.kind in ("erc20-balance-of", "erc721") and self.token_address is None:
            raise ValidationError(f"strategy {self.kind} requires a token_address")
        if self.decimals is not None:
            if isinstance(self.decimals, bool) or not isinstance(self.decimals, int) or self.decimals < 0:
                raise ValidationError(f"strategy decimals must be a non-negative integer, got {self.decimals!r}")


@dataclass(frozen=True)
class Proposal:
    id: str
    space: str
    options: tuple[str, ...]
    strategies: tuple[StrategySpec, ...] = ()
    block_height: int = 1
    status: str = "final"
    vote_type: str = SINGLE_CHOICE
    reported_scores: tuple[float, ...] = ()
    created: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "options", tuple(self.options))
        object.__setattr__(self, "strategies", tuple(self.strategies))
        object.__setattr__(self, "reported_scores", tuple(float(s) for s in self.reported_scores))
        if isinstance(self.block_height, bool) or not isinstance(self.block_height, int) or self.block_height <= 0:
            raise ValidationError(f"proposal {self.id}: block_height must be a positive integer")
        if self.status not in PROPOSAL_STATUSES:
            raise ValidationError(f"proposal {self.id}: unknown status {self.status!r}")
        if self.vote_type == SINGLE_CHOICE and len(self.options) < 2:
            raise ValidationError(f"proposal {self.id}: single-choice proposals need at least two options")

    @property
    def n_options(self) -> int:
        return len(self.options)


Choice = Union[int, tuple[float, ...]]


@dataclass(frozen=True)
class Vote:
    """A user's vote. ``choice`` is a 0-based option index or a magnitude vector."""

    user: str
    proposal: str
    choice: Choice
    reported_weight: float
    timestamp: int = 0

    def __post_init__(self):
        object.__setattr__(self, "user", canonical_address(self.user))
        object.__setattr__(self, "reported_weight", _check_weight(self.reported_weight, f"vote {self.key}: weight"))
        choice = self.choice
        if isinstance(choice, bool):
            raise ValidationError(f"vote {self.key}: boolean choice")
        if isinstance(choice, int):
            if choice < 0:
                raise ValidationError(f"vote {self.key}: negative option index {choice}")
        else:
            mags = tuple(_check_weight(m, f"vote {self.key}: magnitude") for m in choice)
            if not mags or abs(math.fsum(mags) - 1.0) > MAGNITUDE_ATOL:
                raise ValidationError(f"vote {self.key}: magnitudes must sum to 1, got {mags}")
            object.__setattr__(self, "choice", mags)

    @property
    def key(self) -> tuple[str, str]:
        return (self.user, self.proposal)

    @property
    def is_single(self) -> bool:
        return isinstance(self.choice, int)

    def allocation(self, n_options: int) -> list[tuple[int, float]]:
        """(option, share of weight) pairs; shares sum to 1."""
        if isinstance(self.choice, int):
            if self.choice >= n_options:
                raise ValidationError(
                    f"vote {self.key}: option {self.choice} out of range for {n_options} options"
                )
            return [(self.choice, 1.0)]
        if len(self.choice) != n_options:
            raise ValidationError(
                f"vote {self.key}: magnitude vector has {len(self.choice)} entries, proposal has {n_options} options"
            )
        return [(i, m) for i, m in enumerate(self.choice) if m > 0]


class VoteClass(enum.Enum):
    SAME_SPACE = "same-space"
    OTHER_SPACE = "other-space"
    NON_CONTRIBUTOR = "non-contributor"

    @property
    def is_contributor(self) -> bool:
        return self is not VoteClass.NON_CONTRIBUTOR


@dataclass(frozen=True)
class Outcome:
    ranked_options: tuple[int, ...]
    weights: tuple[float, ...]
    tie_at_top: bool

    @property
    def decision(self) -> int:
        return self.ranked_options[0]

    @property
    def runner_up(self) -> int | None:
        return self.ranked_options[1] if len(self.ranked_options) > 1 else None


def contributor_index(contributions: Iterable[Contribution]) -> dict[str, frozenset[str]]:
    """Map each contributor address to the spaces they contribute to."""
    spaces: dict[str, set[str]] = {}
    for c in contributions:
        spaces.setdefault(c.user, set()).add(c.space)
    return {u: frozenset(s) for u, s in spaces.items()}


ContributionsLike = Union[Mapping[str, frozenset], Iterable[Contribution]]


def _as_index(contributions: ContributionsLike) -> Mapping[str, frozenset]:
    if isinstance(contributions, Mapping):
        return contributions
    return contributor_index(contributions)


def classify_vote(vote: Vote, contributions: ContributionsLike, proposal_space: str) -> VoteClass:
    spaces = _as_index(contributions).get(vote.user)
    if not spaces:
        return VoteClass.NON_CONTRIBUTOR
    if proposal_space in spaces:
        return VoteClass.SAME_SPACE
    return VoteClass.OTHER_SPACE


def classify_votes(
    votes: Iterable[Vote], proposals: Mapping[str, Proposal], contributions: ContributionsLike
) -> list[VoteClass]:
    index = _as_index(contributions)
    out = []
    for v in votes:
        try:
            space = proposals[v.proposal].space
        except KeyError:
            raise UnknownProposalError(f"vote {v.key} references unknown proposal {v.proposal!r}") from None
        out.append(classify_vote(v, index, space))
    return out


def option_totals(votes: Iterable[Vote], n_options: int, weights: Sequence[float] | None = None) -> list[float]:
    """Exactly-rounded per-option sums, independent of vote order."""
    parts: list[list[float]] = [[] for _ in range(n_options)]
    for i, v in enumerate(votes):
        w = v.reported_weight if weights is None else weights[i]
        for opt, share in v.allocation(n_options):
            parts[opt].append(w * share)
    return [math.fsum(p) for p in parts]


def rank_totals(totals: Sequence[float]) -> Outcome:
    order = sorted(range(len(totals)), key=lambda i: (-totals[i], i))
    weights = tuple(totals[i] for i in order)
    tie = False
    if len(weights) >= 2:
        a, b = weights[0], weights[1]
        tie = abs(a - b) <= TIE_RTOL * max(abs(a), abs(b))
    return Outcome(tuple(order), weights, tie)


def rank_outcome(votes_for_proposal: Iterable[Vote], n_options: int) -> Outcome:
    """Rank options by aggregated weight, ties broken by ascending index."""
    return rank_totals(option_totals(votes_for_proposal, n_options))


def latest_votes(votes: Iterable[Vote]) -> list[Vote]:
    """Keep one vote per (user, proposal): the latest by timestamp, later input wins ties."""
    keep: dict[tuple[str, str], Vote] = {}
    for v in votes:
        prev = keep.get(v.key)
        if prev is None or v.timestamp >= prev.timestamp:
            keep[v.key] = v
    return list(keep.values())


@dataclass
class VoteIndex:
    """Votes grouped per proposal, deduplicated to the latest vote per user."""

    by_proposal: dict[str, list[Vote]] = field(default_factory=dict)

    @classmethod
    def build(cls, votes: Iterable[Vote]) -> "VoteIndex":
        grouped: dict[str, list[Vote]] = {}
        for v in latest_votes(votes):
            grouped.setdefault(v.proposal, []).append(v)
        for vs in grouped.values():
            vs.sort(key=lambda v: v.user)
        return cls(grouped)

    def get(self, proposal_id: str) -> list[Vote]:
        return self.by_proposal.get(proposal_id, [])
