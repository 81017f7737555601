"""JSON-Lines interchange, TVL matching and the maturity/consistency cleaning pass."""
from __future__ import annotations

import json
import math
import re
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from pathlib import Path

from .errors import IntegrityError, ParseError, ValidationError
from .model import (
    SINGLE_CHOICE,
    Contribution,
    Proposal,
    Space,
    StrategySpec,
    Vote,
    VoteIndex,
    option_totals,
)

FILES = {
    "spaces": "spaces.jsonl",
    "proposals": "proposals.jsonl",
    "votes": "votes.jsonl",
    "contributions": "contributions.jsonl",
    "tvl_records": "tvl.jsonl",
}

RULES = ("immature_space", "non_final", "non_single_choice", "score_inconsistent")
ENTITY_CLASSES = ("spaces", "proposals", "votes", "contributions")

MIN_TVL_USD = 100_000.0
TOP_K = 500
MANY_VOTES = 10
SCORE_RTOL = 1e-6
NAME_JACCARD = 0.5
IDENTIFIER_JACCARD = 0.6


@dataclass(frozen=True)
class TvlRecord:
    name: str
    identifier: str
    tvl_usd: float

    def __post_init__(self):
        if not self.name or not self.identifier:
            raise ValidationError("tvl record needs a non-empty name and identifier")
        tvl = self.tvl_usd
        if isinstance(tvl, bool) or not isinstance(tvl, (int, float)) or not math.isfinite(tvl) or tvl < 0:
            raise ValidationError(f"tvl record {self.identifier}: tvl_usd must be finite and non-negative")
        object.__setattr__(self, "tvl_usd", float(tvl))


@dataclass(frozen=True)
class DatasetBundle:
    spaces: tuple[Space, ...] = ()
    proposals: tuple[Proposal, ...] = ()
    votes: tuple[Vote, ...] = ()
    contributions: tuple[Contribution, ...] = ()
    tvl_records: tuple[TvlRecord, ...] = ()

    def space_map(self) -> dict[str, Space]:
        return {s.id: s for s in self.spaces}

    def proposal_map(self) -> dict[str, Proposal]:
        return {p.id: p for p in self.proposals}

    def counts(self) -> dict[str, int]:
        return {name: len(getattr(self, name)) for name in ENTITY_CLASSES}

    def check_integrity(self) -> None:
        seen = set()
        dupes = [s.id for s in self.spaces if s.id in seen or seen.add(s.id)]
        if dupes:
            raise IntegrityError("duplicate space ids", dupes)
        seen = set()
        dupes = [p.id for p in self.proposals if p.id in seen or seen.add(p.id)]
        if dupes:
            raise IntegrityError("duplicate proposal ids", dupes)
        spaces = {s.id for s in self.spaces}
        bad = [p.id for p in self.proposals if p.space not in spaces]
        if bad:
            raise IntegrityError("proposals reference unknown spaces", bad)
        proposals = self.proposal_map()
        bad = [f"{v.user}->{v.proposal}" for v in self.votes if v.proposal not in proposals]
        if bad:
            raise IntegrityError("votes reference unknown proposals", bad)
        bad = []
        for v in self.votes:
            try:
                v.allocation(proposals[v.proposal].n_options)
            except ValidationError:
                bad.append(f"{v.user}->{v.proposal}")
        if bad:
            raise IntegrityError("votes choose options outside their proposal", bad)


def merge_contributions(contributions: Iterable[Contribution]) -> tuple[Contribution, ...]:
    """One record per (user, space), roles unioned, first-seen order kept."""
    merged: dict[tuple[str, str], set[str]] = {}
    for c in contributions:
        merged.setdefault((c.user, c.space), set()).update(c.roles)
    return tuple(Contribution(u, s, frozenset(r)) for (u, s), r in merged.items())


# --- JSON-Lines codec -------------------------------------------------------


def _strategy_from(obj) -> StrategySpec:
    return StrategySpec(kind=obj["kind"], token_address=obj.get("token_address"), decimals=obj.get("decimals"))


def _strategy_to(s: StrategySpec) -> dict:
    return {"kind": s.kind, "token_address": s.token_address, "decimals": s.decimals}


def _choice_from(raw):
    if isinstance(raw, list):
        return tuple(raw)
    return raw


_DECODERS = {
    "spaces": lambda o: Space(
        id=o["id"],
        follower_count=o.get("follower_count", 0),
        tvl_usd=o.get("tvl_usd"),
        token_accounts=frozenset(o.get("token_accounts", ())),
        name=o.get("name"),
    ),
    "proposals": lambda o: Proposal(
        id=o["id"],
        space=o["space"],
        options=tuple(o["options"]),
        strategies=tuple(_strategy_from(s) for s in o.get("strategies", ())),
        block_height=o["block_height"],
        status=o.get("status", "final"),
        vote_type=o.get("vote_type", SINGLE_CHOICE),
        reported_scores=tuple(o.get("reported_scores", ())),
        created=o.get("created"),
    ),
    "votes": lambda o: Vote(
        user=o["user"],
        proposal=o["proposal"],
        choice=_choice_from(o["choice"]),
        reported_weight=o["reported_weight"],
        timestamp=o.get("timestamp", 0),
    ),
    "contributions": lambda o: Contribution(user=o["user"], space=o["space"], roles=frozenset(o["roles"])),
    "tvl_records": lambda o: TvlRecord(name=o["name"], identifier=o["identifier"], tvl_usd=o["tvl_usd"]),
}

_ENCODERS = {
    "spaces": lambda s: {
        "id": s.id,
        "name": s.name,
        "follower_count": s.follower_count,
        "tvl_usd": s.tvl_usd,
        "token_accounts": sorted(s.token_accounts),
    },
    "proposals": lambda p: {
        "id": p.id,
        "space": p.space,
        "options": list(p.options),
        "strategies": [_strategy_to(s) for s in p.strategies],
        "block_height": p.block_height,
        "status": p.status,
        "vote_type": p.vote_type,
        "reported_scores": list(p.reported_scores),
        "created": p.created,
    },
    "votes": lambda v: {
        "user": v.user,
        "proposal": v.proposal,
        "choice": v.choice if isinstance(v.choice, int) else list(v.choice),
        "reported_weight": v.reported_weight,
        "timestamp": v.timestamp,
    },
    "contributions": lambda c: {"user": c.user, "space": c.space, "roles": sorted(c.roles)},
    "tvl_records": lambda r: {"name": r.name, "identifier": r.identifier, "tvl_usd": r.tvl_usd},
}


def iter_jsonl(path: Path):
    """Yield (line number, object) for every data line, skipping blanks and metadata."""
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(path, lineno, f"invalid JSON ({exc.msg})") from None
            if not isinstance(obj, dict):
                raise ParseError(path, lineno, "expected a JSON object")
            if "_meta" in obj:
                continue
            yield lineno, obj


def _read(kind: str, path: Path) -> list:
    decode = _DECODERS[kind]
    out = []
    for lineno, obj in iter_jsonl(path):
        try:
            out.append(decode(obj))
        except KeyError as exc:
            raise ParseError(path, lineno, f"missing field {exc.args[0]!r}") from None
        except (ValidationError, TypeError, ValueError) as exc:
            raise ParseError(path, lineno, str(exc)) from None
    return out


def load_bundle(source: str | Path | Mapping[str, str | Path]) -> DatasetBundle:
    """Load a bundle from a directory of the standard file names or an explicit mapping.

    Files that do not exist are read as empty. Duplicate contributions for
    the same (user, space) merge by role union; dangling references raise
    :class:`IntegrityError`.
    """
    if isinstance(source, Mapping):
        paths = {k: Path(v) for k, v in source.items()}
        unknown = set(paths) - set(FILES)
        if unknown:
            raise ValueError(f"unknown bundle parts: {sorted(unknown)}")
    else:
        root = Path(source)
        paths = {k: root / name for k, name in FILES.items()}
    parts = {k: (_read(k, p) if p.exists() else []) for k, p in paths.items()}
    parts.setdefault("tvl_records", [])
    bundle = DatasetBundle(
        spaces=tuple(parts.get("spaces", ())),
        proposals=tuple(parts.get("proposals", ())),
        votes=tuple(parts.get("votes", ())),
        contributions=merge_contributions(parts.get("contributions", ())),
        tvl_records=tuple(parts["tvl_records"]),
    )
    bundle.check_integrity()
    return bundle


def dumps_line(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


def bundle_lines(bundle: DatasetBundle) -> dict[str, list[str]]:
    """Serialized JSON-Lines content per file name."""
    return {
        FILES[kind]: [dumps_line(_ENCODERS[kind](item)) for item in getattr(bundle, kind)] for kind in FILES
    }


def dump_bundle(bundle: DatasetBundle, directory: str | Path, meta: dict | None = None) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for name, lines in bundle_lines(bundle).items():
        with open(directory / name, "w", encoding="utf-8") as fh:
            if meta is not None:
                fh.write(dumps_line({"_meta": meta}) + "\n")
            for line in lines:
                fh.write(line + "\n")


# --- TVL matching -----------------------------------------------------------

_TOKEN_SPLIT = re.compile(r"[^0-9a-z]+")


def tokens(text: str) -> frozenset[str]:
    return frozenset(t for t in _TOKEN_SPLIT.split(text.lower()) if t)


def jaccard(a: frozenset, b: frozenset) -> float:
    if not a and not b:
        return 0.0
    return len(a & b) / len(a | b)


@dataclass
class TvlMatchResult:
    tvl: dict[str, float]
    links: dict[str, list[str]]
    unmatched: list[TvlRecord]
    ambiguous: list[dict]

    def to_json(self) -> dict:
        return {
            "tvl": dict(sorted(self.tvl.items())),
            "links": {k: v for k, v in sorted(self.links.items())},
            "unmatched": [_ENCODERS["tvl_records"](r) for r in self.unmatched],
            "ambiguous": self.ambiguous,
        }


def match_tvl(spaces: Iterable[Space], tvl_records: Iterable[TvlRecord]) -> TvlMatchResult:
    """Link protocol TVL entries to spaces.

    Records whose identifier equals a space id link directly. The rest link
    when name-token Jaccard >= 0.5 and identifier-token Jaccard >= 0.6; a
    record passing for several spaces goes to the highest combined score
    (then lowest space id) and is listed under ``ambiguous`` for review.
    All versions linked to one space are summed.
    """
    spaces = sorted(spaces, key=lambda s: s.id)
    by_id = {s.id: s for s in spaces}
    space_tokens = [(s, tokens(s.display_name), tokens(s.id)) for s in spaces]
    links: dict[str, list[TvlRecord]] = {}
    unmatched: list[TvlRecord] = []
    ambiguous: list[dict] = []

    fuzzy = []
    for rec in tvl_records:
        if rec.identifier in by_id:
            links.setdefault(rec.identifier, []).append(rec)
        else:
            fuzzy.append(rec)

    for rec in fuzzy:
        name_t, ident_t = tokens(rec.name), tokens(rec.identifier)
        candidates = []
        for space, s_name, s_ident in space_tokens:
            jn = jaccard(name_t, s_name)
            ji = jaccard(ident_t, s_ident)
            if jn >= NAME_JACCARD and ji >= IDENTIFIER_JACCARD:
                candidates.append((jn + ji, space.id, jn, ji))
        if not candidates:
            unmatched.append(rec)
            continue
        candidates.sort(key=lambda c: (-c[0], c[1]))
        links.setdefault(candidates[0][1], []).append(rec)
        if len(candidates) > 1:
            ambiguous.append(
                {
                    "record": _ENCODERS["tvl_records"](rec),
                    "chosen": candidates[0][1],
                    "candidates": [{"space": c[1], "name_jaccard": c[2], "identifier_jaccard": c[3]} for c in candidates],
                }
            )

    tvl = {sid: math.fsum(r.tvl_usd for r in recs) for sid, recs in links.items()}
    return TvlMatchResult(
        tvl=tvl,
        links={sid: [r.identifier for r in recs] for sid, recs in links.items()},
        unmatched=unmatched,
        ambiguous=ambiguous,
    )


# --- cleaning ---------------------------------------------------------------


@dataclass
class CleaningReport:
    before: dict[str, int]
    after: dict[str, int]
    removed: dict[str, dict[str, int]] = field(default_factory=dict)

    def total_removed(self, entity: str) -> int:
        return sum(self.removed.get(entity, {}).values())

    def to_json(self) -> dict:
        return {"before": self.before, "after": self.after, "removed": self.removed}


def competition_rank(values: Mapping[str, float]) -> dict[str, int]:
    """1 + number of strictly larger values; equal values share a rank."""
    ordered = sorted(values.values(), reverse=True)
    rank_of = {}
    for i, v in enumerate(ordered):
        rank_of.setdefault(v, i + 1)
    return {k: rank_of[v] for k, v in values.items()}


def space_features(bundle: DatasetBundle, tvl: Mapping[str, float], proposals=None) -> dict[str, dict[str, float]]:
    proposals = bundle.proposals if proposals is None else proposals
    index = VoteIndex.build(bundle.votes)
    feats = {
        s.id: {
            "proposals": 0,
            "proposals_many_votes": 0,
            "followers": s.follower_count,
            "tvl_usd": tvl.get(s.id, s.tvl_usd) or 0.0,
        }
        for s in bundle.spaces
    }
    for p in proposals:
        f = feats[p.space]
        f["proposals"] += 1
        if len(index.get(p.id)) > MANY_VOTES:
            f["proposals_many_votes"] += 1
    return feats


def scores_consistent(proposal: Proposal, votes: list[Vote], rtol: float = SCORE_RTOL) -> bool:
    if len(proposal.reported_scores) != proposal.n_options:
        return False
    totals = option_totals(votes, proposal.n_options)
    return all(math.isclose(t, r, rel_tol=rtol, abs_tol=0.0) for t, r in zip(totals, proposal.reported_scores))


def clean(
    bundle: DatasetBundle,
    tvl: Mapping[str, float] | None = None,
    *,
    min_tvl: float = MIN_TVL_USD,
    top_k: int = TOP_K,
) -> tuple[DatasetBundle, CleaningReport]:
    """Drop immature spaces and unusable proposals.

    Proposal rules run first (non-final status, non-single-choice type,
    reported scores disagreeing with the vote sums), then spaces are kept if
    their TVL is at least ``min_tvl`` or they rank within ``top_k`` on any of
    proposal count, proposals with more than ten votes, followers or TVL,
    computed over the surviving proposals. Votes and contributions follow
    their proposal and space.
    """
    tvl = tvl or {}
    index = VoteIndex.build(bundle.votes)
    reason: dict[str, str] = {}
    for p in bundle.proposals:
        if p.status != "final":
            reason[p.id] = "non_final"
        elif p.vote_type != SINGLE_CHOICE:
            reason[p.id] = "non_single_choice"
        elif not scores_consistent(p, index.get(p.id)):
            reason[p.id] = "score_inconsistent"

    kept_props = [p for p in bundle.proposals if p.id not in reason]
    feats = space_features(bundle, tvl, kept_props)
    ranks = {name: competition_rank({s: f[name] for s, f in feats.items()}) for name in
             ("proposals", "proposals_many_votes", "followers", "tvl_usd")}
    kept_spaces = {
        sid
        for sid, f in feats.items()
        if f["tvl_usd"] >= min_tvl or any(r[sid] <= top_k for r in ranks.values())
    }
    for p in kept_props:
        if p.space not in kept_spaces:
            reason[p.id] = "immature_space"

    removed = {cls: dict.fromkeys(RULES, 0) for cls in ENTITY_CLASSES}
    removed["spaces"]["immature_space"] = sum(1 for s in bundle.spaces if s.id not in kept_spaces)
    for r in reason.values():
        removed["proposals"][r] += 1
    votes = []
    for v in bundle.votes:
        r = reason.get(v.proposal)
        if r is None:
            votes.append(v)
        else:
            removed["votes"][r] += 1
    contributions = []
    for c in bundle.contributions:
        if c.space in kept_spaces:
            contributions.append(c)
        else:
            removed["contributions"]["immature_space"] += 1

    out = DatasetBundle(
        spaces=tuple(s for s in bundle.spaces if s.id in kept_spaces),
        proposals=tuple(p for p in bundle.proposals if p.id not in reason),
        votes=tuple(votes),
        contributions=tuple(contributions),
        tvl_records=bundle.tvl_records,
    )
    report = CleaningReport(before=bundle.counts(), after=out.counts(), removed=removed)
    return out, report
