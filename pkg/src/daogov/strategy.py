"""Voting power recomputed from chain balances, and validation against reported weights."""
from __future__ import annotations

import json
import logging
import math
import os
import time
from bisect import bisect_right
from collections import Counter, defaultdict
from collections.abc import Callable, Iterable, Mapping
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Protocol

from .errors import ConfigurationError, ProviderError, UnsupportedStrategyError, ValidationError
from .model import Proposal, StrategySpec, Vote, VoteIndex, canonical_address

log = logging.getLogger(__name__)

NATIVE = "eth"
TOLERANCE = 1e-3
ERC20 = "erc20-balance-of"
ERC721 = "erc721"
ETH = "eth-balance"
RPC_ENV = "DAOGOV_RPC_ENDPOINT"


class BalanceProvider(Protocol):
    def query(self, account: str, asset: str, block_height: int) -> int:
        """Raw integer balance of ``account`` in ``asset`` (a token address or ``"eth"``)."""

    def token_decimals(self, token: str) -> int | None:
        """Decimals declared by the token contract, ``None`` if it declares none."""


# --- providers ----------------------------------------------------------------


class FixtureBalanceProvider:
    """Balances from JSON-Lines records, read as step functions of block height.

    A balance record applies from its height until the next record for the
    same (account, asset); heights before the first record read as 0.  A
    record with ``raw_balance: null`` marks an outage: queries at exactly that
    height raise :class:`ProviderError`.
    """

    def __init__(self, records: Iterable[Mapping] = ()):
        steps: dict[tuple[str, str], list[tuple[int, int]]] = defaultdict(list)
        self._outages: set[tuple[str, str, int]] = set()
        self._decimals: dict[str, int | None] = {}
        for rec in records:
            if "decimals" in rec and "account" not in rec:
                d = rec["decimals"]
                self._decimals[_asset_key(rec["asset"])] = None if d is None else int(d)
                continue
            key = (canonical_address(rec["account"]), _asset_key(rec["asset"]))
            h = int(rec["block_height"])
            if rec.get("raw_balance") is None:
                self._outages.add((*key, h))
            else:
                steps[key].append((h, int(rec["raw_balance"])))
        self._heights: dict[tuple[str, str], list[int]] = {}
        self._values: dict[tuple[str, str], list[int]] = {}
        for key, pts in steps.items():
            pts.sort()
            self._heights[key] = [h for h, _ in pts]
            self._values[key] = [v for _, v in pts]

    @classmethod
    def from_jsonl(cls, path: str | Path) -> "FixtureBalanceProvider":
        with open(path, encoding="utf-8") as fh:
            recs = [json.loads(line) for line in fh if line.strip()]
        return cls(r for r in recs if "_meta" not in r)

    def query(self, account: str, asset: str, block_height: int) -> int:
        key = (canonical_address(account), _asset_key(asset))
        if (*key, block_height) in self._outages:
            raise ProviderError(f"no balance for {key[0]} in {key[1]} at block {block_height}")
        heights = self._heights.get(key)
        if not heights:
            return 0
        i = bisect_right(heights, block_height)
        return self._values[key][i - 1] if i else 0

    def token_decimals(self, token: str) -> int | None:
        return self._decimals.get(_asset_key(token))


def _asset_key(asset: str) -> str:
    return NATIVE if asset == NATIVE else canonical_address(asset)


BALANCE_OF = "0x70a08231"
DECIMALS = "0x313ce567"


class RpcBalanceProvider:
    """JSON-RPC client for an Ethereum archive node.

    The endpoint comes from the argument or the ``DAOGOV_RPC_ENDPOINT``
    environment variable; there is no built-in default.
    """

    def __init__(self, endpoint: str | None = None, session=None, retries: int = 3, backoff: float = 0.5,
                 timeout: float = 30.0):
        endpoint = endpoint or os.environ.get(RPC_ENV)
        if not endpoint:
            raise ConfigurationError(f"RPC provider needs an endpoint (--rpc-endpoint or ${RPC_ENV})")
        if session is None:
            import requests

            session = requests.Session()
        self.endpoint = endpoint
        self.session = session
        self.retries = retries
        self.backoff = backoff
        self.timeout = timeout
        self._decimals: dict[str, int | None] = {}
        self._id = 0

    def _call(self, method: str, params: list):
        self._id += 1
        body = {"jsonrpc": "2.0", "id": self._id, "method": method, "params": params}
        last = None
        for attempt in range(self.retries + 1):
            try:
                resp = self.session.post(self.endpoint, json=body, timeout=self.timeout)
                if resp.status_code >= 500 or resp.status_code == 429:
                    raise ProviderError(f"{method}: HTTP {resp.status_code}")
                resp.raise_for_status()
                payload = resp.json()
            except ProviderError as exc:
                last = exc
            except Exception as exc:  # transport failures of any client library
                last = ProviderError(f"{method}: {exc}")
            else:
                if "error" in payload:
                    err = ProviderError(f"{method}: {payload['error']}")
                    err.retryable = False
                    raise err
                return payload.get("result")
            if attempt < self.retries:
                time.sleep(self.backoff * 2**attempt)
        raise last

    def query(self, account: str, asset: str, block_height: int) -> int:
        account = canonical_address(account)
        block = hex(int(block_height))
        if asset == NATIVE:
            result = self._call("eth_getBalance", [account, block])
        else:
            data = BALANCE_OF + account[2:].rjust(64, "0")
            result = self._call("eth_call", [{"to": canonical_address(asset), "data": data}, block])
        if not result or result == "0x":
            raise ProviderError(f"empty balance result for {account} in {asset}")
        return int(result, 16)

    def token_decimals(self, token: str) -> int | None:
        token = canonical_address(token)
        if token not in self._decimals:
            try:
                result = self._call("eth_call", [{"to": token, "data": DECIMALS}, "latest"])
            except ProviderError as exc:
                if exc.retryable:
                    raise
                result = None  # reverted: no decimals() on this contract
            self._decimals[token] = int(result, 16) if result and result != "0x" else None
        return self._decimals[token]


# --- strategies ---------------------------------------------------------------

# (strategy, contract decimals) -> decimals to apply
DecimalsRule = Callable[[StrategySpec, "int | None"], int]


def declared_decimals(spec: StrategySpec, contract: int | None) -> int:
    if spec.decimals is not None:
        return spec.decimals
    return contract if contract is not None else 0


@dataclass(frozen=True)
class StrategyKind:
    """How a strategy family reads one balance and scales it."""

    name: str
    asset: Callable[[StrategySpec], str]
    decimals: Callable[[StrategySpec, "int | None", DecimalsRule], int]
    uses_contract_decimals: bool = False


REGISTRY: dict[str, StrategyKind] = {}


def register_strategy(kind: StrategyKind) -> None:
    REGISTRY[kind.name] = kind


register_strategy(StrategyKind(ERC20, lambda s: s.token_address, lambda s, c, rule: rule(s, c), True))
register_strategy(StrategyKind(ERC721, lambda s: s.token_address, lambda s, c, rule: 0))
register_strategy(StrategyKind(ETH, lambda s: NATIVE, lambda s, c, rule: 18))


def supported(proposal: Proposal) -> bool:
    return bool(proposal.strategies) and all(s.kind in REGISTRY for s in proposal.strategies)


def _kind(spec: StrategySpec) -> StrategyKind:
    kind = REGISTRY.get(spec.kind)
    if kind is None:
        raise UnsupportedStrategyError(spec.kind)
    return kind


def convert(raw: int, decimals: int) -> float:
    # int / int is correctly rounded, so scaling raw and decimals together is exact
    return raw / 10**decimals


@dataclass(frozen=True)
class Holding:
    spec: StrategySpec
    raw: int
    contract_decimals: int | None


def holdings(user: str, proposal: Proposal, provider: BalanceProvider, height: int) -> list[Holding]:
    if height <= 0:
        raise ValidationError(f"block height must be positive, got {height}")
    out = []
    for spec in proposal.strategies:
        kind = _kind(spec)
        raw = int(provider.query(user, kind.asset(spec), height))
        contract = provider.token_decimals(spec.token_address) if kind.uses_contract_decimals else None
        out.append(Holding(spec, raw, contract))
    return out


def power_of(items: Iterable[Holding], rule: DecimalsRule = declared_decimals) -> float:
    return math.fsum(convert(h.raw, _kind(h.spec).decimals(h.spec, h.contract_decimals, rule)) for h in items)


def compute_power(vote: Vote, proposal: Proposal, provider: BalanceProvider, height: int | None = None,
                  rule: DecimalsRule = declared_decimals) -> float:
    """Sum over the proposal's strategies of the voter's converted balance."""
    h = proposal.block_height if height is None else height
    return power_of(holdings(vote.user, proposal, provider, h), rule)


# --- validation ---------------------------------------------------------------

SOLUTION_RULES: dict[int, DecimalsRule] = {
    1: lambda s, c: c if c is not None else 0,
    2: lambda s, c: c if c is not None else 18,
    4: lambda s, c: 18,
}
CONSISTENT = "consistent"
MISMATCH = "mismatch"
INDETERMINATE = "indeterminate"


def corrected(n: int) -> str:
    return f"corrected({n})"


STATUSES = (CONSISTENT, corrected(1), corrected(2), corrected(3), corrected(4), MISMATCH, INDETERMINATE)


@dataclass(frozen=True)
class VoteCheck:
    user: str
    proposal: str
    space: str
    status: str
    recomputed: float | None
    reported: float
    solution: int | None = None

    def row(self) -> dict:
        return {
            "user": self.user, "proposal": self.proposal, "space": self.space, "status": self.status,
            "recomputed": self.recomputed, "reported": self.reported,
        }


def check_vote(vote: Vote, proposal: Proposal, provider: BalanceProvider, tol: float = TOLERANCE) -> VoteCheck:
    reported = vote.reported_weight

    def verdict(status, value, sol=None):
        return VoteCheck(vote.user, proposal.id, proposal.space, status, value, reported, sol)

    try:
        items = holdings(vote.user, proposal, provider, proposal.block_height)
    except ProviderError as exc:
        log.info("vote %s on %s indeterminate: %s", vote.user, proposal.id, exc)
        return verdict(INDETERMINATE, None)
    base = power_of(items)
    if abs(base - reported) < tol:
        return verdict(CONSISTENT, base)
    for sol in (1, 2, 3, 4):
        if sol == 3:
            if base > 0 and reported > 0 and abs(math.log10(base) - math.log10(reported)) < tol:
                return verdict(corrected(3), base, 3)
            continue
        value = power_of(items, SOLUTION_RULES[sol])
        if abs(value - reported) < tol:
            return verdict(corrected(sol), value, sol)
    return verdict(MISMATCH, base)


def token_label(proposal: Proposal) -> str:
    return "+".join(sorted({s.token_address or NATIVE for s in proposal.strategies}))


@dataclass
class ValidationOutcome:
    checks: list[VoteCheck] = field(default_factory=list)
    excluded_proposals: list[str] = field(default_factory=list)
    tokens: dict[str, str] = field(default_factory=dict)

    def status_of(self, user: str, proposal: str) -> str:
        for c in self.checks:
            if c.user == user and c.proposal == proposal:
                return c.status
        raise KeyError((user, proposal))

    def counts(self) -> Counter:
        return Counter(c.status for c in self.checks)

    def per_space(self) -> dict[str, dict[str, int]]:
        out: dict[str, dict[str, int]] = {}
        for c in self.checks:
            row = out.setdefault(c.space, {s: 0 for s in STATUSES})
            row[c.status] += 1
        return dict(sorted(out.items()))

    def mismatch_table(self) -> list[dict]:
        """Rows (space, token, error, count) over every vote not consistent at first sight."""
        cnt = Counter()
        for c in self.checks:
            if c.status in (CONSISTENT, INDETERMINATE):
                continue
            err = f"[{c.solution}]" if c.solution else "unsolved"
            cnt[(c.space, self.tokens.get(c.proposal, ""), err)] += 1
        rows = [{"space": s, "token": t, "error": e, "count": n} for (s, t, e), n in cnt.items()]
        rows.sort(key=lambda r: (-r["count"], r["space"], r["token"], r["error"]))
        return rows

    def validated_spaces(self) -> list[str]:
        """Spaces whose every checked vote matched without correction."""
        return sorted(s for s, row in self.per_space().items() if sum(row.values()) == row[CONSISTENT])

    def validated_proposals(self) -> list[str]:
        keep = set(self.validated_spaces())
        return sorted({c.proposal for c in self.checks if c.space in keep})


def validate(votes: Iterable[Vote], proposals: Iterable[Proposal], provider: BalanceProvider,
             tol: float = TOLERANCE, workers: int = 1) -> ValidationOutcome:
    """Check every (deduplicated) vote of every supported proposal."""
    index = VoteIndex.build(votes)
    outcome = ValidationOutcome()
    todo = []
    for p in sorted(proposals, key=lambda p: p.id):
        if not supported(p):
            outcome.excluded_proposals.append(p.id)
            continue
        outcome.tokens[p.id] = token_label(p)
        todo.append(p)

    def run(p: Proposal) -> list[VoteCheck]:
        return [check_vote(v, p, provider, tol) for v in index.get(p.id)]

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, todo))
    else:
        results = [run(p) for p in todo]
    for r in results:
        outcome.checks.extend(r)
    return outcome
