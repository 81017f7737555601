"""Generator for the small three-space dataset shipped under ``daogov/data/demo``.

Run ``python -m daogov.demo DIR`` to regenerate the files.
"""
from __future__ import annotations

import math
import sys
from pathlib import Path

import numpy as np

from .artifacts import write_text
from .ingestion import dumps_line
from .shifts import BLOCKS_PER_DAY

SEED = 7
T0 = 1_640_995_200  # 2022-01-01 UTC
BASE_HEIGHT = 14_000_000

SPACES = [
    # id, name, followers, tvl, token, strategy decimals, contract decimals
    ("alpha.eth", "Alpha Protocol", 5400, 2.5e8, "0x" + "a1" * 20, 18, 18),
    ("beta.eth", "Beta Finance", 1800, 4.0e6, "0x" + "b2" * 20, 18, 6),
    ("gamma.eth", "Gamma Collective", 900, 50_000.0, "0x" + "c3" * 20, None, 0),
]


def _addr(i: int) -> str:
    return "0x" + format(i + 1, "040x")


def build(seed: int = SEED) -> dict[str, list[dict]]:
    rng = np.random.default_rng(seed)
    n_users = 48
    users = [_addr(i) for i in range(n_users)]
    # two voting blocs: users 0-7 favour alpha and beta, users 8-15 favour gamma
    bloc = {i: ("alpha.eth", "beta.eth") for i in range(8)}
    bloc.update({i: ("gamma.eth",) for i in range(8, 16)})
    records = {k: [] for k in ("spaces", "proposals", "votes", "contributions", "tvl", "balances")}

    for sid, name, followers, tvl, token, _, contract_dec in SPACES:
        records["spaces"].append({"id": sid, "name": name, "follower_count": followers, "tvl_usd": None,
                                  "token_accounts": [token]})
        records["tvl"].append({"name": name, "identifier": sid, "tvl_usd": tvl})
        if sid == "gamma.eth":
            records["balances"].append({"asset": token, "decimals": None})
        else:
            records["balances"].append({"asset": token, "decimals": contract_dec})
    records["tvl"].append({"name": "Alpha Protocol", "identifier": "alpha-v2.eth", "tvl_usd": 1.0e7})

    roles = ["owner", "administrator", "developer"]
    for k, (sid, *_rest) in enumerate(SPACES):
        for j in range(3):
            u = users[4 * k + j]
            records["contributions"].append({"user": u, "space": sid, "roles": [roles[j]]})
    records["contributions"].append({"user": users[20], "space": "beta.eth", "roles": ["developer"]})
    # a developer pool shared by alpha and beta forms one larger contributor component
    for i in range(30, 38):
        records["contributions"].append({"user": users[i], "space": "alpha.eth", "roles": ["developer"]})
        records["contributions"].append({"user": users[i], "space": "beta.eth", "roles": ["developer"]})

    # balance timelines: an initial holding and a few later changes
    scale = {"alpha.eth": 10**18, "beta.eth": 10**6, "gamma.eth": 1}
    timeline: dict[tuple[int, str], list[tuple[int, int]]] = {}
    last = BASE_HEIGHT + 60 * 40_000
    for k, (sid, _, _, _, token, _, _) in enumerate(SPACES):
        for i in range(n_users):
            amount = int(rng.pareto(1.2) * 100 + 1)
            pts = [(1, amount * scale[sid])]
            for _ in range(int(rng.integers(0, 4))):
                h = int(rng.integers(BASE_HEIGHT - 100 * BLOCKS_PER_DAY, last))
                pts.append((h, int(rng.pareto(1.2) * 100) * scale[sid]))
            pts.sort()
            timeline[(i, sid)] = pts
            for h, v in pts:
                records["balances"].append({"account": users[i], "asset": token, "block_height": h, "raw_balance": v})
    eth_pts: dict[int, int] = {}
    for i in range(n_users):
        eth_pts[i] = int(rng.integers(0, 50)) * 10**17
        records["balances"].append({"account": users[i], "asset": "eth", "block_height": 1, "raw_balance": eth_pts[i]})

    def raw_at(i, sid, h):
        val = 0
        for hh, v in timeline[(i, sid)]:
            if hh <= h:
                val = v
        return val

    pid = 0
    for k, (sid, _, _, _, token, strat_dec, contract_dec) in enumerate(SPACES):
        for j in range(16):
            pid += 1
            height = BASE_HEIGHT + int(rng.integers(0, 60)) * 40_000
            n_opt = 2 if j % 3 else 3
            status = "pending" if j == 15 else "final"
            # beta's strategy declares 18 decimals while its contract (and the reported weights) use 6
            strategies = [{"kind": "erc20-balance-of", "token_address": token, "decimals": strat_dec}]
            if sid == "gamma.eth":
                strategies = [{"kind": "erc721", "token_address": token, "decimals": None},
                              {"kind": "eth-balance", "token_address": None, "decimals": None}]
            votes = []
            for i in range(n_users):
                p_vote = (0.9 if sid in bloc[i] else 0.1) if i in bloc else 0.2
                if rng.random() >= p_vote:
                    continue
                if sid == "gamma.eth":
                    w = math.fsum([raw_at(i, sid, height) / 1, eth_pts[i] / 10**18])
                else:
                    w = raw_at(i, sid, height) / 10**contract_dec
                if w <= 0:
                    continue
                choice = int(rng.integers(0, n_opt))
                votes.append({"user": users[i], "proposal": f"p{pid:03d}", "choice": choice, "reported_weight": w,
                              "timestamp": T0 + pid * 86400 + i})
            if not votes:
                continue
            scores = [math.fsum(v["reported_weight"] for v in votes if v["choice"] == o) for o in range(n_opt)]
            records["proposals"].append({
                "id": f"p{pid:03d}", "space": sid, "options": [f"option {o}" for o in range(n_opt)],
                "strategies": strategies, "block_height": height, "status": status, "vote_type": "single-choice",
                "reported_scores": scores, "created": T0 + (pid % 16) * 20 * 86400,
            })
            records["votes"].extend(votes)
    return records


FILE_NAMES = {
    "spaces": "spaces.jsonl", "proposals": "proposals.jsonl", "votes": "votes.jsonl",
    "contributions": "contributions.jsonl", "tvl": "tvl.jsonl", "balances": "balances.jsonl",
}


def render(seed: int = SEED) -> dict[str, str]:
    return {FILE_NAMES[k]: "".join(dumps_line(r) + "\n" for r in recs) for k, recs in build(seed).items()}


def write(directory: str | Path, seed: int = SEED) -> None:
    directory = Path(directory)
    for name, text in render(seed).items():
        write_text(directory / name, text)


if __name__ == "__main__":
    write(sys.argv[1] if len(sys.argv) > 1 else Path(__file__).parent / "data" / "demo")
