import numpy as np
import pytest

from conftest import addr
from daogov.model import Contribution, Proposal, StrategySpec, Vote
from daogov.shifts import (
    BLOCKS_PER_DAY,
    INDETERMINATE,
    NO_POWER,
    TRUNCATED,
    ShiftSeries,
    aggregate_shifts,
    detect_all,
    detect_shifts,
    per_space_counts,
    sample_block,
    shift_days_of,
)
from daogov.strategy import FixtureBalanceProvider
from oracles import histogram_oracle, replay_oracle

TOKEN = addr(0xCAFE)
H_TAU = 10_000_000


def poll(h=H_TAU, pid="p", n_options=2):
    return Proposal(pid, "S", tuple(f"o{i}" for i in range(n_options)),
                    (StrategySpec("erc20-balance-of", TOKEN, 0),), h)


def rec(user, height, raw):
    return {"account": addr(user), "asset": TOKEN, "block_height": height, "raw_balance": raw}


def test_sample_block_arithmetic():
    assert BLOCKS_PER_DAY == 5760
    assert sample_block(1_000_000, 0) == 1_000_000
    assert sample_block(1_000_000, 1) == 994_240
    assert sample_block(1_000_000, 100) == 1_000_000 - 576_000
    assert sample_block(5760, 1) is None


def test_planted_acquisition_shifts_on_day_three():
    records = [rec(1, 1, 100), rec(2, 1, 50), rec(2, H_TAU - 3 * BLOCKS_PER_DAY, 200)]
    votes = [Vote(addr(1), "p", 0, 100.0), Vote(addr(2), "p", 1, 200.0)]
    s = detect_shifts(poll(), votes, FixtureBalanceProvider(records))
    assert s.shift_days == (3,) and s.n_shifts == 1
    assert s.decisions[:5] == (1, 1, 1, 1, 0)
    assert len(s.decisions) == 101


def test_constant_balances_never_shift():
    records = [rec(u, 1, 10 * u) for u in range(1, 6)]
    votes = [Vote(addr(u), "p", u % 2, 10.0 * u) for u in range(1, 6)]
    s = detect_shifts(poll(), votes, FixtureBalanceProvider(records))
    assert s.n_shifts == 0 and len(set(s.decisions)) == 1


def oscillating_records(days=100):
    # a whale backing option 1 holds 500 on even days and 10 on odd days
    r = [rec(1, 1, 100), rec(3, 1, 40)]
    for t in range(days + 1, -1, -1):
        r.append(rec(2, H_TAU - t * BLOCKS_PER_DAY, 500 if t % 2 == 0 else 10))
    return r


def test_oscillating_whale_matches_replay_oracle():
    records = oscillating_records()
    provider = FixtureBalanceProvider(records)
    voters = [(1, 0), (2, 1), (3, 2)]
    votes = [Vote(addr(u), "p", opt, 1.0) for u, opt in voters]
    s = detect_shifts(poll(n_options=3), votes, provider)
    decisions, days = replay_oracle(H_TAU, 100, [(addr(u), o) for u, o in voters],
                                    lambda a, h: provider.query(a, TOKEN, h), 3)
    assert list(s.decisions) == decisions
    assert list(s.shift_days) == days
    assert s.n_shifts == 100


def test_truncated_history():
    h = 3 * BLOCKS_PER_DAY + 7
    s = detect_shifts(poll(h=h), [Vote(addr(1), "p", 0, 1.0)], FixtureBalanceProvider([rec(1, 1, 5)]))
    assert s.days_marked(TRUNCATED) == list(range(4, 101))
    assert s.decisions[:4] == (0, 0, 0, 0)
    assert s.n_shifts == 0


def test_indeterminate_day_breaks_the_chain():
    # the whale flips at day 5, but day 5 itself is unreadable
    records = [rec(1, 1, 100), rec(2, 1, 10), rec(2, H_TAU - 5 * BLOCKS_PER_DAY + 1, 500),
               rec(2, H_TAU - 5 * BLOCKS_PER_DAY, None)]
    votes = [Vote(addr(1), "p", 0, 1.0), Vote(addr(2), "p", 1, 1.0)]
    s = detect_shifts(poll(), votes, FixtureBalanceProvider(records))
    assert s.days_marked(INDETERMINATE) == [5]
    assert s.n_shifts == 0
    assert s.decisions[4] == 1 and s.decisions[6] == 0


def test_no_power_days_are_not_decisions():
    records = [rec(1, H_TAU - 2 * BLOCKS_PER_DAY, 9)]
    s = detect_shifts(poll(), [Vote(addr(1), "p", 1, 9.0)], FixtureBalanceProvider(records))
    assert s.days_marked(NO_POWER) == list(range(3, 101))
    assert s.n_shifts == 0


def test_shift_days_of_only_compares_real_decisions():
    assert shift_days_of([0, 1, "x", 1, 0]) == (0, 3)
    assert shift_days_of([]) == ()


def test_zero_power_voter_does_not_count_as_participant():
    records = [rec(1, 1, 100)]
    contribs = [Contribution(addr(2), "S", frozenset({"owner"}))]
    votes = [Vote(addr(1), "p", 0, 100.0), Vote(addr(2), "p", 1, 0.0)]
    (s,) = detect_all([poll()], votes, FixtureBalanceProvider(records), contributions=contribs)
    assert not s.contributor_voted
    (s2,) = detect_all([poll()], votes[:1], FixtureBalanceProvider(records), contributions=contribs)
    assert s == s2


def test_aggregate_empty_and_single():
    assert aggregate_shifts([], 100).histogram == (0,) * 100
    one = ShiftSeries("p", "S", (0,) * 101, (3,))
    h = aggregate_shifts([one], 100).histogram
    assert h[3] == 1 and sum(h) == 1


def test_aggregate_twenty_series_matches_summation_oracle():
    rng = np.random.default_rng(5)
    series = []
    for i in range(20):
        days = tuple(sorted(rng.choice(100, size=int(rng.integers(0, 6)), replace=False).tolist()))
        series.append(ShiftSeries(f"p{i}", "AB"[i % 2], (0,) * 101, days, contributor_voted=bool(i % 3 == 0)))
    summary = aggregate_shifts(series, 100)
    assert list(summary.histogram) == histogram_oracle([s.shift_days for s in series], 100)
    counts = [len(s.shift_days) for s in series]
    assert summary.n_shifted == sum(1 for c in counts if c)
    assert summary.max == max(counts)
    assert summary.median == float(np.median(counts))
    assert summary.std == pytest.approx(float(np.std(counts, ddof=1)))
    assert summary.contributor_in_shifted == sum(1 for s in series if s.n_shifts and s.contributor_voted)
    rows = per_space_counts(series)
    assert sum(r["n_shifts"] for r in rows) == sum(counts)


def test_detection_is_deterministic():
    provider = FixtureBalanceProvider(oscillating_records())
    votes = [Vote(addr(1), "p", 0, 1.0), Vote(addr(2), "p", 1, 1.0)]
    runs = [detect_all([poll()], votes, provider, workers=w) for w in (1, 1, 3)]
    assert runs[0] == runs[1] == runs[2]
