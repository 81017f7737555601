import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import addr
from daogov.errors import UnknownProposalError, ValidationError
from daogov.model import (
    Contribution,
    Proposal,
    StrategySpec,
    Vote,
    VoteClass,
    VoteIndex,
    canonical_address,
    classify_vote,
    classify_votes,
    latest_votes,
    rank_outcome,
)


def vote(u, choice, w, p="p1", ts=0):
    return Vote(addr(u), p, choice, w, ts)


def test_canonical_address_lowercases_and_rejects_garbage():
    a = "0x" + "AB" * 20
    assert canonical_address(a) == "0x" + "ab" * 20
    assert canonical_address(a) == canonical_address(a.lower())
    for bad in ("0x123", "ab" * 20, "0x" + "zz" * 20, 42):
        with pytest.raises(ValidationError):
            canonical_address(bad)


def test_contribution_roles_validated():
    with pytest.raises(ValidationError):
        Contribution(addr(1), "s", frozenset())
    with pytest.raises(ValidationError):
        Contribution(addr(1), "s", frozenset({"voter"}))
    c = Contribution(addr(1), "s", frozenset({"owner", "developer"}))
    assert c.roles == {"owner", "developer"}


def test_proposal_invariants():
    with pytest.raises(ValidationError):
        Proposal("p", "s", ("only",))
    with pytest.raises(ValidationError):
        Proposal("p", "s", ("a", "b"), block_height=0)
    with pytest.raises(ValidationError):
        Proposal("p", "s", ("a", "b"), status="done")
    # non-single-choice proposals may have one option
    assert Proposal("p", "s", ("a",), vote_type="weighted").n_options == 1


def test_strategy_requires_token_for_token_kinds():
    with pytest.raises(ValidationError):
        StrategySpec("erc20-balance-of")
    with pytest.raises(ValidationError):
        StrategySpec("erc721")
    assert StrategySpec("eth-balance").token_address is None
    with pytest.raises(ValidationError):
        StrategySpec("erc20-balance-of", addr(5), decimals=-1)


def test_vote_rejects_bad_weights_and_magnitudes():
    for w in (-1.0, float("nan"), float("inf"), True):
        with pytest.raises(ValidationError):
            vote(1, 0, w)
    with pytest.raises(ValidationError):
        vote(1, (0.5, 0.4), 1.0)
    with pytest.raises(ValidationError):
        vote(1, (1.5, -0.5), 1.0)
    with pytest.raises(ValidationError):
        vote(1, -1, 1.0)
    v = vote(1, (0.25, 0.75), 2.0)
    assert v.allocation(2) == [(0, 0.25), (1, 0.75)]
    with pytest.raises(ValidationError, match="out of range"):
        vote(1, 3, 1.0).allocation(2)


def test_classify_vote_cases():
    contribs = [Contribution(addr(1), "A", frozenset({"owner"}))]
    assert classify_vote(vote(1, 0, 1), contribs, "A") is VoteClass.SAME_SPACE
    assert classify_vote(vote(1, 0, 1), contribs, "B") is VoteClass.OTHER_SPACE
    assert classify_vote(vote(2, 0, 1), contribs, "A") is VoteClass.NON_CONTRIBUTOR
    assert classify_vote(vote(2, 0, 1), [], "A") is VoteClass.NON_CONTRIBUTOR


def test_classify_votes_unknown_proposal():
    with pytest.raises(UnknownProposalError):
        classify_votes([vote(1, 0, 1, p="missing")], {}, [])


@given(st.lists(st.tuples(st.integers(1, 6), st.sampled_from("ABC")), max_size=12), st.integers(1, 8),
       st.sampled_from("ABCD"))
def test_classification_partition(pairs, user, space):
    contribs = [Contribution(addr(u), s, frozenset({"developer"})) for u, s in pairs]
    cls = classify_vote(vote(user, 0, 1), contribs, space)
    is_contributor = any(u == user for u, _ in pairs)
    assert cls.is_contributor == is_contributor
    assert (cls is VoteClass.SAME_SPACE) == ((user, space) in set(pairs))


def test_rank_outcome_examples():
    o = rank_outcome([vote(1, 0, 3), vote(2, 1, 5)], 2)
    assert o.ranked_options == (1, 0) and o.weights == (5.0, 3.0) and not o.tie_at_top
    o = rank_outcome([vote(1, 0, 2), vote(2, 1, 2)], 2)
    assert o.ranked_options == (0, 1) and o.tie_at_top
    assert o.decision == 0 and o.runner_up == 1


def test_rank_outcome_magnitudes_match_summation_oracle():
    rng = random.Random(3)
    votes = []
    for u in range(5):
        raw = [rng.random() for _ in range(3)]
        s = sum(raw)
        mags = tuple(x / s for x in raw)
        # renormalize the final entry so the vector sums to one
        mags = mags[:2] + (1.0 - mags[0] - mags[1],)
        votes.append(vote(u + 1, mags, rng.uniform(1, 10)))
    votes.append(vote(9, 2, 4.0))
    oracle = [0.0, 0.0, 0.0]
    for v in votes:
        if isinstance(v.choice, int):
            oracle[v.choice] += v.reported_weight
        else:
            for i, m in enumerate(v.choice):
                oracle[i] += v.reported_weight * m
    o = rank_outcome(votes, 3)
    assert sorted(range(3), key=lambda i: -oracle[i]) == list(o.ranked_options)
    for opt, w in zip(o.ranked_options, o.weights):
        assert w == pytest.approx(oracle[opt], rel=1e-12)


weights = st.floats(0, 1e6, allow_nan=False, allow_infinity=False)


@settings(max_examples=200)
@given(st.lists(st.tuples(st.integers(0, 3), weights), min_size=1, max_size=25), st.randoms())
def test_rank_outcome_permutation_invariant_and_conserves_weight(items, rnd):
    votes = [vote(i + 1, c, w) for i, (c, w) in enumerate(items)]
    base = rank_outcome(votes, 4)
    shuffled = votes[:]
    rnd.shuffle(shuffled)
    assert rank_outcome(shuffled, 4) == base
    assert sorted(base.ranked_options) == [0, 1, 2, 3]
    assert all(a >= b for a, b in zip(base.weights, base.weights[1:]))
    total = math.fsum(w for _, w in items)
    assert math.isclose(math.fsum(base.weights), total, rel_tol=1e-9, abs_tol=1e-12)


def test_latest_votes_keeps_latest_timestamp():
    a = vote(1, 0, 1, ts=10)
    b = vote(1, 1, 1, ts=20)
    c = vote(2, 0, 1, ts=5)
    kept = latest_votes([b, a, c])
    assert {(v.user, v.choice) for v in kept} == {(addr(1), 1), (addr(2), 0)}
    idx = VoteIndex.build([a, b, c])
    assert [v.user for v in idx.get("p1")] == [addr(1), addr(2)]
    assert idx.get("nothing") == []
