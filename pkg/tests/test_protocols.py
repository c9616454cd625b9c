import random
from fractions import Fraction

import pytest

from stablelab.embeddings import (
    GRID,
    OFFDIAG,
    DisjInstance,
    ThreeTierParams,
    all_instances,
    build_three_tier,
    embed_stability_check,
    planted_blocking_market,
)
from stablelab.errors import ParameterError, ProtocolError
from stablelab.market import (
    FULL,
    MarriageMarket,
    deferred_acceptance,
    identity_marriage,
    is_stable,
    random_market,
)
from stablelab.protocols import (
    RECV,
    BlockingFractionEstimator,
    DisjDeciderProtocol,
    GsProtocol,
    NaiveStabilityProtocol,
    Send,
    decide_disjointness,
    estimator_sample_count,
    index_width,
    run_record,
    run_two_party,
)


class ConstantProtocol:
    name = "constant"

    def alice(self, women, coins):
        return 42
        yield  # pragma: no cover

    def bob(self, men, coins):
        return 42
        yield  # pragma: no cover


class EchoProtocol:
    """Alice sends one bit, Bob echoes it as his output."""

    name = "echo"

    def alice(self, women, coins):
        yield Send("1")
        return 1

    def bob(self, men, coins):
        msg = yield RECV
        return int(msg.bits)


class DisagreeProtocol:
    name = "disagree"

    def alice(self, women, coins):
        return "a"
        yield  # pragma: no cover

    def bob(self, men, coins):
        return "b"
        yield  # pragma: no cover


class DeadlockProtocol:
    name = "deadlock"

    def alice(self, women, coins):
        msg = yield RECV
        return msg.bits

    def bob(self, men, coins):
        msg = yield RECV
        return msg.bits


def tiny_profiles(n=2):
    market = random_market(n, FULL, random.Random(0))
    return market.women, market.men


# ---------------------------------------------------------------------------
# runner semantics


def test_constant_protocol_sends_nothing():
    women, men = tiny_profiles()
    run = run_two_party(ConstantProtocol(), women, men)
    assert run.total_bits == 0 and run.output == 42


def test_echo_protocol_is_one_bit():
    women, men = tiny_profiles()
    run = run_two_party(EchoProtocol(), women, men)
    assert run.total_bits == 1 and run.output == 1
    assert run.transcript.dump() == "A 1\n"


def test_output_disagreement_raises():
    women, men = tiny_profiles()
    with pytest.raises(ProtocolError):
        run_two_party(DisagreeProtocol(), women, men)


def test_deadlock_detected():
    women, men = tiny_profiles()
    with pytest.raises(ProtocolError):
        run_two_party(DeadlockProtocol(), women, men)


def test_reruns_are_bit_identical():
    market = random_market(6, FULL, random.Random(3))
    protocol = GsProtocol(6)
    a = run_two_party(protocol, market.women, market.men, seed=9)
    b = run_two_party(protocol, market.women, market.men, seed=9)
    assert a.transcript == b.transcript and a.output == b.output


# ---------------------------------------------------------------------------
# naive stability verification


@pytest.mark.parametrize("n", [1, 4, 8])
def test_naive_bit_count(n):
    market = random_market(n, FULL, random.Random(n))
    run = run_two_party(NaiveStabilityProtocol(identity_marriage(n), n), market.women, market.men)
    assert run.total_bits == n * n + 1


def test_naive_agrees_with_is_stable_exhaustive_n2():
    for inst in all_instances(OFFDIAG, 2):
        market = embed_stability_check(inst)
        mu = identity_marriage(2)
        run = run_two_party(NaiveStabilityProtocol(mu, 2), market.women, market.men)
        assert run.output == is_stable(market, mu) == bool(inst.disj())


def test_naive_agrees_with_is_stable_random():
    for seed in range(30):
        market = random_market(16, FULL, random.Random(seed))
        mu = identity_marriage(16)
        run = run_two_party(NaiveStabilityProtocol(mu, 16), market.women, market.men)
        assert run.output == is_stable(market, mu)


def test_naive_transcript_ignores_irrelevant_preferences():
    # moving men around below a woman's spouse cannot change any message
    women = ((1, 2, 3, 4), (2, 1, 3, 4), (3, 1, 2, 4), (4, 1, 2, 3))
    women_shuffled_tail = ((1, 4, 3, 2), (2, 3, 4, 1), (3, 2, 4, 1), (4, 3, 2, 1))
    men = tuple(tuple(random.Random(8).sample(range(1, 5), 4)) for _ in range(4))
    mu = identity_marriage(4)
    a = run_two_party(NaiveStabilityProtocol(mu, 4), women, men)
    b = run_two_party(NaiveStabilityProtocol(mu, 4), women_shuffled_tail, men)
    assert a.transcript == b.transcript


# ---------------------------------------------------------------------------
# deferred acceptance over the wire


def test_gs_mutual_top_cost():
    lists = tuple(tuple([i] + [j for j in range(1, 5) if j != i]) for i in range(1, 5))
    market = MarriageMarket(4, FULL, lists, lists)
    run = run_two_party(GsProtocol(4), market.women, market.men)
    assert run.total_bits == 4 * (2 + 1)
    assert run.output == identity_marriage(4)


def test_gs_matches_deferred_acceptance():
    for seed in range(40):
        market = random_market(8, FULL, random.Random(seed))
        run = run_two_party(GsProtocol(8), market.women, market.men, seed)
        assert run.output == deferred_acceptance(market)


@pytest.mark.parametrize("n", [1, 2, 5, 8, 16])
def test_gs_bit_bound(n):
    market = random_market(n, FULL, random.Random(n))
    run = run_two_party(GsProtocol(n), market.women, market.men)
    assert run.total_bits <= n * n * (index_width(n) + 1)


# ---------------------------------------------------------------------------
# blocking-fraction estimator


def test_estimator_sample_count_formula():
    assert estimator_sample_count(0.1, 0.05) == 738


def test_estimator_parameter_validation():
    mu = identity_marriage(4)
    with pytest.raises(ParameterError):
        BlockingFractionEstimator(mu, 4, 0.1, 0.2, 0.05)
    with pytest.raises(ParameterError):
        BlockingFractionEstimator(mu, 4, 0.2, 0.1, 0.0)


def test_estimator_on_stable_marriage_always_low():
    lists = tuple(tuple([i] + [j for j in range(1, 5) if j != i]) for i in range(1, 5))
    market = MarriageMarket(4, FULL, lists, lists)
    for seed in range(10):
        run = run_two_party(
            BlockingFractionEstimator(identity_marriage(4), 4, 0.2, 0.1, 0.05),
            market.women,
            market.men,
            seed,
        )
        assert run.output == "at-most"


def test_estimator_bits_are_k_plus_one_for_any_n():
    protocol_args = (0.2, 0.1, 0.05)
    k = estimator_sample_count(0.1, 0.05)
    for n in (4, 12, 20):
        market = random_market(n, FULL, random.Random(n))
        run = run_two_party(
            BlockingFractionEstimator(identity_marriage(n), n, *protocol_args),
            market.women,
            market.men,
        )
        assert run.total_bits == k + 1


def test_estimator_separates_planted_fractions():
    n, trials = 20, 200
    high, _ = planted_blocking_market(n, 80, random.Random(1))    # fraction 0.2
    low, _ = planted_blocking_market(n, 40, random.Random(2))     # fraction 0.1
    mu = identity_marriage(n)
    ok_high = sum(
        run_two_party(
            BlockingFractionEstimator(mu, n, 0.2, 0.1, 0.05), high.women, high.men, seed
        ).output
        == "at-least"
        for seed in range(trials)
    )
    ok_low = sum(
        run_two_party(
            BlockingFractionEstimator(mu, n, 0.2, 0.1, 0.05), low.women, low.men, seed
        ).output
        == "at-most"
        for seed in range(trials)
    )
    assert ok_high >= 0.9 * trials
    assert ok_low >= 0.9 * trials


# ---------------------------------------------------------------------------
# disjointness decider


def test_decider_disjoint_instance():
    params = ThreeTierParams(8, Fraction(1, 2))
    run = decide_disjointness(DisjInstance.zeros(GRID, 2), params, Fraction(1, 5))
    assert run.output == 1


def test_decider_intersecting_instance():
    params = ThreeTierParams(8, Fraction(1, 2))
    inst = DisjInstance.from_cells(GRID, 2, [(2, 2)], [(2, 2)])
    run = decide_disjointness(inst, params, Fraction(1, 5))
    assert run.output == 0


def test_decider_adds_no_bits():
    params = ThreeTierParams(8, Fraction(1, 2))
    inst = DisjInstance.zeros(GRID, 2)
    market = build_three_tier(params, inst)
    finder_run = run_two_party(GsProtocol(8), market.women, market.men, 3)
    decider_run = decide_disjointness(inst, params, Fraction(1, 5), seed=3)
    assert decider_run.total_bits == finder_run.total_bits
    assert decider_run.transcript == finder_run.transcript


def test_decider_rejects_bad_inputs():
    params = ThreeTierParams(8, Fraction(1, 2))
    double = DisjInstance.from_cells(GRID, 2, [(1, 1), (2, 2)], [(1, 1), (2, 2)])
    with pytest.raises(ParameterError):
        decide_disjointness(double, params, Fraction(1, 5))
    with pytest.raises(ParameterError):
        DisjDeciderProtocol(params, Fraction(1, 2), GsProtocol(8))  # epsilon too large


def test_run_record_shape():
    market = random_market(4, FULL, random.Random(0))
    run = run_two_party(GsProtocol(4), market.women, market.men, 5)
    record = run_record(run, 4, True)
    assert set(record) == {"protocol", "n", "seed", "bits", "output", "correct"}
    assert record["bits"] == run.total_bits and record["seed"] == 5
    assert isinstance(record["output"], list)
