import itertools
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracle
from conftest import full_markets, partial_markets, seeded_markets
from stablelab.errors import CapacityError, DomainError
from stablelab.market import (
    FULL,
    PARTIAL,
    Marriage,
    MarriageMarket,
    Side,
    blocking_pairs,
    deferred_acceptance,
    distance_to_stability,
    divorce_distance,
    enumerate_stable,
    identity_marriage,
    is_blocking_pair,
    is_stable,
    load_market,
    load_marriage,
    market_from_json,
    market_to_json,
    marriage_from_json,
    marriage_to_json,
    married_sets,
    prefers,
    proposal_trace,
    random_market,
    save_market,
    save_marriage,
    weakly_prefers,
    weakly_prefers_marriage,
)


def mutual_top_market(n):
    """Woman i and man i rank each other first; identity is the obvious
    unique stable marriage."""
    lists = tuple(tuple([i] + [j for j in range(1, n + 1) if j != i]) for i in range(1, n + 1))
    return MarriageMarket(n, FULL, lists, lists)


# ---------------------------------------------------------------------------
# prefers / weakly_prefers


def test_prefers_full_list():
    profile = ((2, 1), (1, 2))
    assert prefers(profile, 1, 2, 1) is True
    assert prefers(profile, 1, 1, 2) is False


def test_prefers_partial_listed_beats_unlisted():
    profile = ((3,), (), ())
    assert prefers(profile, 1, 3, 1) is True
    assert prefers(profile, 1, 1, 2) is False


def test_prefers_rejects_bad_indices():
    with pytest.raises(DomainError):
        prefers(((1, 2), (1, 2)), 3, 1, 2)
    with pytest.raises(DomainError):
        prefers(((1, 2), (1, 2)), 1, 0, 2)
    with pytest.raises(DomainError):
        prefers(((1, 2), (1, 2)), 1, 2, 2)


def test_weakly_prefers():
    profile = ((2, 1), (1, 2))
    assert weakly_prefers(profile, 1, 1, 1) is True
    assert weakly_prefers(profile, 1, 1, 2) is False
    assert weakly_prefers(((3,), (), ()), 1, 3, 3) is True


@given(full_markets(max_n=4), st.data())
def test_prefers_trichotomy_full(market, data):
    n = market.n
    who = data.draw(st.integers(1, n))
    a, b = data.draw(st.permutations(range(1, n + 1)))[:2] if n > 1 else (1, 1)
    if a == b:
        return
    lists = market.women
    assert prefers(lists, who, a, b) != prefers(lists, who, b, a)


# ---------------------------------------------------------------------------
# blocking pairs and stability


def test_no_blocking_in_mutual_top():
    market = mutual_top_market(3)
    mu = identity_marriage(3)
    for w in range(1, 4):
        for m in range(1, 4):
            if w != m:
                assert not is_blocking_pair(market, mu, w, m)


def test_crossed_desire_blocks():
    # w1 ranks m2 first and m2 ranks w1 first; everyone else is content
    market = MarriageMarket(2, FULL, women=((2, 1), (2, 1)), men=((1, 2), (1, 2)))
    assert is_blocking_pair(market, identity_marriage(2), 1, 2)
    assert blocking_pairs(market, identity_marriage(2)) == frozenset({(1, 2)})


def test_empty_list_woman_never_blocks():
    market = MarriageMarket(2, PARTIAL, women=((), (1,)), men=((2,), (2,)))
    mu = Marriage.of([(2, 1)])
    for m in (1, 2):
        assert not is_blocking_pair(market, mu, 1, m)


def test_stable_mutual_top():
    assert is_stable(mutual_top_market(4), identity_marriage(4))


def test_partial_unlisted_spouse_is_unstable():
    market = MarriageMarket(2, PARTIAL, women=((2,), (1,)), men=((1,), (2,)))
    # woman 1 married to man 1, whom she does not list
    assert not is_stable(market, Marriage.of([(1, 1)]))


@given(full_markets(max_n=4))
@settings(max_examples=60)
def test_stability_matches_reference(market):
    for pairs in oracle.all_perfect_marriages(market.n):
        mu = Marriage(pairs)
        assert is_stable(market, mu) == oracle.raw_is_stable(
            market.n, market.women, market.men, pairs
        )
        assert blocking_pairs(market, mu) == oracle.raw_blocking_pairs(
            market.n, market.women, market.men, pairs
        )


@given(partial_markets(max_n=3))
@settings(max_examples=60)
def test_partial_stability_matches_reference(market):
    for pairs in oracle.all_partial_marriages(market.n):
        mu = Marriage(pairs)
        assert is_stable(market, mu) == oracle.raw_is_stable(
            market.n, market.women, market.men, pairs
        )


# ---------------------------------------------------------------------------
# deferred acceptance


def test_da_single_couple():
    market = MarriageMarket(1, FULL, ((1,),), ((1,),))
    assert deferred_acceptance(market) == identity_marriage(1)


def test_da_mutual_top_no_rejections():
    market = mutual_top_market(4)
    trace = proposal_trace(market)
    assert len(trace) == 4
    assert all(ev.accepted for ev in trace)
    assert deferred_acceptance(market) == identity_marriage(4)


def test_da_is_men_optimal_random():
    for market in seeded_markets(40, 5, FULL, base_seed=100):
        stable = oracle.stable_set(market)
        best = oracle.men_optimal(market.n, market.women, market.men, stable)
        assert deferred_acceptance(market).pairs == best


def test_da_partial_model_is_stable_and_men_optimal():
    for market in seeded_markets(40, 4, PARTIAL, base_seed=200):
        mu = deferred_acceptance(market)
        assert is_stable(market, mu)
        stable = oracle.stable_set(market)
        assert mu.pairs in stable
        for other in stable:
            for m in range(1, market.n + 1):
                assert oracle.weakly_prefers_spouse(
                    market.men, m, mu.pairs, other, side_is_women=False
                )


@given(full_markets(max_n=5))
@settings(max_examples=60)
def test_da_at_most_n_squared_nights(market):
    assert len(proposal_trace(market)) <= market.n**2


# ---------------------------------------------------------------------------
# enumeration oracle


def test_enumerate_mutual_top_unique():
    market = mutual_top_market(3)
    assert enumerate_stable(market) == frozenset({identity_marriage(3)})


@given(full_markets(max_n=4))
@settings(max_examples=40)
def test_enumerate_full_matches_literal_filter(market):
    got = {mu.pairs for mu in enumerate_stable(market)}
    assert got == oracle.stable_set(market)


@given(partial_markets(max_n=3))
@settings(max_examples=40)
def test_enumerate_partial_matches_literal_filter(market):
    got = {mu.pairs for mu in enumerate_stable(market)}
    assert got == oracle.stable_set(market)


def test_enumerate_nonempty_and_contains_da():
    for market in seeded_markets(30, 5, FULL, base_seed=300):
        stable = enumerate_stable(market)
        assert stable
        assert deferred_acceptance(market) in stable


def test_enumerate_capacity_bounds():
    with pytest.raises(CapacityError):
        enumerate_stable(random_market(9, FULL, random.Random(0)))
    with pytest.raises(CapacityError):
        enumerate_stable(random_market(7, PARTIAL, random.Random(0)))
    # bounds are configurable
    assert enumerate_stable(random_market(4, FULL, random.Random(0)), full_bound=4)


# ---------------------------------------------------------------------------
# classical invariants (existence, optimality, rural hospitals, uniqueness)


def test_classical_invariants_random_full():
    for market in seeded_markets(60, 4, FULL, base_seed=400):
        stable = enumerate_stable(market)
        assert stable
        da = deferred_acceptance(market)
        for other in stable:
            for m in range(1, market.n + 1):
                assert weakly_prefers_marriage(market, Side.MEN, m, da, other)
            for w in range(1, market.n + 1):
                assert weakly_prefers_marriage(market, Side.WOMEN, w, other, da)


def test_rural_hospitals_random_partial():
    for market in seeded_markets(60, 4, PARTIAL, base_seed=500):
        stable = list(enumerate_stable(market))
        sets = {married_sets(mu) for mu in stable}
        assert len(sets) == 1


def test_worst_for_both_sides_implies_unique():
    for market in itertools.chain(
        seeded_markets(40, 4, FULL, base_seed=600), seeded_markets(40, 4, PARTIAL, base_seed=650)
    ):
        stable = list(enumerate_stable(market))
        for cand in stable:
            worst_for_women = all(
                weakly_prefers_marriage(market, Side.WOMEN, w, other, cand)
                for other in stable
                for w in range(1, market.n + 1)
            )
            worst_for_men = all(
                weakly_prefers_marriage(market, Side.MEN, m, other, cand)
                for other in stable
                for m in range(1, market.n + 1)
            )
            if worst_for_women and worst_for_men:
                assert len(stable) == 1


# ---------------------------------------------------------------------------
# divorce distance


def test_divorce_distance_zero_on_equal():
    mu = identity_marriage(4)
    assert divorce_distance(mu, mu, 4) == 0


def test_divorce_distance_two_couple_swap():
    mu = identity_marriage(4)
    swapped = Marriage.of([(1, 2), (2, 1), (3, 3), (4, 4)])
    assert divorce_distance(mu, swapped, 4) == 2


def test_divorce_distance_needs_perfect():
    with pytest.raises(DomainError):
        divorce_distance(Marriage.of([(1, 1)]), identity_marriage(2), 2)


@given(st.integers(2, 5), st.data())
def test_divorce_distance_is_symmetric_nonnegative(n, data):
    a = Marriage.of(zip(range(1, n + 1), data.draw(st.permutations(range(1, n + 1)))))
    b = Marriage.of(zip(range(1, n + 1), data.draw(st.permutations(range(1, n + 1)))))
    d = divorce_distance(a, b, n)
    assert d == divorce_distance(b, a, n)
    assert 0 <= d <= n
    assert (d == 0) == (a == b)
    assert d != 1  # a single divorce always strands two people


def test_divorce_distance_triangle_inequality_exhaustive_n4():
    marriages = [Marriage(p) for p in oracle.all_perfect_marriages(4)]
    for a in marriages:
        for b in marriages:
            dab = divorce_distance(a, b, 4)
            for c in marriages:
                assert dab <= divorce_distance(a, c, 4) + divorce_distance(c, b, 4)


# ---------------------------------------------------------------------------
# distance to stability


def test_distance_zero_iff_stable():
    for market in seeded_markets(30, 4, FULL, base_seed=700):
        for pairs in oracle.all_perfect_marriages(4):
            mu = Marriage(pairs)
            d = distance_to_stability(market, mu)
            assert (d == 0) == is_stable(market, mu)


def test_distance_matches_reference_min():
    for market in seeded_markets(30, 4, FULL, base_seed=800):
        stable = oracle.stable_set(market)
        for pairs in oracle.all_perfect_marriages(4):
            mu = Marriage(pairs)
            want = min(4 - len(pairs & s) for s in stable)
            assert distance_to_stability(market, mu) == want


def test_distance_couple_swap_on_unstable_result():
    # swapping two couples of a stable marriage moves distance to exactly 2
    # whenever the swapped marriage is itself unstable
    found = 0
    for market in seeded_markets(60, 4, FULL, base_seed=900):
        stable = sorted(enumerate_stable(market), key=lambda s: s.sorted_pairs())
        base = stable[0].sorted_pairs()
        (w1, m1), (w2, m2) = base[0], base[1]
        swapped = Marriage.of([(w1, m2), (w2, m1)] + base[2:])
        if not is_stable(market, swapped):
            assert distance_to_stability(market, swapped) == 2
            found += 1
    assert found > 10


def test_distance_capacity_and_certificate():
    market = random_market(9, FULL, random.Random(1))
    mu = deferred_acceptance(market)
    with pytest.raises(CapacityError):
        distance_to_stability(market, mu)

    class Cert:
        unique_marriage = mu

    assert distance_to_stability(market, mu, Cert()) == 0


# ---------------------------------------------------------------------------
# married sets


def test_married_sets():
    assert married_sets(Marriage.of([])) == (frozenset(), frozenset())
    assert married_sets(identity_marriage(3)) == (frozenset({1, 2, 3}), frozenset({1, 2, 3}))


# ---------------------------------------------------------------------------
# validation and files


def test_market_validation():
    with pytest.raises(DomainError):
        MarriageMarket(2, FULL, ((1, 1), (1, 2)), ((1, 2), (1, 2)))
    with pytest.raises(DomainError):
        MarriageMarket(2, FULL, ((1, 3), (1, 2)), ((1, 2), (1, 2)))
    with pytest.raises(DomainError):
        MarriageMarket(2, FULL, ((1,), (1, 2)), ((1, 2), (1, 2)))
    with pytest.raises(DomainError):
        MarriageMarket(2, "half", ((1, 2), (1, 2)), ((1, 2), (1, 2)))
    with pytest.raises(DomainError):
        Marriage.of([(1, 1), (1, 2)])
    with pytest.raises(DomainError):
        Marriage.of([(1, 1), (2, 1)])


@given(full_markets(max_n=5))
@settings(max_examples=30)
def test_market_file_roundtrip(market):
    again = market_from_json(market_to_json(market))
    assert again == market


def test_market_file_bytes_roundtrip(tmp_path):
    market = random_market(5, PARTIAL, random.Random(11))
    path = tmp_path / "m.json"
    save_market(market, path)
    first = path.read_bytes()
    save_market(load_market(path), path)
    assert path.read_bytes() == first


def test_marriage_file_roundtrip(tmp_path):
    mu = Marriage.of([(1, 3), (2, 1)])
    path = tmp_path / "mu.json"
    save_marriage(mu, 3, path)
    again, n = load_marriage(path)
    assert again == mu and n == 3
    assert marriage_from_json(marriage_to_json(mu, 3)) == (mu, 3)
