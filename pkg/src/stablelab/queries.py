"""Preference oracles with per-side query metering.

Three query families are supported: pairwise comparisons ("does w prefer
a over b?"), rank lookups, and place lookups.  Every answered query lands
in a QueryLog that counts women-side and men-side traffic separately.

On top of the oracles sit an instrumented men-proposing deferred
acceptance (whose women-side comparison count provably equals its
rejection count), a comparison-only stability verifier, an accounting
check relating the two, and an adapter that replays any comparison
strategy as a two-party protocol at one bit per query.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from .errors import DomainError, QueryError
from .market import (
    FULL,
    Marriage,
    MarriageMarket,
    Profile,
    Side,
    prefers,
    proposal_trace,
)
from .protocols import RECV, PartyGen, Send


@dataclass(frozen=True)
class ComparisonQuery:
    """Does participant ``who`` (on ``side``) prefer ``a`` over ``b``?"""

    side: Side
    who: int
    a: int
    b: int

    def __post_init__(self) -> None:
        if self.a == self.b:
            raise QueryError("comparison query needs two distinct candidates")

    def descriptor(self) -> str:
        return f"prefers({self.who}: {self.a} over {self.b})"


@dataclass(frozen=True)
class RankQuery:
    """``rank-of``: where does ``value`` sit on ``who``'s list (1-based)?
    ``at-place``: who sits at place ``value`` on ``who``'s list?"""

    side: Side
    who: int
    kind: str
    value: int

    def __post_init__(self) -> None:
        if self.kind not in ("rank-of", "at-place"):
            raise QueryError(f"unknown rank query kind {self.kind!r}")

    def descriptor(self) -> str:
        return f"{self.kind}({self.who}: {self.value})"


@dataclass
class QueryLog:
    entries: list[tuple[Side, str, object]] = field(default_factory=list)

    @property
    def women_count(self) -> int:
        return sum(1 for side, _, _ in self.entries if side is Side.WOMEN)

    @property
    def men_count(self) -> int:
        return sum(1 for side, _, _ in self.entries if side is Side.MEN)

    def count(self, side: Side) -> int:
        return self.women_count if side is Side.WOMEN else self.men_count

    def record(self, side: Side, descriptor: str, answer: object) -> None:
        self.entries.append((side, descriptor, answer))

    def dump(self) -> str:
        letter = {Side.WOMEN: "W", Side.MEN: "M"}
        return "".join(
            f"{letter[side]} {desc} -> {int(ans) if isinstance(ans, bool) else ans}\n"
            for side, desc, ans in self.entries
        )


def answer_comparison(market: MarriageMarket, q: ComparisonQuery, log: QueryLog) -> int:
    bit = 1 if market.prefers(q.side, q.who, q.a, q.b) else 0
    log.record(q.side, q.descriptor(), bit)
    return bit


def answer_rank(market: MarriageMarket, q: RankQuery, log: QueryLog) -> int:
    if market.model != FULL:
        raise QueryError("rank queries are only defined for full preference lists")
    ranked = market.profile(q.side)[q.who - 1]
    if q.kind == "rank-of":
        if not 1 <= q.value <= market.n:
            raise QueryError(f"target {q.value} out of range 1..{market.n}")
        answer = ranked.index(q.value) + 1
    else:
        if not 1 <= q.value <= market.n:
            raise QueryError(f"place {q.value} out of range 1..{market.n}")
        answer = ranked[q.value - 1]
    log.record(q.side, q.descriptor(), answer)
    return answer


# ---------------------------------------------------------------------------
# Instrumented deferred acceptance


@dataclass(frozen=True)
class DaRun:
    marriage: Marriage
    rejections: frozenset[tuple[int, int]]
    log: QueryLog


def da_instrumented(market: MarriageMarket) -> DaRun:
    """Men-proposing deferred acceptance with women-side query accounting.

    A night serenading a provisionally-single woman costs nothing (she
    accepts unconditionally); a contested night costs exactly one
    comparison onto the women's side and produces exactly one rejection,
    so the women-side count always equals the rejection count.
    """
    if market.model != FULL:
        raise DomainError("instrumented deferred acceptance expects full lists")
    log = QueryLog()
    rejections: set[tuple[int, int]] = set()
    husband: dict[int, int] = {}
    for ev in proposal_trace(market):
        if ev.woman_was_single:
            husband[ev.woman] = ev.man
            continue
        incumbent = husband[ev.woman]
        accepted = answer_comparison(
            market, ComparisonQuery(Side.WOMEN, ev.woman, ev.man, incumbent), log
        )
        if accepted:
            rejections.add((ev.woman, incumbent))
            husband[ev.woman] = ev.man
        else:
            rejections.add((ev.woman, ev.man))
    return DaRun(
        Marriage.of((w, m) for w, m in husband.items()), frozenset(rejections), log
    )


# ---------------------------------------------------------------------------
# Comparison-only stability verification


@dataclass(frozen=True)
class VerifierRun:
    stable: bool
    evidence: frozenset[tuple[int, int, int]]
    log: QueryLog


def default_verifier_order(n: int) -> list[tuple[int, int]]:
    return [(w, m) for w in range(1, n + 1) for m in range(1, n + 1)]


def comparison_verifier(
    market: MarriageMarket,
    mu: Marriage,
    order: list[tuple[int, int]] | None = None,
) -> VerifierRun:
    """Check stability using pairwise comparisons only.

    For each candidate pair, the man's side is queried first; only when he
    is tempted does the woman's side get one query.  Every answered
    women-side comparison is folded into the evidence set as an ordered
    triple (woman, preferred man, dispreferred man).
    """
    if market.model != FULL:
        raise DomainError("comparison verifier expects full lists")
    if not mu.is_perfect(market.n):
        raise DomainError("comparison verifier expects a perfect marriage")
    log = QueryLog()
    evidence: set[tuple[int, int, int]] = set()
    stable = True
    for w, m in order if order is not None else default_verifier_order(market.n):
        spouse = mu.by_woman[w]
        if m == spouse:
            continue
        tempted = answer_comparison(
            market, ComparisonQuery(Side.MEN, m, w, mu.by_man[m]), log
        )
        if not tempted:
            continue
        keeps = answer_comparison(market, ComparisonQuery(Side.WOMEN, w, spouse, m), log)
        if keeps:
            evidence.add((w, spouse, m))
        else:
            evidence.add((w, m, spouse))
            stable = False
    return VerifierRun(stable, frozenset(evidence), log)


@dataclass(frozen=True)
class OptimalityReport:
    rejections: int
    evidence: int
    verifier_women: int
    verifier_men: int
    holds: bool

    def to_json(self) -> dict:
        return {
            "R": self.rejections,
            "Q": self.evidence,
            "verifierW": self.verifier_women,
            "holds": self.holds,
        }


def optimality_check(market: MarriageMarket) -> OptimalityReport:
    """Compare deferred acceptance's women-side query count against a
    comparison-only verifier run on the same (stable) output marriage.

    Every rejection must reappear as the dispreferred man of some
    evidence triple, so the rejection count can never exceed the
    verifier's women-side count.  A failure here is a theorem violation
    and must never happen.
    """
    da = da_instrumented(market)
    ver = comparison_verifier(market, da.marriage)
    projection = {(w, worse) for w, _better, worse in ver.evidence}
    holds = (
        da.rejections <= projection
        and len(da.rejections) <= len(ver.evidence) <= ver.log.women_count
        and da.log.women_count == len(da.rejections)
    )
    return OptimalityReport(
        len(da.rejections), len(ver.evidence), ver.log.women_count, ver.log.men_count, holds
    )


# ---------------------------------------------------------------------------
# Query strategies and the protocol adapter


def verifier_strategy(mu: Marriage, n: int, order: list[tuple[int, int]] | None = None):
    """Co-simulable comparison strategy mirroring comparison_verifier.

    The control flow depends only on the fixed marriage and on query
    answers, so both parties can replay it in lockstep.
    """

    def factory():
        stable = True
        for w, m in order if order is not None else default_verifier_order(n):
            spouse = mu.by_woman[w]
            if m == spouse:
                continue
            tempted = yield ComparisonQuery(Side.MEN, m, w, mu.by_man[m])
            if not tempted:
                continue
            keeps = yield ComparisonQuery(Side.WOMEN, w, spouse, m)
            if not keeps:
                stable = False
        return stable

    return factory


def da_strategy(n: int):
    """Men-resident deferred acceptance strategy: reads the men's profile
    directly and queries only the women's side (one comparison per
    contested night)."""

    def factory(men: Profile):
        pointer = [0] * (n + 1)
        husband: dict[int, int] = {}
        singles = set(range(1, n + 1))
        while singles:
            m = min(singles)
            w = men[m - 1][pointer[m]]
            pointer[m] += 1
            incumbent = husband.get(w)
            if incumbent is None:
                husband[w] = m
                singles.discard(m)
                continue
            if (yield ComparisonQuery(Side.WOMEN, w, m, incumbent)):
                husband[w] = m
                singles.discard(m)
                singles.add(incumbent)
        return Marriage.of((w, m) for w, m in husband.items())

    return factory


_DONE = object()


def _evaluate(query: ComparisonQuery, profile: Profile, side: Side) -> bool:
    if query.side is not side:
        raise QueryError(f"query for {query.side.value} reached the {side.value} holder")
    return prefers(profile, query.who, query.a, query.b)


class QueryProtocol:
    """Replay a comparison strategy as a protocol at one bit per query.

    Co-simulated mode (``home=None``): both parties run the strategy; the
    owner of each queried side computes the answer and transmits it, so
    total bits equal total queries and the output is common.

    Home mode (``home=<side>``): the strategy runs on one side with direct
    access to that profile; queries to the other side travel as zero-bit
    descriptor frames answered by one bit each, so total bits equal the
    remote-side query count.  The output is known to the home side only.
    """

    def __init__(self, name: str, strategy_factory, home: Side | None = None):
        self.name = name
        self.factory = strategy_factory
        self.home = home
        self.one_sided = None if home is None else ("A" if home is Side.WOMEN else "B")

    def _cosim(self, profile: Profile, side: Side) -> PartyGen:
        gen = self.factory()
        answer = None
        while True:
            try:
                query = gen.send(answer)
            except StopIteration as stop:
                return stop.value
            if not isinstance(query, ComparisonQuery):
                raise QueryError(f"adapter supports comparison queries only, got {query!r}")
            if query.side is side:
                bit = _evaluate(query, profile, side)
                yield Send("1" if bit else "0")
                answer = bit
            else:
                msg = yield RECV
                answer = msg.bits == "1"

    def _home_party(self, profile: Profile, side: Side) -> PartyGen:
        gen = self.factory(profile)
        answer = None
        while True:
            try:
                query = gen.send(answer)
            except StopIteration as stop:
                yield Send("", note=_DONE)
                return stop.value
            if not isinstance(query, ComparisonQuery):
                raise QueryError(f"adapter supports comparison queries only, got {query!r}")
            if query.side is side:
                answer = _evaluate(query, profile, side)
            else:
                yield Send("", note=query)
                msg = yield RECV
                answer = msg.bits == "1"

    def _responder(self, profile: Profile, side: Side) -> PartyGen:
        while True:
            msg = yield RECV
            if msg.note is _DONE:
                return None
            bit = _evaluate(msg.note, profile, side)
            yield Send("1" if bit else "0")

    def alice(self, women: Profile, coins: random.Random) -> PartyGen:
        if self.home is None:
            return self._cosim(women, Side.WOMEN)
        if self.home is Side.WOMEN:
            return self._home_party(women, Side.WOMEN)
        return self._responder(women, Side.WOMEN)

    def bob(self, men: Profile, coins: random.Random) -> PartyGen:
        if self.home is None:
            return self._cosim(men, Side.MEN)
        if self.home is Side.MEN:
            return self._home_party(men, Side.MEN)
        return self._responder(men, Side.MEN)
