"""Marriage-market data model and the algorithms that operate on it.

A market pairs ``n`` women with ``n`` men, each participant carrying an
ordered preference list over the opposite side.  Two list models are
supported:

* ``"full"`` -- every list is a permutation of ``1..n``;
* ``"partial"`` -- lists are ordered subsets; anyone absent from a list is
  unacceptable, and marriages may leave participants single.

Indices are 1-based throughout.  All values are immutable once built, so
they can be shared freely between threads and reused as dict keys.

The module provides stability predicates, men-proposing deferred
acceptance, a brute-force enumeration of all stable marriages (the oracle
every other module is checked against, capped at small ``n``), and the
divorce-distance metric between perfect marriages.
"""

from __future__ import annotations

import itertools
import json
import random
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from pathlib import Path
from typing import Iterable, Iterator, NamedTuple

from .errors import CapacityError, DomainError

FULL = "full"
PARTIAL = "partial"

# Largest n the brute-force enumeration accepts by default.  Full-model
# enumeration walks all n! perfect marriages; partial-model enumeration
# walks all injective partial maps, which grows faster.
FULL_ORACLE_BOUND = 8
PARTIAL_ORACLE_BOUND = 6

Profile = tuple[tuple[int, ...], ...]


class Side(str, Enum):
    WOMEN = "women"
    MEN = "men"

    @property
    def other(self) -> "Side":
        return Side.MEN if self is Side.WOMEN else Side.WOMEN


class Participant(NamedTuple):
    side: Side
    index: int


def _validate_profile(lists: Profile, n: int, model: str, label: str) -> None:
    if len(lists) != n:
        raise DomainError(f"{label} profile must have exactly {n} lists, got {len(lists)}")
    for who, ranked in enumerate(lists, 1):
        if len(set(ranked)) != len(ranked):
            raise DomainError(f"{label} list {who} contains duplicates")
        for idx in ranked:
            if not 1 <= idx <= n:
                raise DomainError(f"{label} list {who} ranks out-of-range index {idx}")
        if model == FULL and len(ranked) != n:
            raise DomainError(f"{label} list {who} has length {len(ranked)}, full model needs {n}")


@dataclass(frozen=True)
class MarriageMarket:
    """Two preference profiles over disjoint equal-size sides.

    ``women[i-1]`` is woman ``i``'s ranked list of men, best first;
    ``men[j-1]`` is man ``j``'s ranked list of women.
    """

    n: int
    model: str
    women: Profile
    men: Profile

    def __post_init__(self) -> None:
        if self.n < 1:
            raise DomainError(f"market size must be >= 1, got {self.n}")
        if self.model not in (FULL, PARTIAL):
            raise DomainError(f"unknown model {self.model!r}")
        object.__setattr__(self, "women", tuple(tuple(l) for l in self.women))
        object.__setattr__(self, "men", tuple(tuple(l) for l in self.men))
        _validate_profile(self.women, self.n, self.model, "women")
        _validate_profile(self.men, self.n, self.model, "men")

    @cached_property
    def women_ranks(self) -> tuple[dict[int, int], ...]:
        return tuple({m: r for r, m in enumerate(l)} for l in self.women)

    @cached_property
    def men_ranks(self) -> tuple[dict[int, int], ...]:
        return tuple({w: r for r, w in enumerate(l)} for l in self.men)

    def profile(self, side: Side) -> Profile:
        return self.women if side is Side.WOMEN else self.men

    def ranks(self, side: Side) -> tuple[dict[int, int], ...]:
        return self.women_ranks if side is Side.WOMEN else self.men_ranks

    def prefers(self, side: Side, who: int, a: int, b: int) -> bool:
        return prefers(self.profile(side), who, a, b)

    def weakly_prefers(self, side: Side, who: int, a: int, b: int) -> bool:
        return a == b or prefers(self.profile(side), who, a, b)

    def transpose(self) -> "MarriageMarket":
        """Swap the two sides (women's lists become men's and vice versa)."""
        return MarriageMarket(self.n, self.model, self.men, self.women)


@dataclass(frozen=True)
class Marriage:
    """An injective partial mapping between women and men, as a pair set."""

    pairs: frozenset[tuple[int, int]]

    def __post_init__(self) -> None:
        object.__setattr__(self, "pairs", frozenset((int(w), int(m)) for w, m in self.pairs))
        women = [w for w, _ in self.pairs]
        men = [m for _, m in self.pairs]
        if len(set(women)) != len(women):
            raise DomainError("a woman appears in more than one pair")
        if len(set(men)) != len(men):
            raise DomainError("a man appears in more than one pair")

    @classmethod
    def of(cls, pairs: Iterable[tuple[int, int]]) -> "Marriage":
        return cls(frozenset(pairs))

    @cached_property
    def by_woman(self) -> dict[int, int]:
        return {w: m for w, m in self.pairs}

    @cached_property
    def by_man(self) -> dict[int, int]:
        return {m: w for w, m in self.pairs}

    def spouse(self, side: Side, who: int) -> int | None:
        table = self.by_woman if side is Side.WOMEN else self.by_man
        return table.get(who)

    def is_perfect(self, n: int) -> bool:
        return len(self.pairs) == n and all(1 <= w <= n and 1 <= m <= n for w, m in self.pairs)

    def sorted_pairs(self) -> list[tuple[int, int]]:
        return sorted(self.pairs)


def identity_marriage(n: int) -> Marriage:
    return Marriage.of((i, i) for i in range(1, n + 1))


# ---------------------------------------------------------------------------
# Preference predicates


def prefers(profile: Profile, who: int, a: int, b: int) -> bool:
    """Does participant ``who`` rank ``a`` strictly above ``b``?

    With partial lists, a listed candidate beats any unlisted one; two
    unlisted candidates are incomparable (False).
    """
    n = len(profile)
    if not 1 <= who <= n:
        raise DomainError(f"participant index {who} out of range 1..{n}")
    for idx in (a, b):
        if not 1 <= idx <= n:
            raise DomainError(f"candidate index {idx} out of range 1..{n}")
    if a == b:
        raise DomainError("prefers() needs two distinct candidates")
    ranked = profile[who - 1]
    for entry in ranked:
        if entry == a:
            return True
        if entry == b:
            return False
    return False


def weakly_prefers(profile: Profile, who: int, a: int, b: int) -> bool:
    return a == b or prefers(profile, who, a, b)


def _valid_marriage(market: MarriageMarket, mu: Marriage) -> None:
    for w, m in mu.pairs:
        if not (1 <= w <= market.n and 1 <= m <= market.n):
            raise DomainError(f"pair ({w},{m}) out of range for n={market.n}")


def is_blocking_pair(market: MarriageMarket, mu: Marriage, w: int, m: int) -> bool:
    """Would woman ``w`` and man ``m`` both rather be with each other?

    An unmarried participant prefers any listed candidate over staying
    single, so a single woman is "tempted" by every man on her list.
    """
    _valid_marriage(market, mu)
    if not (1 <= w <= market.n and 1 <= m <= market.n):
        raise DomainError(f"pair ({w},{m}) out of range for n={market.n}")
    wrank = market.women_ranks[w - 1]
    mrank = market.men_ranks[m - 1]
    if m not in wrank or w not in mrank:
        return False
    husband = mu.by_woman.get(w)
    if husband == m:
        return False
    if husband is not None:
        current = wrank.get(husband)
        if current is not None and current < wrank[m]:
            return False  # she likes her husband better
    wife = mu.by_man.get(m)
    if wife is not None:
        current = mrank.get(wife)
        if current is not None and current < mrank[w]:
            return False
    return True


def blocking_pairs(market: MarriageMarket, mu: Marriage) -> frozenset[tuple[int, int]]:
    n = market.n
    return frozenset(
        (w, m)
        for w in range(1, n + 1)
        for m in range(1, n + 1)
        if is_blocking_pair(market, mu, w, m)
    )


def is_stable(market: MarriageMarket, mu: Marriage) -> bool:
    """No blocking pair, and (partial model) nobody married off-list."""
    _valid_marriage(market, mu)
    for w, m in mu.pairs:
        if m not in market.women_ranks[w - 1] or w not in market.men_ranks[m - 1]:
            return False
    n = market.n
    wranks = market.women_ranks
    mranks = market.men_ranks
    by_woman = mu.by_woman
    wife_of = mu.by_man
    for w in range(1, n + 1):
        wrank = wranks[w - 1]
        husband = by_woman.get(w)
        ranked = market.women[w - 1]
        limit = wrank[husband] if husband is not None else len(ranked)
        for t in range(limit):
            m = ranked[t]
            mrank = mranks[m - 1]
            if w not in mrank:
                continue
            wife = wife_of.get(m)
            if wife is None or mrank.get(wife, n + 1) > mrank[w]:
                return False
    return True


# ---------------------------------------------------------------------------
# Deferred acceptance


class ProposalEvent(NamedTuple):
    man: int
    woman: int
    accepted: bool
    displaced: int | None
    woman_was_single: bool


def proposal_trace(market: MarriageMarket) -> list[ProposalEvent]:
    """Run men-proposing deferred acceptance, one event per night.

    Each night the lowest-index provisionally-single man serenades the
    best woman who has not yet rejected him.  The trace is deterministic,
    and its length is the number of proposals performed.
    """
    n = market.n
    men_lists = market.men
    wranks = market.women_ranks
    pointer = [0] * (n + 1)
    husband = [0] * (n + 1)  # husband[w] = provisional man, 0 if single
    singles = set(range(1, n + 1))
    events: list[ProposalEvent] = []
    while singles:
        m = min(singles)
        ranked = men_lists[m - 1]
        if pointer[m] >= len(ranked):
            singles.discard(m)  # out of acceptable women; stays single
            continue
        w = ranked[pointer[m]]
        pointer[m] += 1
        wrank = wranks[w - 1]
        if m not in wrank:
            events.append(ProposalEvent(m, w, False, None, husband[w] == 0))
            continue
        incumbent = husband[w]
        if incumbent == 0:
            husband[w] = m
            singles.discard(m)
            events.append(ProposalEvent(m, w, True, None, True))
        elif wrank[m] < wrank[incumbent]:
            husband[w] = m
            singles.discard(m)
            singles.add(incumbent)
            events.append(ProposalEvent(m, w, True, incumbent, False))
        else:
            events.append(ProposalEvent(m, w, False, None, False))
    return events


def deferred_acceptance(market: MarriageMarket) -> Marriage:
    """The M-optimal stable marriage (participants may stay single with
    partial lists)."""
    provisional: dict[int, int] = {}
    for ev in proposal_trace(market):
        if ev.accepted:
            provisional[ev.woman] = ev.man
    return Marriage.of((w, m) for w, m in provisional.items())


# ---------------------------------------------------------------------------
# Brute-force enumeration (the oracle)


def _dense_ranks(profile: Profile, n: int) -> list[list[int]]:
    # table[who][other] = rank; row 0 unused
    table = [[0] * (n + 1) for _ in range(n + 1)]
    for who in range(1, n + 1):
        for r, other in enumerate(profile[who - 1]):
            table[who][other] = r
    return table


def _enumerate_full(market: MarriageMarket) -> Iterator[Marriage]:
    n = market.n
    wrank = _dense_ranks(market.women, n)
    mrank = _dense_ranks(market.men, n)
    wlists = market.women
    for perm in itertools.permutations(range(1, n + 1)):
        wife = [0] * (n + 1)
        for w in range(1, n + 1):
            wife[perm[w - 1]] = w
        stable = True
        for w in range(1, n + 1):
            ranked = wlists[w - 1]
            rw = wrank[w]
            limit = rw[perm[w - 1]]
            for t in range(limit):
                m = ranked[t]
                rm = mrank[m]
                if rm[w] < rm[wife[m]]:
                    stable = False
                    break
            if not stable:
                break
        if stable:
            yield Marriage.of((w, perm[w - 1]) for w in range(1, n + 1))


def _enumerate_partial(market: MarriageMarket) -> Iterator[Marriage]:
    # Walks every injective partial map, skipping assignments that marry
    # someone off-list (those are unstable by definition, so nothing is
    # lost), then filters by blocking pairs.
    n = market.n
    wlists = market.women
    wranks = market.women_ranks
    mranks = market.men_ranks
    options = [
        [m for m in wlists[w - 1] if w in mranks[m - 1]] for w in range(1, n + 1)
    ]

    husband = [0] * (n + 1)
    wife = [0] * (n + 1)

    def stable_here() -> bool:
        for w in range(1, n + 1):
            ranked = wlists[w - 1]
            h = husband[w]
            limit = wranks[w - 1][h] if h else len(ranked)
            for t in range(limit):
                m = ranked[t]
                mrank = mranks[m - 1]
                if w not in mrank:
                    continue
                cur = wife[m]
                if cur == 0 or mrank.get(cur, n + 1) > mrank[w]:
                    return False
        return True

    def rec(w: int) -> Iterator[Marriage]:
        if w > n:
            if stable_here():
                yield Marriage.of((i, husband[i]) for i in range(1, n + 1) if husband[i])
            return
        # stay single
        yield from rec(w + 1)
        for m in options[w - 1]:
            if wife[m] == 0:
                husband[w] = m
                wife[m] = w
                yield from rec(w + 1)
                husband[w] = 0
                wife[m] = 0

    yield from rec(1)


def enumerate_stable(
    market: MarriageMarket,
    *,
    full_bound: int = FULL_ORACLE_BOUND,
    partial_bound: int = PARTIAL_ORACLE_BOUND,
) -> frozenset[Marriage]:
    """Every stable marriage of the market, by exhaustive search.

    Never empty.  Raises CapacityError past the configured size bound.
    """
    if market.model == FULL:
        if market.n > full_bound:
            raise CapacityError(f"full-model oracle capped at n={full_bound}, got n={market.n}")
        return frozenset(_enumerate_full(market))
    if market.n > partial_bound:
        raise CapacityError(f"partial-model oracle capped at n={partial_bound}, got n={market.n}")
    return frozenset(_enumerate_partial(market))


# ---------------------------------------------------------------------------
# Divorce distance


def divorce_distance(mu: Marriage, mu_prime: Marriage, n: int) -> int:
    """Minimum number of divorces to turn one perfect marriage into the other."""
    if not mu.is_perfect(n) or not mu_prime.is_perfect(n):
        raise DomainError("divorce distance is defined between perfect marriages")
    return n - len(mu.pairs & mu_prime.pairs)


def distance_to_stability(
    market: MarriageMarket,
    mu: Marriage,
    certificate: "object | None" = None,
    *,
    full_bound: int = FULL_ORACLE_BOUND,
) -> int:
    """Divorce distance from ``mu`` to the nearest stable marriage.

    Past the oracle bound this needs a uniqueness certificate from one of
    the embedding generators; the certified marriage then serves as the
    (sole) comparison point.
    """
    if market.model != FULL:
        raise DomainError("distance to stability is defined for full-model markets")
    if not mu.is_perfect(market.n):
        raise DomainError("distance to stability needs a perfect marriage")
    cert_marriage = getattr(certificate, "unique_marriage", None)
    if cert_marriage is not None:
        return divorce_distance(mu, cert_marriage, market.n)
    if market.n > full_bound:
        raise CapacityError(
            f"n={market.n} exceeds oracle bound {full_bound} and no uniqueness certificate given"
        )
    return min(divorce_distance(mu, s, market.n) for s in enumerate_stable(market, full_bound=full_bound))


def married_sets(mu: Marriage) -> tuple[frozenset[int], frozenset[int]]:
    return frozenset(w for w, _ in mu.pairs), frozenset(m for _, m in mu.pairs)


def weakly_prefers_marriage(
    market: MarriageMarket, side: Side, who: int, mu_a: Marriage, mu_b: Marriage
) -> bool:
    """Does ``who`` weakly prefer their lot in ``mu_a`` over ``mu_b``?

    Spouses are compared by list rank; any listed spouse beats being
    single.
    """
    a = mu_a.spouse(side, who)
    b = mu_b.spouse(side, who)
    if a == b:
        return True
    if a is None:
        return False
    if b is None:
        return True
    return prefers(market.profile(side), who, a, b)


# ---------------------------------------------------------------------------
# Random instances and file formats


def random_market(n: int, model: str, rng: random.Random) -> MarriageMarket:
    """Uniform market: full lists are independent uniform permutations;
    partial lists are uniformly sized uniform ordered subsets."""

    def one_side() -> Profile:
        lists = []
        for _ in range(n):
            if model == FULL:
                perm = list(range(1, n + 1))
                rng.shuffle(perm)
                lists.append(tuple(perm))
            else:
                k = rng.randint(0, n)
                lists.append(tuple(rng.sample(range(1, n + 1), k)))
        return tuple(lists)

    return MarriageMarket(n, model, one_side(), one_side())


def canonical_json(obj: object) -> str:
    """Deterministic JSON encoding used for every file this package writes."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":")) + "\n"


def market_to_json(market: MarriageMarket) -> dict:
    return {
        "n": market.n,
        "model": market.model,
        "women": [list(l) for l in market.women],
        "men": [list(l) for l in market.men],
    }


def market_from_json(data: dict) -> MarriageMarket:
    try:
        return MarriageMarket(
            int(data["n"]),
            str(data["model"]),
            tuple(tuple(int(x) for x in l) for l in data["women"]),
            tuple(tuple(int(x) for x in l) for l in data["men"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise DomainError(f"malformed market file: {exc}") from exc


def save_market(market: MarriageMarket, path: str | Path) -> None:
    Path(path).write_text(canonical_json(market_to_json(market)), encoding="utf-8")


def load_market(path: str | Path) -> MarriageMarket:
    return market_from_json(json.loads(Path(path).read_text(encoding="utf-8")))


def marriage_to_json(mu: Marriage, n: int) -> dict:
    return {"n": n, "pairs": [[w, m] for w, m in mu.sorted_pairs()]}


def marriage_from_json(data: dict) -> tuple[Marriage, int]:
    try:
        mu = Marriage.of((int(w), int(m)) for w, m in data["pairs"])
        return mu, int(data["n"])
    except (KeyError, TypeError, ValueError) as exc:
        raise DomainError(f"malformed marriage file: {exc}") from exc


def save_marriage(mu: Marriage, n: int, path: str | Path) -> None:
    Path(path).write_text(canonical_json(marriage_to_json(mu, n)), encoding="utf-8")


def load_marriage(path: str | Path) -> tuple[Marriage, int]:
    return marriage_from_json(json.loads(Path(path).read_text(encoding="utf-8")))
