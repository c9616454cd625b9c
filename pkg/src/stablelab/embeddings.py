"""Generators that turn set-disjointness instances into marriage markets.

Each generator comes with a machine-checkable contract relating the
disjointness of the two bit assignments to a structural fact about the
produced market (identity marriage stable, unique stable marriage,
participant single, ...).  The contracts are verified against the
brute-force oracle in the test suite; ``verify_certificate`` re-checks
any emitted certificate at desk scale.

Two bit domains are used.  ``offdiag`` assigns one bit per ordered pair
of distinct indices (woman i's opinion of man j, and dually), which is
the domain of the pointwise embeddings.  ``grid`` assigns one bit per
cell of a k x k grid and feeds the three-tier (high/mid/low)
construction, where only the high participants carry bits.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Iterator

from .errors import CapacityError, DomainError, ParameterError
from .market import (
    FULL,
    PARTIAL,
    Marriage,
    MarriageMarket,
    Participant,
    Profile,
    Side,
    canonical_json,
    enumerate_stable,
    identity_marriage,
    is_stable,
)

OFFDIAG = "offdiag"
GRID = "grid"


def offdiag_cells(n: int) -> list[tuple[int, int]]:
    """Ordered pairs of distinct indices, row-major."""
    return [(i, j) for i in range(1, n + 1) for j in range(1, n + 1) if i != j]


def grid_cells(k: int) -> list[tuple[int, int]]:
    return [(i, j) for i in range(1, k + 1) for j in range(1, k + 1)]


def _domain_cells(domain: str, n: int) -> list[tuple[int, int]]:
    if domain == OFFDIAG:
        return offdiag_cells(n)
    if domain == GRID:
        return grid_cells(n)
    raise DomainError(f"unknown bit domain {domain!r}")


@dataclass(frozen=True)
class UniqueIntersectionWitness:
    """The single common 1-cell of a uniquely-intersecting instance.

    ``alpha``/``beta`` are both None exactly when the instance is disjoint.
    """

    alpha: int | None
    beta: int | None

    def __post_init__(self) -> None:
        if (self.alpha is None) != (self.beta is None):
            raise DomainError("witness must carry both coordinates or neither")

    @property
    def absent(self) -> bool:
        return self.alpha is None


@dataclass(frozen=True)
class DisjInstance:
    """Two bit assignments over a common cell domain.

    ``x`` belongs to the women's side, ``y`` to the men's; both are flat
    tuples in the canonical cell order of the domain.
    """

    domain: str
    n: int
    x: tuple[int, ...]
    y: tuple[int, ...]

    def __post_init__(self) -> None:
        cells = _domain_cells(self.domain, self.n)
        object.__setattr__(self, "x", tuple(int(b) for b in self.x))
        object.__setattr__(self, "y", tuple(int(b) for b in self.y))
        for name, bits in (("x", self.x), ("y", self.y)):
            if len(bits) != len(cells):
                raise DomainError(
                    f"{name} has {len(bits)} bits, domain {self.domain}({self.n}) needs {len(cells)}"
                )
            if any(b not in (0, 1) for b in bits):
                raise DomainError(f"{name} contains non-bit entries")

    @property
    def cells(self) -> list[tuple[int, int]]:
        return _domain_cells(self.domain, self.n)

    def _flat(self, i: int, j: int) -> int:
        if self.domain == GRID:
            if not (1 <= i <= self.n and 1 <= j <= self.n):
                raise DomainError(f"cell ({i},{j}) outside grid({self.n})")
            return (i - 1) * self.n + (j - 1)
        if i == j or not (1 <= i <= self.n and 1 <= j <= self.n):
            raise DomainError(f"cell ({i},{j}) outside offdiag({self.n})")
        return (i - 1) * (self.n - 1) + (j - 1 if j < i else j - 2)

    def x_bit(self, i: int, j: int) -> int:
        return self.x[self._flat(i, j)]

    def y_bit(self, i: int, j: int) -> int:
        return self.y[self._flat(i, j)]

    def intersection(self) -> list[tuple[int, int]]:
        return [c for c, xb, yb in zip(self.cells, self.x, self.y) if xb and yb]

    def disj(self) -> int:
        """1 when the two assignments share no 1-cell, else 0."""
        return 1 if not self.intersection() else 0

    def unique_intersection(self) -> UniqueIntersectionWitness | None:
        """Witness for instances with at most one common 1-cell, else None."""
        common = self.intersection()
        if not common:
            return UniqueIntersectionWitness(None, None)
        if len(common) == 1:
            return UniqueIntersectionWitness(*common[0])
        return None

    @classmethod
    def zeros(cls, domain: str, n: int) -> "DisjInstance":
        size = len(_domain_cells(domain, n))
        return cls(domain, n, (0,) * size, (0,) * size)

    @classmethod
    def from_cells(
        cls,
        domain: str,
        n: int,
        x_ones: Iterable[tuple[int, int]],
        y_ones: Iterable[tuple[int, int]],
    ) -> "DisjInstance":
        cells = _domain_cells(domain, n)
        index = {c: t for t, c in enumerate(cells)}
        x = [0] * len(cells)
        y = [0] * len(cells)
        for c in x_ones:
            x[index[tuple(c)]] = 1
        for c in y_ones:
            y[index[tuple(c)]] = 1
        return cls(domain, n, tuple(x), tuple(y))

    @classmethod
    def random(cls, domain: str, n: int, rng: random.Random) -> "DisjInstance":
        size = len(_domain_cells(domain, n))
        return cls(
            domain,
            n,
            tuple(rng.randint(0, 1) for _ in range(size)),
            tuple(rng.randint(0, 1) for _ in range(size)),
        )


def all_instances(domain: str, n: int) -> Iterator[DisjInstance]:
    """Every bit-assignment pair over the domain (exponential; tiny n only)."""
    size = len(_domain_cells(domain, n))
    for xv in range(1 << size):
        x = tuple((xv >> t) & 1 for t in range(size))
        for yv in range(1 << size):
            y = tuple((yv >> t) & 1 for t in range(size))
            yield DisjInstance(domain, n, x, y)


# ---------------------------------------------------------------------------
# Pointwise embeddings (offdiag domain)


def _sorted_ones_list(inst_bit, i: int, n: int) -> list[int]:
    return [j for j in range(1, n + 1) if j != i and inst_bit(i, j) == 1]


def stability_check_women(inst: DisjInstance) -> Profile:
    """Women's full lists: 1-bit partners, own anchor, everyone else."""
    n = inst.n
    lists = []
    for i in range(1, n + 1):
        ones = _sorted_ones_list(inst.x_bit, i, n)
        rest = [j for j in range(1, n + 1) if j != i and j not in set(ones)]
        lists.append(tuple(ones + [i] + rest))
    return tuple(lists)


def stability_check_men(inst: DisjInstance) -> Profile:
    n = inst.n
    lists = []
    for j in range(1, n + 1):
        ones = [i for i in range(1, n + 1) if i != j and inst.y_bit(i, j) == 1]
        rest = [i for i in range(1, n + 1) if i != j and i not in set(ones)]
        lists.append(tuple(ones + [j] + rest))
    return tuple(lists)


def embed_stability_check(inst: DisjInstance) -> MarriageMarket:
    """Full market where the identity marriage is stable iff the instance
    is disjoint."""
    if inst.domain != OFFDIAG:
        raise DomainError("stability-check embedding needs an offdiag instance")
    return MarriageMarket(inst.n, FULL, stability_check_women(inst), stability_check_men(inst))


def embed_unique_partial(inst: DisjInstance) -> MarriageMarket:
    """Partial market: disjoint => identity is the unique stable marriage;
    intersecting => identity is unstable."""
    if inst.domain != OFFDIAG:
        raise DomainError("unique-partial embedding needs an offdiag instance")
    n = inst.n
    women = tuple(
        tuple(_sorted_ones_list(inst.x_bit, i, n) + [i]) for i in range(1, n + 1)
    )
    men = tuple(
        tuple([i for i in range(1, n + 1) if i != j and inst.y_bit(i, j) == 1] + [j])
        for j in range(1, n + 1)
    )
    return MarriageMarket(n, PARTIAL, women, men)


# ---------------------------------------------------------------------------
# Partial -> full liftings


def _padded(prefix: list[int], own: int, total: int, descending: bool) -> tuple[int, ...]:
    seen = set(prefix) | {own}
    rest = [k for k in range(1, total + 1) if k not in seen]
    if descending:
        rest.reverse()
    return tuple(prefix + [own] + rest)


def complete_preferences(market: MarriageMarket, *, padding: str = "ascending") -> MarriageMarket:
    """Lift a partial market over n couples to a full market over 2n.

    Participant i keeps their list, then gets companion n+i, then all
    remaining candidates; companion n+i tops participant i.  A marriage is
    stable in the input exactly when it extends to (is a submarriage of)
    some stable marriage of the output.

    ``padding`` orders the trailing filler block ("ascending" or
    "descending"); the contract holds either way.
    """
    if market.model != PARTIAL:
        raise DomainError("completion expects a partial-model market")
    if padding not in ("ascending", "descending"):
        raise ParameterError(f"unknown padding order {padding!r}")
    desc = padding == "descending"
    n = market.n
    women = []
    men = []
    for i in range(1, n + 1):
        women.append(_padded(list(market.women[i - 1]), n + i, 2 * n, desc))
        men.append(_padded(list(market.men[i - 1]), n + i, 2 * n, desc))
    for i in range(1, n + 1):
        women.append(_padded([], i, 2 * n, desc))
        men.append(_padded([], i, 2 * n, desc))
    return MarriageMarket(2 * n, FULL, tuple(women), tuple(men))


def lift_unique_to_full(market: MarriageMarket) -> MarriageMarket:
    """Completion with sorted filler blocks.

    Strengthens the completion contract: if the identity marriage is the
    unique stable marriage of the input, the doubled identity marriage is
    the unique stable marriage of the output; if the identity marriage is
    unstable in the input, it stays unstable in the output.
    """
    return complete_preferences(market, padding="ascending")


def is_submarriage(small: Marriage, big: Marriage, n: int) -> bool:
    """Is ``small`` (over couples 1..n) the restriction of ``big`` to 1..n?"""
    for w in range(1, n + 1):
        s = small.by_woman.get(w)
        b = big.by_woman.get(w)
        if s is not None:
            if b != s:
                return False
        elif b is not None and b <= n:
            return False
    for m in range(1, n + 1):
        if m not in small.by_man:
            w = big.by_man.get(m)
            if w is not None and w <= n:
                return False
    return True


# ---------------------------------------------------------------------------
# Single-status embeddings


def embed_single_status(
    inst: DisjInstance, side: Side = Side.WOMEN
) -> tuple[MarriageMarket, Participant]:
    """Partial market over 2n couples with a designated subject who is
    single in some (equivalently every) stable marriage iff the instance
    is disjoint.

    Built for a subject on the women's side; the men's-side variant is the
    transposed market.
    """
    if inst.domain != OFFDIAG:
        raise DomainError("single-status embedding needs an offdiag instance")
    n = inst.n
    women: list[tuple[int, ...]] = []
    for i in range(1, n + 1):
        women.append(tuple(_sorted_ones_list(inst.x_bit, i, n) + [n + i]))
    women.append(tuple(range(n + 1, 2 * n + 1)))  # the subject lists every companion
    for _ in range(2, n + 1):
        women.append(())
    men: list[tuple[int, ...]] = []
    for j in range(1, n + 1):
        men.append(tuple(i for i in range(1, n + 1) if i != j and inst.y_bit(i, j) == 1))
    for j in range(1, n + 1):
        men.append((j, n + 1))  # companion j: first w_j, then the subject
    market = MarriageMarket(2 * n, PARTIAL, tuple(women), tuple(men))
    subject = Participant(side, n + 1)
    if side is Side.MEN:
        market = market.transpose()
    return market, subject


def lift_single_to_couple(
    market: MarriageMarket, w: int
) -> tuple[MarriageMarket, tuple[int, int]]:
    """Full 2n market plus a designated pair (w, companion) that is married
    in some (equivalently every) stable marriage of the output iff woman
    ``w`` is single in some stable marriage of the input."""
    if not 1 <= w <= market.n:
        raise DomainError(f"woman index {w} out of range 1..{market.n}")
    return complete_preferences(market), (w, market.n + w)


def negate_single_status(
    market: MarriageMarket, w: int
) -> tuple[MarriageMarket, int]:
    """Append a suitor who lists only woman ``w`` (and a placeholder woman
    with an empty list).  The suitor is married in every stable marriage of
    the output iff ``w`` is single in some stable marriage of the input;
    stable marriages are in bijection between the two markets."""
    if market.model != PARTIAL:
        raise DomainError("single-status negation expects a partial-model market")
    if not 1 <= w <= market.n:
        raise DomainError(f"woman index {w} out of range 1..{market.n}")
    n = market.n
    suitor = n + 1
    women = [
        tuple(market.women[i - 1]) + ((suitor,) if i == w else ())
        for i in range(1, n + 1)
    ]
    women.append(())
    men = [tuple(market.men[j - 1]) for j in range(1, n + 1)]
    men.append((w,))
    return MarriageMarket(n + 1, PARTIAL, tuple(women), tuple(men)), suitor


# ---------------------------------------------------------------------------
# Three-tier construction (grid domain)


@dataclass(frozen=True)
class ThreeTierParams:
    """Sizes for the high/mid/low market: ``delta*n/2`` high pairs carrying
    the bits, ``(1-delta)*n/2`` mid, ``n/2`` low."""

    n: int
    delta: Fraction

    def __post_init__(self) -> None:
        object.__setattr__(self, "delta", Fraction(self.delta))
        if self.n < 2 or self.n % 2:
            raise ParameterError(f"three-tier market needs even n >= 2, got {self.n}")
        if not 0 < self.delta <= 1:
            raise ParameterError(f"delta must lie in (0,1], got {self.delta}")
        for label, count in (("high", self.delta * self.n / 2), ("mid", (1 - self.delta) * self.n / 2)):
            if count.denominator != 1:
                raise ParameterError(
                    f"{label} tier size {count} is not an integer for n={self.n}, delta={self.delta}"
                )

    @property
    def high(self) -> int:
        return int(self.delta * self.n / 2)

    @property
    def mid(self) -> int:
        return int((1 - self.delta) * self.n / 2)

    @property
    def low(self) -> int:
        return self.n // 2

    def high_range(self) -> range:
        return range(1, self.high + 1)

    def mid_range(self) -> range:
        return range(self.high + 1, self.n // 2 + 1)

    def low_range(self) -> range:
        return range(self.n // 2 + 1, self.n + 1)


def _three_tier_side(params: ThreeTierParams, bit_of) -> Profile:
    n = params.n
    half = n // 2
    low_block = list(params.low_range())
    mid_block = list(params.mid_range())
    lists: list[tuple[int, ...]] = []
    for i in params.high_range():
        ones = [j for j in params.high_range() if bit_of(i, j) == 1]
        zeros = [j for j in params.high_range() if bit_of(i, j) == 0]
        lists.append(tuple(ones + low_block + mid_block + zeros))
    for _ in params.mid_range():
        lists.append(tuple(list(range(half + 1, n + 1)) + list(range(1, half + 1))))
    for _ in params.low_range():
        lists.append(tuple(range(1, n + 1)))
    return tuple(lists)


def three_tier_women(params: ThreeTierParams, inst: DisjInstance) -> Profile:
    return _three_tier_side(params, inst.x_bit)


def three_tier_men(params: ThreeTierParams, inst: DisjInstance) -> Profile:
    return _three_tier_side(params, lambda j, i: inst.y_bit(i, j))


def build_three_tier(params: ThreeTierParams, inst: DisjInstance) -> MarriageMarket:
    """Full market whose unique stable marriage flips between two far-apart
    configurations depending on the disjointness of the instance."""
    if inst.domain != GRID or inst.n != params.high:
        raise ParameterError(
            f"instance must live on grid({params.high}), got {inst.domain}({inst.n})"
        )
    return MarriageMarket(
        params.n, FULL, three_tier_women(params, inst), three_tier_men(params, inst)
    )


def disjoint_canonical_marriage(n: int) -> Marriage:
    """The crossed marriage pairing each half with the other: the unique
    stable marriage of a three-tier market built from a disjoint instance."""
    if n < 2 or n % 2:
        raise ParameterError(f"canonical marriages need even n >= 2, got {n}")
    half = n // 2
    return Marriage.of(
        [(i + half, i) for i in range(1, half + 1)]
        + [(i, i + half) for i in range(1, half + 1)]
    )


def intersecting_canonical_marriage(n: int, alpha: int, beta: int) -> Marriage:
    """The unique stable marriage of a three-tier market whose bit
    assignments share exactly the cell (alpha, beta)."""
    if n < 2 or n % 2:
        raise ParameterError(f"canonical marriages need even n >= 2, got {n}")
    half = n // 2
    if not (1 <= alpha <= half and 1 <= beta <= half):
        raise ParameterError(f"(alpha, beta)=({alpha},{beta}) out of range 1..{half}")
    pairs = [(alpha, beta)]
    pairs += [(i, i + half) for i in range(1, alpha)]
    pairs += [(i + half, i) for i in range(1, beta)]
    pairs += [(i, i + half - 1) for i in range(alpha + 1, half + 1)]
    pairs += [(i + half - 1, i) for i in range(beta + 1, half + 1)]
    pairs.append((n, n))
    return Marriage.of(pairs)


# ---------------------------------------------------------------------------
# Certificates


CERT_UNIQUE_STABLE = "unique-stable"
CERT_STABLE = "stable"
CERT_UNSTABLE = "unstable"
_CERT_KINDS = (CERT_UNIQUE_STABLE, CERT_STABLE, CERT_UNSTABLE)


@dataclass(frozen=True)
class EmbeddingCertificate:
    """A claim a generator makes about its output market.

    ``kind`` is None for the vacuous certificate.  When present,
    ``marriage`` is the marriage the claim is about, and ``disj_value``
    records the disjointness bit of the source instance.
    """

    kind: str | None = None
    marriage: Marriage | None = None
    disj_value: int | None = None

    def __post_init__(self) -> None:
        if self.kind is not None and self.kind not in _CERT_KINDS:
            raise ParameterError(f"unknown certificate kind {self.kind!r}")
        if self.kind is not None and self.marriage is None:
            raise ParameterError(f"certificate kind {self.kind!r} needs a marriage")

    @property
    def unique_marriage(self) -> Marriage | None:
        """The certified unique stable marriage, if this certificate claims one."""
        return self.marriage if self.kind == CERT_UNIQUE_STABLE else None


def verify_certificate(
    market: MarriageMarket,
    cert: EmbeddingCertificate,
    *,
    full_bound: int = 8,
    partial_bound: int = 6,
) -> bool:
    """Oracle-check a certificate's claims. Raises CapacityError when the
    market exceeds the enumeration bounds."""
    if cert.kind is None:
        return True
    bound = full_bound if market.model == FULL else partial_bound
    if market.n > bound:
        raise CapacityError(f"certificate check needs enumeration, n={market.n} > {bound}")
    assert cert.marriage is not None
    if cert.kind == CERT_UNIQUE_STABLE:
        stable = enumerate_stable(market, full_bound=full_bound, partial_bound=partial_bound)
        return stable == frozenset({cert.marriage})
    if cert.kind == CERT_STABLE:
        return is_stable(market, cert.marriage)
    return not is_stable(market, cert.marriage)


def stability_check_certificate(inst: DisjInstance) -> EmbeddingCertificate:
    kind = CERT_STABLE if inst.disj() else CERT_UNSTABLE
    return EmbeddingCertificate(kind, identity_marriage(inst.n), inst.disj())


def unique_partial_certificate(inst: DisjInstance) -> EmbeddingCertificate:
    kind = CERT_UNIQUE_STABLE if inst.disj() else CERT_UNSTABLE
    return EmbeddingCertificate(kind, identity_marriage(inst.n), inst.disj())


def three_tier_certificate(
    params: ThreeTierParams, inst: DisjInstance
) -> EmbeddingCertificate | None:
    """Certificate for the three-tier market, when the instance is disjoint
    or uniquely intersecting; None otherwise."""
    witness = inst.unique_intersection()
    if witness is None:
        return None
    if witness.absent:
        return EmbeddingCertificate(CERT_UNIQUE_STABLE, disjoint_canonical_marriage(params.n), 1)
    return EmbeddingCertificate(
        CERT_UNIQUE_STABLE,
        intersecting_canonical_marriage(params.n, witness.alpha, witness.beta),
        0,
    )


# ---------------------------------------------------------------------------
# Planted blocking pairs


def planted_blocking_market(
    n: int, count: int, rng: random.Random
) -> tuple[MarriageMarket, Marriage]:
    """A full market plus a perfect marriage with exactly ``count``
    blocking pairs, planted on randomly chosen off-diagonal cells."""
    cells = offdiag_cells(n)
    if not 0 <= count <= len(cells):
        raise ParameterError(f"can plant between 0 and {len(cells)} blocking pairs, got {count}")
    chosen = rng.sample(cells, count)
    inst = DisjInstance.from_cells(OFFDIAG, n, chosen, chosen)
    return embed_stability_check(inst), identity_marriage(n)


# ---------------------------------------------------------------------------
# File formats


def instance_to_json(inst: DisjInstance) -> dict:
    return {"domain": inst.domain, "n": inst.n, "x": list(inst.x), "y": list(inst.y)}


def instance_from_json(data: dict) -> DisjInstance:
    try:
        return DisjInstance(
            str(data["domain"]),
            int(data["n"]),
            tuple(int(b) for b in data["x"]),
            tuple(int(b) for b in data["y"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise DomainError(f"malformed instance file: {exc}") from exc


def save_instance(inst: DisjInstance, path: str | Path) -> None:
    Path(path).write_text(canonical_json(instance_to_json(inst)), encoding="utf-8")


def load_instance(path: str | Path) -> DisjInstance:
    return instance_from_json(json.loads(Path(path).read_text(encoding="utf-8")))


def certificate_to_json(cert: EmbeddingCertificate, n: int) -> dict:
    return {
        "kind": cert.kind,
        "pairs": [[w, m] for w, m in cert.marriage.sorted_pairs()] if cert.marriage else None,
        "disj": cert.disj_value,
        "n": n,
    }


def certificate_from_json(data: dict) -> EmbeddingCertificate:
    try:
        marriage = (
            Marriage.of((int(w), int(m)) for w, m in data["pairs"])
            if data.get("pairs") is not None
            else None
        )
        disj = data.get("disj")
        return EmbeddingCertificate(data.get("kind"), marriage, int(disj) if disj is not None else None)
    except (KeyError, TypeError, ValueError) as exc:
        raise DomainError(f"malformed certificate file: {exc}") from exc


def save_certificate(cert: EmbeddingCertificate, n: int, path: str | Path) -> None:
    Path(path).write_text(canonical_json(certificate_to_json(cert, n)), encoding="utf-8")


def load_certificate(path: str | Path) -> EmbeddingCertificate:
    return certificate_from_json(json.loads(Path(path).read_text(encoding="utf-8")))
