"""Bit-metered two-party protocols.

Alice holds the women's preference profile, Bob the men's.  A protocol
supplies one generator per party; each generator sees only its own
profile, the public coin stream, and the messages delivered to it, so
information isolation is structural rather than policed.

Party generators yield ``Send(bits)`` to transmit and ``RECV`` to block
for the next incoming message.  Messages are bitstrings; the transcript
meters payload bits only.  Both parties draw from identical public-coin
streams (same seed), so a protocol that consumes coins in lockstep stays
synchronized without communication.

Protocol outputs are common knowledge: the runner checks that both
parties return the same value, unless a protocol explicitly declares a
one-sided output.
"""

from __future__ import annotations

import math
import random
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from typing import Generator

from .embeddings import ThreeTierParams, disjoint_canonical_marriage
from .errors import ParameterError, ProtocolError
from .market import Marriage, Profile, divorce_distance, prefers

ALICE = "A"
BOB = "B"


@dataclass(frozen=True)
class Send:
    bits: str
    note: object = None


class _Recv:
    def __repr__(self) -> str:  # pragma: no cover
        return "RECV"


RECV = _Recv()


@dataclass(frozen=True)
class Message:
    bits: str
    note: object = None


@dataclass(frozen=True)
class Transcript:
    messages: tuple[tuple[str, str], ...]

    @property
    def total_bits(self) -> int:
        return sum(len(bits) for _, bits in self.messages)

    def dump(self) -> str:
        return "".join(f"{sender} {bits}\n" for sender, bits in self.messages)


@dataclass(frozen=True)
class ProtocolRun:
    protocol: str
    output: object
    transcript: Transcript
    seed: int

    @property
    def total_bits(self) -> int:
        return self.transcript.total_bits


PartyGen = Generator["Send | _Recv", "Message | None", object]


def run_two_party(protocol, women: Profile, men: Profile, seed: int = 0) -> ProtocolRun:
    """Execute a protocol, metering every transmitted bit.

    Deterministic: the same protocol, profiles, and seed reproduce the
    transcript bit-for-bit.
    """
    if len(women) != len(men):
        raise ProtocolError("profiles must cover the same number of participants")
    parties: dict[str, PartyGen] = {
        ALICE: protocol.alice(women, random.Random(seed)),
        BOB: protocol.bob(men, random.Random(seed)),
    }
    inbox: dict[str, deque[Message]] = {ALICE: deque(), BOB: deque()}
    pending: dict[str, object] = {}
    outputs: dict[str, object] = {}
    transcript_messages: list[tuple[str, str]] = []

    def advance(name: str, value: Message | None) -> None:
        try:
            pending[name] = parties[name].send(value)
        except StopIteration as stop:
            outputs[name] = stop.value
            pending[name] = None

    for name in (ALICE, BOB):
        advance(name, None)

    while len(outputs) < 2:
        progressed = False
        for name in (ALICE, BOB):
            if name in outputs:
                continue
            action = pending[name]
            if isinstance(action, Send):
                if any(c not in "01" for c in action.bits):
                    raise ProtocolError(f"non-binary message {action.bits!r} from {name}")
                transcript_messages.append((name, action.bits))
                other = BOB if name == ALICE else ALICE
                inbox[other].append(Message(action.bits, action.note))
                advance(name, None)
                progressed = True
            elif isinstance(action, _Recv):
                if inbox[name]:
                    advance(name, inbox[name].popleft())
                    progressed = True
            else:
                raise ProtocolError(f"party {name} yielded unsupported action {action!r}")
        if not progressed:
            raise ProtocolError("deadlock: every live party is waiting to receive")

    one_sided = getattr(protocol, "one_sided", None)
    if one_sided is not None:
        output = outputs[one_sided]
    else:
        if outputs[ALICE] != outputs[BOB]:
            raise ProtocolError(
                f"parties disagree on the output: {outputs[ALICE]!r} vs {outputs[BOB]!r}"
            )
        output = outputs[ALICE]
    return ProtocolRun(
        getattr(protocol, "name", type(protocol).__name__),
        output,
        Transcript(tuple(transcript_messages)),
        seed,
    )


def index_width(n: int) -> int:
    """Bits needed to name one of n indices (0 when n == 1)."""
    return (n - 1).bit_length()


def int_to_bits(value: int, width: int) -> str:
    return format(value, f"0{width}b") if width else ""


def bits_to_int(bits: str) -> int:
    return int(bits, 2) if bits else 0


def _prefers_over_spouse(profile: Profile, who: int, candidate: int, spouse: int) -> bool:
    if candidate == spouse:
        return False
    return prefers(profile, who, candidate, spouse)


# ---------------------------------------------------------------------------
# Naive stability verification: n^2 + 1 bits


class NaiveStabilityProtocol:
    """Bob streams one bit per (woman, man) cell in row-major order (does
    the man prefer her over his wife); Alice intersects with her own bits
    and answers with the verdict.  Exactly n^2 + 1 bits."""

    name = "naive-verify"

    def __init__(self, mu: Marriage, n: int):
        if not mu.is_perfect(n):
            raise ParameterError("stability verification needs a perfect marriage")
        self.mu = mu
        self.n = n

    def bob(self, men: Profile, coins: random.Random) -> PartyGen:
        wife_of = self.mu.by_man
        for w in range(1, self.n + 1):
            for m in range(1, self.n + 1):
                bit = _prefers_over_spouse(men, m, w, wife_of[m])
                yield Send("1" if bit else "0")
        verdict = yield RECV
        return verdict.bits == "1"

    def alice(self, women: Profile, coins: random.Random) -> PartyGen:
        husband_of = self.mu.by_woman
        blocked = False
        for w in range(1, self.n + 1):
            for m in range(1, self.n + 1):
                msg = yield RECV
                if msg.bits == "1" and _prefers_over_spouse(women, w, m, husband_of[w]):
                    blocked = True
        yield Send("0" if blocked else "1")
        return not blocked


# ---------------------------------------------------------------------------
# Deferred acceptance over the wire: <= n^2 (ceil(log2 n) + 1) bits


class GsProtocol:
    """Men-proposing deferred acceptance.  Bob names the serenaded woman
    (the proposer is implied: always the lowest-index provisionally-single
    man, which both sides track); Alice answers accept/reject.  Both
    parties reconstruct the final marriage."""

    name = "gs"

    def __init__(self, n: int):
        self.n = n
        self.width = index_width(n)

    def bob(self, men: Profile, coins: random.Random) -> PartyGen:
        n = self.n
        pointer = [0] * (n + 1)
        husband: dict[int, int] = {}
        singles = set(range(1, n + 1))
        while singles:
            m = min(singles)
            w = men[m - 1][pointer[m]]
            pointer[m] += 1
            yield Send(int_to_bits(w - 1, self.width))
            reply = yield RECV
            if reply.bits == "1":
                displaced = husband.get(w)
                husband[w] = m
                singles.discard(m)
                if displaced is not None:
                    singles.add(displaced)
        return Marriage.of((w, m) for w, m in husband.items())

    def alice(self, women: Profile, coins: random.Random) -> PartyGen:
        n = self.n
        husband: dict[int, int] = {}
        singles = set(range(1, n + 1))
        while singles:
            m = min(singles)
            msg = yield RECV
            w = bits_to_int(msg.bits) + 1
            incumbent = husband.get(w)
            accept = incumbent is None or prefers(women, w, m, incumbent)
            yield Send("1" if accept else "0")
            if accept:
                husband[w] = m
                singles.discard(m)
                if incumbent is not None:
                    singles.add(incumbent)
        return Marriage.of((w, m) for w, m in husband.items())


# ---------------------------------------------------------------------------
# Sampling estimator for the blocking-pair fraction: k + 1 bits


def estimator_sample_count(delta: float | Fraction, failure_prob: float) -> int:
    """Samples needed to separate the two fractions at the stated failure
    probability (two-sided Hoeffding bound at half-gap accuracy)."""
    return math.ceil(math.log(2 / failure_prob) / (2 * (float(delta) / 2) ** 2))


class BlockingFractionEstimator:
    """Decide whether a marriage has at least eps*n^2 or at most
    (eps-delta)*n^2 blocking pairs.

    Public coins pick k cells uniformly; Alice contributes her half of
    each blocking test (one bit per sample), Bob conjoins with his half,
    then announces the threshold decision.  k + 1 bits total, independent
    of n."""

    name = "estimator"

    def __init__(
        self,
        mu: Marriage,
        n: int,
        epsilon: float,
        delta: float,
        failure_prob: float,
    ):
        if not 0 < delta <= epsilon:
            raise ParameterError("need epsilon >= delta > 0")
        if not 0 < failure_prob < 1:
            raise ParameterError("failure probability must lie in (0,1)")
        if not mu.is_perfect(n):
            raise ParameterError("estimator needs a perfect marriage")
        self.mu = mu
        self.n = n
        self.threshold = float(epsilon) - float(delta) / 2
        self.samples = estimator_sample_count(delta, failure_prob)

    def _draw(self, coins: random.Random) -> tuple[int, int]:
        return coins.randrange(self.n) + 1, coins.randrange(self.n) + 1

    def alice(self, women: Profile, coins: random.Random) -> PartyGen:
        husband_of = self.mu.by_woman
        for _ in range(self.samples):
            w, m = self._draw(coins)
            bit = _prefers_over_spouse(women, w, m, husband_of[w])
            yield Send("1" if bit else "0")
        decision = yield RECV
        return "at-least" if decision.bits == "1" else "at-most"

    def bob(self, men: Profile, coins: random.Random) -> PartyGen:
        wife_of = self.mu.by_man
        count = 0
        for _ in range(self.samples):
            w, m = self._draw(coins)
            msg = yield RECV
            if msg.bits == "1" and _prefers_over_spouse(men, m, w, wife_of[m]):
                count += 1
        at_least = count / self.samples >= self.threshold
        yield Send("1" if at_least else "0")
        return "at-least" if at_least else "at-most"


# ---------------------------------------------------------------------------
# Disjointness from any approximate-stability finder: zero extra bits


class DisjDeciderProtocol:
    """Run a finder on a three-tier market and read the disjointness bit
    off the distance between its output and the crossed canonical
    marriage.  Adds no communication beyond the finder's."""

    name = "disj-decider"

    def __init__(self, params: ThreeTierParams, epsilon, finder):
        self.params = params
        self.epsilon = Fraction(epsilon) if not isinstance(epsilon, float) else Fraction(str(epsilon))
        if not self.epsilon < (1 - params.delta) / 2:
            raise ParameterError(
                f"epsilon={self.epsilon} must be below (1-delta)/2={(1 - params.delta) / 2}"
            )
        self.finder = finder

    def _decide(self, mu: Marriage) -> int:
        n = self.params.n
        d = divorce_distance(mu, disjoint_canonical_marriage(n), n)
        return 1 if d <= self.epsilon * n else 0

    def alice(self, women: Profile, coins: random.Random) -> PartyGen:
        mu = yield from self.finder.alice(women, coins)
        return self._decide(mu)

    def bob(self, men: Profile, coins: random.Random) -> PartyGen:
        mu = yield from self.finder.bob(men, coins)
        return self._decide(mu)


def decide_disjointness(inst, params: ThreeTierParams, epsilon, seed: int = 0, finder=None):
    """Embed an instance into a three-tier market, run the decider, and
    return its run.  The instance must be disjoint or uniquely
    intersecting for the distance threshold to be meaningful."""
    from .embeddings import build_three_tier

    if inst.unique_intersection() is None:
        raise ParameterError("decider needs a disjoint or uniquely-intersecting instance")
    market = build_three_tier(params, inst)
    finder = finder if finder is not None else GsProtocol(params.n)
    protocol = DisjDeciderProtocol(params, epsilon, finder)
    return run_two_party(protocol, market.women, market.men, seed)


# ---------------------------------------------------------------------------
# Run records


def output_to_json(output: object) -> object:
    if isinstance(output, Marriage):
        return [[w, m] for w, m in output.sorted_pairs()]
    return output


def run_record(run: ProtocolRun, n: int, correct: bool | None) -> dict:
    return {
        "protocol": run.protocol,
        "n": n,
        "seed": run.seed,
        "bits": run.total_bits,
        "output": output_to_json(run.output),
        "correct": correct,
    }
