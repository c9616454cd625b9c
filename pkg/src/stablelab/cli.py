"""Command-line front end: generate instances, solve, verify, run
protocols, sweep parameters, and emit CSV/JSON reports.

Exit codes: 0 ok, 2 usage/parameter problems, 3 oracle capacity
exceeded, 4 contract violation (a certified claim failed; should never
happen).
"""

from __future__ import annotations

import csv
import io
import json
import random
import sys
from fractions import Fraction
from pathlib import Path

import click

from . import embeddings as emb
from . import market as mk
from . import protocols as proto
from . import queries as qr
from .errors import (
    CapacityError,
    ContractViolation,
    DomainError,
    ParameterError,
    ProtocolError,
    QueryError,
    StableLabError,
)

EXIT_USAGE = 2
EXIT_CAPACITY = 3
EXIT_CONTRACT = 4


def _die(code: int, message: str) -> None:
    click.echo(json.dumps({"error": message}), err=True)
    sys.exit(code)


def _guard(fn):
    def wrapped(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except CapacityError as exc:
            _die(EXIT_CAPACITY, str(exc))
        except (ContractViolation, ProtocolError) as exc:
            _die(EXIT_CONTRACT, str(exc))
        except (ParameterError, DomainError, QueryError, StableLabError) as exc:
            _die(EXIT_USAGE, str(exc))

    wrapped.__name__ = fn.__name__
    wrapped.__doc__ = fn.__doc__
    return wrapped


def _emit(ctx: click.Context, text: str) -> None:
    out = ctx.obj.get("out")
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        click.echo(text, nl=False)


def _parse_fraction(value: str, name: str) -> Fraction:
    try:
        return Fraction(value)
    except (ValueError, ZeroDivisionError):
        raise ParameterError(f"cannot parse {name}={value!r} as a rational")


@click.group()
@click.option("--seed", type=int, default=0, show_default=True, help="Base RNG seed.")
@click.option("--out", type=click.Path(), default=None, help="Write primary output here instead of stdout.")
@click.option("--format", "fmt", type=click.Choice(["json", "csv"]), default="json", show_default=True)
@click.pass_context
def main(ctx: click.Context, seed: int, out: str | None, fmt: str) -> None:
    """Stable-marriage laboratory."""
    ctx.ensure_object(dict)
    ctx.obj.update(seed=seed, out=out, fmt=fmt)


GENERATE_KINDS = (
    "random",
    "gs-worst",
    "verify-embed",
    "partial-embed",
    "hml",
    "is-single",
    "complete",
    "unique-full",
    "negate-single",
    "lift-married",
)


def _load_disj(ctx, kind: str, n: int, disj: str, intersect: str | None) -> emb.DisjInstance:
    domain = emb.GRID if kind == "hml" else emb.OFFDIAG
    if intersect is not None:
        a, b = (int(t) for t in intersect.split(","))
        return emb.DisjInstance.from_cells(domain, n, [(a, b)], [(a, b)])
    if disj == "zeros":
        return emb.DisjInstance.zeros(domain, n)
    if disj == "random":
        return emb.DisjInstance.random(domain, n, random.Random(ctx.obj["seed"]))
    inst = emb.load_instance(disj)
    if inst.domain != domain or inst.n != n:
        raise ParameterError(
            f"instance file has domain {inst.domain}({inst.n}), expected {domain}({n})"
        )
    return inst


def _gs_worst_market(n: int) -> mk.MarriageMarket:
    # Every man chases the same ladder while every woman trades up, forcing
    # a quadratic number of proposals.
    women = tuple(tuple(range(n, 0, -1)) for _ in range(n))
    men = tuple(tuple(range(1, n + 1)) for _ in range(n))
    return mk.MarriageMarket(n, mk.FULL, women, men)


@main.command()
@click.option("--kind", required=True, type=click.Choice(GENERATE_KINDS))
@click.option("--n", type=int, default=None, help="Size parameter (market or instance size).")
@click.option("--model", type=click.Choice([mk.FULL, mk.PARTIAL]), default=mk.FULL, show_default=True)
@click.option("--delta", default=None, help="Tier fraction for the hml kind (rational, e.g. 1/2).")
@click.option("--disj", default="zeros", show_default=True, help="Bit source: zeros, random, or a file path.")
@click.option("--intersect", default=None, help="Plant a single common 1-cell 'i,j' (overrides --disj).")
@click.option("--side", type=click.Choice(["women", "men"]), default="women", show_default=True)
@click.option("--market", "market_path", type=click.Path(exists=True), default=None, help="Input market for lifting kinds.")
@click.option("--w", "w_index", type=int, default=1, show_default=True, help="Subject woman for negate-single / lift-married.")
@click.pass_context
@_guard
def generate(ctx, kind, n, model, delta, disj, intersect, side, market_path, w_index):
    """Generate a market file (plus a certificate sidecar when one is implied)."""
    cert: emb.EmbeddingCertificate | None = None
    extra: dict = {}
    if kind in ("complete", "unique-full", "negate-single", "lift-married"):
        if market_path is None:
            raise ParameterError(f"kind {kind} needs --market")
        base = mk.load_market(market_path)
        if kind == "complete":
            market = emb.complete_preferences(base)
        elif kind == "unique-full":
            market = emb.lift_unique_to_full(base)
        elif kind == "negate-single":
            market, suitor = emb.negate_single_status(base, w_index)
            extra["suitor"] = suitor
        else:
            market, pair = emb.lift_single_to_couple(base, w_index)
            extra["pair"] = list(pair)
    else:
        if n is None:
            raise ParameterError(f"kind {kind} needs --n")
        if kind == "random":
            market = mk.random_market(n, model, random.Random(ctx.obj["seed"]))
        elif kind == "gs-worst":
            market = _gs_worst_market(n)
        elif kind == "hml":
            if delta is None:
                raise ParameterError("kind hml needs --delta")
            params = emb.ThreeTierParams(n, _parse_fraction(delta, "delta"))
            inst = _load_disj(ctx, kind, params.high, disj, intersect)
            market = emb.build_three_tier(params, inst)
            cert = emb.three_tier_certificate(params, inst)
        else:
            inst = _load_disj(ctx, kind, n, disj, intersect)
            if kind == "verify-embed":
                market = emb.embed_stability_check(inst)
                cert = emb.stability_check_certificate(inst)
            elif kind == "partial-embed":
                market = emb.embed_unique_partial(inst)
                cert = emb.unique_partial_certificate(inst)
            else:  # is-single
                market, subject = emb.embed_single_status(
                    inst, mk.Side.WOMEN if side == "women" else mk.Side.MEN
                )
                extra["subject"] = {"side": subject.side.value, "index": subject.index}
    text = mk.canonical_json(mk.market_to_json(market))
    out = ctx.obj.get("out")
    if out:
        Path(out).write_text(text, encoding="utf-8")
        if cert is not None:
            emb.save_certificate(cert, market.n, str(out) + ".cert.json")
        if extra:
            Path(str(out) + ".meta.json").write_text(mk.canonical_json(extra), encoding="utf-8")
    else:
        click.echo(text, nl=False)
        if cert is not None:
            click.echo(mk.canonical_json(emb.certificate_to_json(cert, market.n)), nl=False)
        if extra:
            click.echo(mk.canonical_json(extra), nl=False)


@main.command()
@click.argument("market_file", type=click.Path(exists=True))
@click.pass_context
@_guard
def solve(ctx, market_file):
    """Write the M-optimal stable marriage of a market."""
    market = mk.load_market(market_file)
    mu = mk.deferred_acceptance(market)
    _emit(ctx, mk.canonical_json(mk.marriage_to_json(mu, market.n)))


@main.command(name="enumerate")
@click.argument("market_file", type=click.Path(exists=True))
@click.pass_context
@_guard
def enumerate_cmd(ctx, market_file):
    """List every stable marriage (within the oracle bound)."""
    market = mk.load_market(market_file)
    stable = sorted(mk.enumerate_stable(market), key=lambda s: s.sorted_pairs())
    _emit(
        ctx,
        mk.canonical_json(
            {"n": market.n, "count": len(stable), "marriages": [s.sorted_pairs() for s in stable]}
        ),
    )


@main.command()
@click.argument("market_file", type=click.Path(exists=True))
@click.argument("marriage_file", type=click.Path(exists=True))
@click.option("--cert", type=click.Path(exists=True), default=None, help="Uniqueness certificate sidecar.")
@click.pass_context
@_guard
def verify(ctx, market_file, marriage_file, cert):
    """Report stability, blocking pairs, and distance to stability."""
    market = mk.load_market(market_file)
    mu, _ = mk.load_marriage(marriage_file)
    stable = mk.is_stable(market, mu)
    blocking = sorted(mk.blocking_pairs(market, mu))
    distance: int | None = None
    if market.model == mk.FULL and mu.is_perfect(market.n):
        certificate = emb.load_certificate(cert) if cert else None
        try:
            distance = mk.distance_to_stability(market, mu, certificate)
        except CapacityError:
            distance = None
    _emit(
        ctx,
        mk.canonical_json(
            {
                "stable": stable,
                "blocking_pairs": [list(p) for p in blocking],
                "distance": distance,
            }
        ),
    )


PROTOCOLS = ("naive-verify", "gs", "estimator", "disj-decider")


def _run_protocol(
    name: str,
    market: mk.MarriageMarket,
    mu: mk.Marriage | None,
    seed: int,
    epsilon: str | None,
    delta: str | None,
    failure_prob: float,
    inst: emb.DisjInstance | None = None,
    params: emb.ThreeTierParams | None = None,
) -> dict:
    n = market.n
    if name == "naive-verify":
        target = mu if mu is not None else mk.identity_marriage(n)
        run = proto.run_two_party(proto.NaiveStabilityProtocol(target, n), market.women, market.men, seed)
        correct = run.output == mk.is_stable(market, target)
    elif name == "gs":
        run = proto.run_two_party(proto.GsProtocol(n), market.women, market.men, seed)
        correct = run.output == mk.deferred_acceptance(market)
    elif name == "estimator":
        if epsilon is None or delta is None:
            raise ParameterError("estimator needs --epsilon and --delta")
        target = mu if mu is not None else mk.identity_marriage(n)
        eps = float(_parse_fraction(epsilon, "epsilon"))
        dlt = float(_parse_fraction(delta, "delta"))
        run = proto.run_two_party(
            proto.BlockingFractionEstimator(target, n, eps, dlt, failure_prob),
            market.women,
            market.men,
            seed,
        )
        frac = len(mk.blocking_pairs(market, target)) / (n * n)
        if frac >= eps:
            correct = run.output == "at-least"
        elif frac <= eps - dlt:
            correct = run.output == "at-most"
        else:
            correct = True  # inside the gap either answer is allowed
    else:  # disj-decider
        if inst is None or params is None or epsilon is None:
            raise ParameterError("disj-decider needs --disj-file, --n, --delta and --epsilon")
        run = proto.decide_disjointness(inst, params, _parse_fraction(epsilon, "epsilon"), seed)
        correct = run.output == inst.disj()
    return proto.run_record(run, n, correct)


@main.command()
@click.option("--name", required=True, type=click.Choice(PROTOCOLS))
@click.option("--market", "market_path", type=click.Path(exists=True), default=None)
@click.option("--mu", "mu_path", type=click.Path(exists=True), default=None, help="Marriage to verify/estimate.")
@click.option("--epsilon", default=None)
@click.option("--delta", default=None)
@click.option("--failure-prob", type=float, default=0.05, show_default=True)
@click.option("--disj-file", type=click.Path(exists=True), default=None, help="Grid instance for disj-decider.")
@click.option("--n", type=int, default=None, help="Market size for disj-decider.")
@click.pass_context
@_guard
def protocol(ctx, name, market_path, mu_path, epsilon, delta, failure_prob, disj_file, n):
    """Run one protocol and emit its run record."""
    seed = ctx.obj["seed"]
    if name == "disj-decider":
        if disj_file is None or n is None or delta is None:
            raise ParameterError("disj-decider needs --disj-file, --n and --delta")
        inst = emb.load_instance(disj_file)
        params = emb.ThreeTierParams(n, _parse_fraction(delta, "delta"))
        market = emb.build_three_tier(params, inst)
        record = _run_protocol(name, market, None, seed, epsilon, delta, failure_prob, inst, params)
    else:
        if market_path is None:
            raise ParameterError(f"protocol {name} needs --market")
        market = mk.load_market(market_path)
        mu = mk.load_marriage(mu_path)[0] if mu_path else None
        record = _run_protocol(name, market, mu, seed, epsilon, delta, failure_prob)
    _emit(ctx, mk.canonical_json(record))


def trial_seed(base: int, n: int, trial: int) -> int:
    """Deterministic per-trial seed, spread across 64 bits."""
    mix = (base * 0x9E3779B97F4A7C15 + n * 0xBF58476D1CE4E5B9 + trial * 0x94D049BB133111EB)
    return mix & 0xFFFFFFFFFFFFFFFF


SWEEP_TARGETS = ("naive-verify", "gs", "estimator", "optimality-check")


def _sweep_rows(
    target: str,
    n_list: list[int],
    trials: int,
    base_seed: int,
    market_kind: str,
    epsilon: str | None,
    delta: str | None,
    failure_prob: float,
) -> tuple[list[list], int]:
    rows: list[list] = []
    worst_exit = 0
    for n in n_list:
        for trial in range(trials):
            seed = trial_seed(base_seed, n, trial)
            try:
                if market_kind == "gs-worst":
                    market = _gs_worst_market(n)
                else:
                    market = mk.random_market(n, mk.FULL, random.Random(seed))
                if target == "optimality-check":
                    report = qr.optimality_check(market)
                    rows.append(
                        [n, trial, seed, target, 0, report.verifier_women,
                         report.verifier_men, str(report.holds).lower()]
                    )
                    if not report.holds:
                        worst_exit = EXIT_CONTRACT
                        click.echo(
                            json.dumps({"error": "optimality accounting failed", "n": n, "trial": trial}),
                            err=True,
                        )
                    continue
                record = _run_protocol(target, market, None, seed, epsilon, delta, failure_prob)
                rows.append(
                    [n, trial, seed, target, record["bits"], 0, 0, str(record["correct"]).lower()]
                )
            except CapacityError as exc:
                worst_exit = max(worst_exit, EXIT_CAPACITY)
                rows.append([n, trial, seed, target, 0, 0, 0, "false"])
                click.echo(json.dumps({"error": str(exc), "n": n, "trial": trial}), err=True)
            except StableLabError as exc:
                worst_exit = max(worst_exit, 1)
                rows.append([n, trial, seed, target, 0, 0, 0, "false"])
                click.echo(json.dumps({"error": str(exc), "n": n, "trial": trial}), err=True)
    return rows, worst_exit


@main.command()
@click.option("--target", required=True, type=click.Choice(SWEEP_TARGETS))
@click.option("--n", "n_spec", required=True, help="Comma-separated market sizes, e.g. 8,16,32.")
@click.option("--trials", type=int, default=1, show_default=True)
@click.option("--market-kind", type=click.Choice(["random", "gs-worst"]), default="random", show_default=True)
@click.option("--epsilon", default=None)
@click.option("--delta", default=None)
@click.option("--failure-prob", type=float, default=0.05, show_default=True)
@click.pass_context
@_guard
def sweep(ctx, target, n_spec, trials, market_kind, epsilon, delta, failure_prob):
    """Run a target over a grid of sizes and trials; emit CSV."""
    if trials < 1:
        raise ParameterError("trials must be >= 1")
    try:
        n_list = [int(t) for t in n_spec.split(",") if t]
    except ValueError:
        raise ParameterError(f"cannot parse --n {n_spec!r}")
    rows, worst_exit = _sweep_rows(
        target, n_list, trials, ctx.obj["seed"], market_kind, epsilon, delta, failure_prob
    )
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["n", "trial", "seed", "target", "bits", "queries_w", "queries_m", "correct"])
    writer.writerows(rows)
    _emit(ctx, buf.getvalue())
    if worst_exit:
        sys.exit(worst_exit)


@main.command(name="optimality-check")
@click.option("--market", "market_path", type=click.Path(exists=True), default=None)
@click.option("--n", type=int, default=None, help="Random-market size (with --trials).")
@click.option("--trials", type=int, default=1, show_default=True)
@click.pass_context
@_guard
def optimality_check_cmd(ctx, market_path, n, trials):
    """Check the deferred-acceptance query-count accounting."""
    reports = []
    if market_path is not None:
        market = mk.load_market(market_path)
        reports.append(qr.optimality_check(market).to_json())
    elif n is not None:
        for trial in range(trials):
            seed = trial_seed(ctx.obj["seed"], n, trial)
            market = mk.random_market(n, mk.FULL, random.Random(seed))
            reports.append(qr.optimality_check(market).to_json())
    else:
        raise ParameterError("need --market or --n")
    _emit(ctx, mk.canonical_json(reports if len(reports) > 1 else reports[0]))
    if any(not r["holds"] for r in reports):
        _die(EXIT_CONTRACT, "optimality accounting failed")


if __name__ == "__main__":
    main()
