"""Command-line front end.

Exit codes: 0 success, 1 the filter proved the instance inconsistent
(informational), 2 usage error, 3 internal error or an oracle mismatch,
4 deadline expired.
"""

from __future__ import annotations

import argparse
import json
import sys

from .bench import bound_to_csv, estimate_t0, estimate_tall, points_to_csv, sweep
from .filters import ConsistencyId, enforce
from .generator import GenSpec, generate_model_b, spec_for_paper_experiment
from .lattice import (
    LatticeReport,
    find_witnesses,
    sample_containments,
    witness_pairs,
)
from .network import NetworkError, ParseError, parse_instance, serialize_instance
from .oracle import (
    WitnessParams,
    definitional_closure,
    enumerate_solutions,
    strong_pc_closure,
    variable_completability,
)

EXIT_OK = 0
EXIT_WIPEOUT = 1
EXIT_USAGE = 2
EXIT_INTERNAL = 3
EXIT_TIMEOUT = 4

LC_CHOICES = ("ac", "rpc", "krpc", "maxrpc", "pic", "nic", "spc", "sac", "srpc")


class _Usage(Exception):
    pass


def _lc_from_args(args):
    if args.lc == "krpc":
        if args.k is None:
            raise _Usage("--lc krpc requires --k")
        if args.k < 1:
            raise _Usage("--k must be >= 1")
        return ConsistencyId("krpc", args.k)
    if getattr(args, "k", None) is not None:
        raise _Usage("--k is only valid with --lc krpc")
    return ConsistencyId(args.lc)


def _read_instance(path):
    if path is None or path == "-":
        text = sys.stdin.read()
    else:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    return parse_instance(text)


def _write_out(text, path):
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


# -- gen ---------------------------------------------------------------------


def cmd_gen(args):
    spec = GenSpec(args.n, args.d, args.p1, args.p2, args.seed)
    try:
        net = generate_model_b(spec)
    except ValueError as exc:
        raise _Usage(str(exc))
    _write_out(serialize_instance(net), args.out)
    stats = f"n={net.n} d={args.d} e={net.e} g={net.g} c={net.c}"
    # keep stdout clean when the instance itself goes there
    print(stats, file=sys.stdout if args.out not in (None, "-") else sys.stderr)
    return EXIT_OK


# -- filter -------------------------------------------------------------------


def cmd_filter(args):
    lc = _lc_from_args(args)
    net = _read_instance(getattr(args, "infile"))
    state = net.full_state()
    total = state.total_size()
    deadline = args.timeout / 1000.0 if args.timeout is not None else None
    res = enforce(net, state, lc, deadline)
    pct = 100.0 * len(res.deleted) / total if total else 0.0
    if args.json:
        record = {
            "lc": lc.kind,
            "k": lc.k,
            "deleted": [[i, v] for i, v in res.deleted],
            "deleted_pct": pct,
            "checks": res.checks,
            "elapsed_ms": res.elapsed * 1000.0,
            "wipeout": res.wipeout,
            "timed_out": res.timed_out,
            "deleted_pairs": [
                [[i, a], [j, b]] for (i, a), (j, b) in res.deleted_pairs
            ],
            "instance": None if res.wipeout else serialize_instance(net, state),
        }
        print(json.dumps(record))
    else:
        print(
            f"lc={lc.label()} deleted={len(res.deleted)} ({pct:.2f}%) "
            f"checks={res.checks} elapsed_ms={res.elapsed * 1000.0:.2f} "
            f"wipeout={str(res.wipeout).lower()} "
            f"timed_out={str(res.timed_out).lower()}"
        )
        if res.deleted:
            print("deleted values: " + " ".join(f"({i},{v})" for i, v in res.deleted))
        if res.deleted_pairs:
            print(
                "deleted pairs: "
                + " ".join(
                    f"(({i},{a}),({j},{b}))" for (i, a), (j, b) in res.deleted_pairs
                )
            )
    if res.timed_out:
        return EXIT_TIMEOUT
    if res.wipeout:
        return EXIT_WIPEOUT
    return EXIT_OK


# -- oracle -------------------------------------------------------------------


def _guard_size(net, force):
    prod = 1
    for i in range(net.n):
        prod *= net.domain_size(i)
        if prod > 10**7:
            break
    if prod > 10**7 and not force:
        raise _Usage(
            "instance too large for exhaustive oracle work (override with --force)"
        )


def cmd_oracle(args):
    net = _read_instance(args.infile)
    _guard_size(net, args.force)
    if args.oracle_cmd == "solutions":
        sols = enumerate_solutions(net, limit=args.limit)
        print(f"solutions={len(sols)} truncated={str(sols.truncated).lower()}")
        for s in sols.solutions:
            print(" ".join(str(v) for v in s))
        return EXIT_OK
    if args.oracle_cmd == "completability":
        state = variable_completability(net)
        for i in range(net.n):
            vals = " ".join(str(v) for v in net.state_values(state, i))
            print(f"var {i}: {vals}" if vals else f"var {i}: (none)")
        return EXIT_OK
    # closure: cross-check the engine against the definitional fixpoint
    lc = _lc_from_args(args)
    closed = definitional_closure(net, lc)
    state = net.full_state()
    res = enforce(net, state, lc)
    match = state.bits == closed.bits
    if lc.kind == "spc" and match:
        _, surviving = strong_pc_closure(net)
        kept = _surviving_pairs_from_result(net, res, state)
        match = kept == surviving
    deleted = sorted(set(res.deleted))
    print(f"closure lc={lc.label()} {'MATCH' if match else 'MISMATCH'}")
    print(
        "deleted: "
        + (" ".join(f"({i},{v})" for i, v in deleted) if deleted else "(none)")
    )
    return EXIT_OK if match else EXIT_INTERNAL


def _surviving_pairs_from_result(net, res, state):
    """Completed-graph pairs still allowed after a strong-pc run."""
    gone = {
        ((i, net.index_of(i, a)), (j, net.index_of(j, b)))
        for (i, a), (j, b) in res.deleted_pairs
    }
    kept = set()
    for i in range(net.n):
        for j in range(i + 1, net.n):
            rows = net.rows(i, j) if net.has_constraint(i, j) else None
            for a in _bits(state.bits[i]):
                for b in _bits(state.bits[j]):
                    if rows is not None and not rows[a] >> b & 1:
                        continue
                    if ((i, a), (j, b)) in gone:
                        continue
                    kept.add((i, a, j, b))
    return frozenset(kept)


def _bits(mask):
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


# -- lattice ------------------------------------------------------------------


def _parse_pairs(spec_text):
    from .filters import AC, MAXRPC, NIC, PIC, RPC, SAC, SPC, SRPC, krpc

    byname = {
        "ac": AC, "rpc": RPC, "maxrpc": MAXRPC, "pic": PIC, "nic": NIC,
        "sac": SAC, "srpc": SRPC, "spc": SPC,
        "krpc2": krpc(2), "krpc3": krpc(3),
    }
    pairs = []
    for token in spec_text.split(","):
        token = token.strip()
        if ">" in token:
            s, w = token.split(">", 1)
            pairs.append((byname[s], byname[w]))
        elif "~" in token:
            a, b = token.split("~", 1)
            pairs.append((byname[a], byname[b]))
            pairs.append((byname[b], byname[a]))
        else:
            raise _Usage(f"bad --pairs entry {token!r} (use a>b or a~b)")
    return pairs


def cmd_lattice(args):
    if args.samples < 1:
        raise _Usage("--samples must be >= 1")
    report = sample_containments(args.samples, n=args.n, d=args.d, seed=args.seed)
    print(f"containment check: {report.instances} instances")
    for strong, weak, inst in report.containment_failures:
        print(f"VIOLATION {strong} not within {weak} on:\n{inst}")
    for a, b, inst in report.identity_failures:
        print(f"IDENTITY VIOLATION {a} != {b} on:\n{inst}")
    if report.ok:
        print("all containments hold")

    try:
        pairs = witness_pairs() if args.pairs == "all" else _parse_pairs(args.pairs)
    except KeyError as exc:
        raise _Usage(f"unknown consistency name {exc}")
    params = WitnessParams(n=args.n, d=args.d, attempts=args.attempts)
    found = find_witnesses(pairs, params, seed=args.seed)
    for (strong, weak), net in found.items():
        tag = "found" if net is not None else "NOT FOUND"
        print(f"witness {strong.label()} > {weak.label()}: {tag}")
    return EXIT_OK if report.ok else EXIT_INTERNAL


# -- bench --------------------------------------------------------------------


def _scaled(samples, scale):
    return max(1, round(samples * scale))


def cmd_bench(args):
    deadline = args.timeout / 1000.0 if args.timeout is not None else None
    if args.bench_cmd in ("t0", "tall"):
        lc = _lc_from_args(args)
        fn = estimate_t0 if args.bench_cmd == "t0" else estimate_tall
        bound = fn(
            lc, args.n, args.d, args.p1,
            samples=_scaled(args.samples, args.scale),
            resolution=args.resolution, seed=args.seed,
            threshold=args.threshold, deadline=deadline,
        )
        _write_out(bound_to_csv([bound]), args.out)
        return EXIT_OK
    # sweep
    if args.family:
        fam = spec_for_paper_experiment(args.family)
        n, d, p1 = fam.n, fam.d, fam.p1
        if p1 is None:
            if args.p1 is None:
                raise _Usage(f"family {fam.name} needs an explicit --p1")
            p1 = args.p1
    else:
        if None in (args.n, args.d, args.p1):
            raise _Usage("sweep needs --family or all of --n --d --p1")
        n, d, p1 = args.n, args.d, args.p1
    lcs = []
    for name in args.lc.split(","):
        name = name.strip()
        if not name:
            continue
        if name == "krpc":
            if args.k is None:
                raise _Usage("krpc in --lc requires --k")
            lcs.append(ConsistencyId("krpc", args.k))
        else:
            if name not in LC_CHOICES:
                raise _Usage(f"unknown consistency {name!r}")
            lcs.append(ConsistencyId(name))
    if args.p2 is not None:
        grid = [float(tok) for tok in args.p2.split(",")]
    else:
        grid = [round(0.05 * m, 2) for m in range(1, 20)]
    points = sweep(
        n, d, p1, lcs, grid,
        samples=_scaled(args.samples, args.scale),
        seed=args.seed, deadline=deadline,
    )
    _write_out(points_to_csv(points), args.out)
    return EXIT_OK


# -- argument wiring -----------------------------------------------------------


def _build_parser():
    top = argparse.ArgumentParser(
        prog="cnfilter",
        description="local-consistency filtering on binary constraint networks",
    )
    sub = top.add_subparsers(dest="cmd", required=True)

    g = sub.add_parser("gen", help="generate a random instance")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--d", type=int, required=True)
    g.add_argument("--p1", type=float, required=True)
    g.add_argument("--p2", type=float, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", default=None)
    g.set_defaults(func=cmd_gen)

    f = sub.add_parser("filter", help="enforce one consistency on an instance")
    f.add_argument("--lc", required=True, choices=LC_CHOICES)
    f.add_argument("--k", type=int, default=None)
    f.add_argument("--timeout", type=float, default=None, help="milliseconds")
    f.add_argument("--in", dest="infile", default=None)
    f.add_argument("--json", action="store_true")
    f.set_defaults(func=cmd_filter)

    o = sub.add_parser("oracle", help="exhaustive ground-truth checks")
    osub = o.add_subparsers(dest="oracle_cmd", required=True)
    oc = osub.add_parser("closure")
    oc.add_argument("--lc", required=True, choices=LC_CHOICES)
    oc.add_argument("--k", type=int, default=None)
    os_ = osub.add_parser("solutions")
    os_.add_argument("--limit", type=int, default=None)
    osub.add_parser("completability")
    for p in osub.choices.values():
        p.add_argument("--in", dest="infile", default=None)
        p.add_argument("--force", action="store_true")
        p.set_defaults(func=cmd_oracle)

    l = sub.add_parser("lattice", help="verify the strength relations")
    l.add_argument("--samples", type=int, default=500)
    l.add_argument("--n", type=int, default=6)
    l.add_argument("--d", type=int, default=3)
    l.add_argument("--seed", type=int, default=0)
    l.add_argument("--pairs", default="all")
    l.add_argument("--attempts", type=int, default=100_000)
    l.set_defaults(func=cmd_lattice)

    b = sub.add_parser("bench", help="measurement protocols")
    bsub = b.add_subparsers(dest="bench_cmd", required=True)
    for name in ("t0", "tall"):
        p = bsub.add_parser(name)
        p.add_argument("--lc", required=True, choices=LC_CHOICES)
        p.add_argument("--k", type=int, default=None)
        p.add_argument("--n", type=int, required=True)
        p.add_argument("--d", type=int, required=True)
        p.add_argument("--p1", type=float, required=True)
        p.add_argument("--samples", type=int, default=300)
        p.add_argument("--resolution", type=int, default=None)
        p.add_argument("--threshold", type=float, default=0.5)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--scale", type=float, default=1.0)
        p.add_argument("--timeout", type=float, default=None, help="milliseconds")
        p.add_argument("--out", default=None)
        p.set_defaults(func=cmd_bench)
    s = bsub.add_parser("sweep")
    s.add_argument("--family", default=None)
    s.add_argument("--n", type=int, default=None)
    s.add_argument("--d", type=int, default=None)
    s.add_argument("--p1", type=float, default=None)
    s.add_argument("--p2", default=None, help="comma list of tightness values")
    s.add_argument("--lc", required=True, help="comma list of consistencies")
    s.add_argument("--k", type=int, default=None)
    s.add_argument("--samples", type=int, default=50)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--scale", type=float, default=1.0)
    s.add_argument("--timeout", type=float, default=None, help="milliseconds")
    s.add_argument("--out", default=None)
    s.set_defaults(func=cmd_bench)
    return top


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors already; normalise other codes
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except _Usage as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ParseError, NetworkError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # internal failure
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
