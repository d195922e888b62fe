"""Benchmark command line: ``adaptfilter <subcommand> [flags]``.

Every subcommand writes CSV rows (header = MetricsRow fields) to ``--csv`` or
stdout.  Human-readable notes go to stderr.
"""

from __future__ import annotations

import argparse
import csv
import random
import sys
from typing import Optional, Sequence

from adaptfilter.intcoder import Fixed256, decode_selectors, encode_selectors
from adaptfilter.workbench import harness
from adaptfilter.workbench.harness import MetricsRow
from adaptfilter.workbench.workloads import KINDS, WorkloadSpec, gen_workload, query_keys, read_replay


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--filter", choices=sorted(harness.FILTERS), default="taf")
    p.add_argument("--qbits", type=int, default=16)
    p.add_argument("--rbits", type=int, default=8)
    p.add_argument("--load", type=float, default=0.95)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--runs", type=int, default=1)
    p.add_argument("--csv", metavar="PATH")
    p.add_argument("--remote-delay-ns", type=int, default=0)
    w = p.add_argument_group("workload")
    w.add_argument("--workload", choices=KINDS, default="uniform")
    w.add_argument("--as-ratio", type=float, default=None, help="unique queries / |S|")
    w.add_argument("--zipf-s", type=float, default=1.0)
    w.add_argument("--stream-len", type=int, default=None)
    w.add_argument("--replay", metavar="PATH", help="file of decimal keys, one per line")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="adaptfilter", description="Adaptive filter benchmarks")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("fpr", parents=[common], help="false-positive rate on a query stream")
    adv = sub.add_parser("adversarial", parents=[common], help="adversarial rounds")
    adv.add_argument("--max-rounds", type=int, default=50)
    sub.add_parser("dist", parents=[common], help="selector distribution after c*|S| unique negatives")
    sub.add_parser("space", parents=[common], help="bits per element at the target load")
    tp = sub.add_parser("throughput", parents=[common], help="inserts/sec and queries/sec")
    tp.add_argument("--loads", default=None, help="comma-separated load grid (default: --load)")
    sub.add_parser("selftest", parents=[common], help="quick internal consistency checks")
    return parser


def _filter(args, seed: int):
    return harness.make_filter(args.filter, args.qbits, args.rbits, seed, args.remote_delay_ns)


def _stream(args, s_size: int, seed: int, default_ratio: float) -> tuple[list[int], WorkloadSpec]:
    ratio = default_ratio if args.as_ratio is None else args.as_ratio
    spec = WorkloadSpec(args.workload, round(ratio * s_size), s_size, zipf_s=args.zipf_s,
                        stream_len=args.stream_len, seed=seed)
    if args.replay:
        return read_replay(args.replay), spec
    return gen_workload(spec), spec


def _row(args, filt, spec: WorkloadSpec, seed: int, **kw) -> MetricsRow:
    n = filt.occupancy
    label = "replay" if args.replay else spec.label
    return MetricsRow(filter=filt.name, workload=label, as_ratio=spec.as_ratio, load=filt.load_factor,
                      eps=filt.params.eps, bits_per_element=filt.bits() / n if n else None,
                      rebuilds=filt.rebuilds, adapts=filt.adapts, seed=seed, **kw)


def cmd_fpr(args) -> tuple[list[MetricsRow], int]:
    rows = []
    for seed in range(args.seed, args.seed + args.runs):
        filt = _filter(args, seed)
        members, secs = harness.populate(filt, args.load, seed)
        stream, spec = _stream(args, len(members), seed, 1.0)
        rep = harness.measure_fpr(filt, stream, members if args.replay else None)
        print(f"seed {seed}: overall {rep.overall:.6g} unique {rep.unique:.6g} repeat {rep.repeat}",
              file=sys.stderr)
        rows.append(_row(args, filt, spec, seed, fpr=rep.overall,
                         insert_ops_per_sec=len(members) / secs if secs else None))
    return rows, 0


def cmd_adversarial(args) -> tuple[list[MetricsRow], int]:
    rows = []
    for seed in range(args.seed, args.seed + args.runs):
        filt = _filter(args, seed)
        members, _ = harness.populate(filt, args.load, seed)
        ratio = 10.0 if args.as_ratio is None else args.as_ratio
        spec = WorkloadSpec("adversarial", round(ratio * len(members)), len(members), seed=seed)
        q0 = read_replay(args.replay) if args.replay else gen_workload(spec)
        res = harness.adversarial_rounds(filt, q0, len(members), max_rounds=args.max_rounds)
        print(f"seed {seed}: |Q| per round {res.sizes}", file=sys.stderr)
        rows.append(_row(args, filt, spec, seed, fpr=res.fprs[0] if res.fprs else None,
                         final_round_fpr=res.final_round_fpr))
    return rows, 0


def cmd_dist(args) -> tuple[list[MetricsRow], int]:
    if args.filter not in ("taf", "utaf"):
        raise SystemExit("dist needs a selector filter (taf or utaf)")
    c = 4.0 if args.as_ratio is None else args.as_ratio
    rows, status = [], 0
    for seed in range(args.seed, args.seed + args.runs):
        filt, nq = harness.run_selector_workload(args.qbits, c, seed, args.rbits, args.load,
                                                 harness.FILTERS[args.filter])
        rep = harness.selector_distribution_check(filt, c, nq)
        hist = filt.histogram()
        print(f"seed {seed}: {'pass' if rep.passed else 'FAIL'}; entropy "
              f"{harness.entropy(hist):.4f} bits/element", file=sys.stderr)
        for line in rep.lines():
            print("  " + line, file=sys.stderr)
        status |= not rep.passed
        spec = WorkloadSpec("uniform", nq, filt.occupancy, seed=seed)
        rows.append(_row(args, filt, spec, seed, fpr=filt.false_positives / nq if nq else None))
    return rows, status


def cmd_space(args) -> tuple[list[MetricsRow], int]:
    rows = []
    for seed in range(args.seed, args.seed + args.runs):
        filt = _filter(args, seed)
        harness.populate(filt, args.load, seed)
        print(f"seed {seed}: {filt.bits() / filt.qf.nslots:.4f} bits/slot", file=sys.stderr)
        rows.append(harness.space_row(filt, seed=seed))
    return rows, 0


def cmd_throughput(args) -> tuple[list[MetricsRow], int]:
    loads = [float(x) for x in args.loads.split(",")] if args.loads else [args.load]
    s_size = round(max(loads) * (1 << args.qbits))
    stream, spec = _stream(args, s_size, args.seed, 1.0)
    out = harness.throughput(lambda: _filter(args, args.seed), stream, loads, args.runs, args.seed)
    rows = [MetricsRow(filter=r.filter, workload="replay" if args.replay else spec.label,
                       as_ratio=spec.as_ratio, load=r.load, eps=2.0**-args.rbits,
                       insert_ops_per_sec=r.insert_ops_per_sec, query_ops_per_sec=r.query_ops_per_sec,
                       seed=args.seed) for r in out]
    return rows, 0


def cmd_selftest(args) -> tuple[list[MetricsRow], int]:
    rng = random.Random(args.seed)
    failures = []
    model = Fixed256()
    for _ in range(200):
        vals = [0] * 64
        for _ in range(rng.randrange(4)):
            vals[rng.randrange(64)] = rng.randrange(1, 4)
        if decode_selectors(encode_selectors(vals, model), model) != vals:
            failures.append("coder roundtrip")
            break
    qbits = min(args.qbits, 12)
    filt = harness.make_filter(args.filter, qbits, args.rbits, args.seed)
    members, _ = harness.populate(filt, args.load, args.seed)
    for k in query_keys(4 * len(members), args.seed):
        filt.query(k)
    if not all(filt.query(k).present for k in members):
        failures.append("false negative")
    for name in failures:
        print(f"FAIL {name}", file=sys.stderr)
    print("selftest " + ("failed" if failures else "ok"), file=sys.stderr)
    spec = WorkloadSpec("uniform", 4 * len(members), len(members), seed=args.seed)
    return [_row(args, filt, spec, args.seed)], int(bool(failures))


COMMANDS = {
    "fpr": cmd_fpr,
    "adversarial": cmd_adversarial,
    "dist": cmd_dist,
    "space": cmd_space,
    "throughput": cmd_throughput,
    "selftest": cmd_selftest,
}


def write_rows(rows: Sequence[MetricsRow], path: Optional[str]) -> None:
    fh = open(path, "w", newline="") if path else sys.stdout
    try:
        w = csv.writer(fh)
        w.writerow(MetricsRow.header())
        for r in rows:
            w.writerow(r.values())
    finally:
        if path:
            fh.close()


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if args.runs < 1:
        raise SystemExit("--runs must be >= 1")
    rows, status = COMMANDS[args.command](args)
    write_rows(rows, args.csv)
    return status


if __name__ == "__main__":
    sys.exit(main())
