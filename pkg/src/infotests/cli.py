"""Command line entry point: ``infotests {generate,test,advise,experiment}``.

Exit codes: 0 ran, 1 usage error, 2 some experiment trials failed.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import compression, harness, processes, ranking
from .advisor import DEFAULT_TARGET_C, suggest_block_length
from .bitstream import ParameterError, read_file


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _cuts(text):
    try:
        return tuple(int(c) for c in text.split(",") if c.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad cut list: {text!r}")


def _kind(text):
    return "T" if text == "t" else "Tbar"


def _add_source_args(p):
    p.add_argument("--source", choices=["randu", "two-faced", "bernoulli"], default="bernoulli")
    p.add_argument("--k", type=int, default=1, help="two-faced memory")
    p.add_argument("--pi", type=float, default=0.2)
    p.add_argument("--kind", choices=["t", "tbar"], default="t")
    p.add_argument("--n-bits", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)


def _add_test_args(p):
    p.add_argument("--s", type=int, default=None, help="block length (default: advisor)")
    p.add_argument("--a1-size", type=int, default=None)
    p.add_argument("--cuts", type=_cuts, default=None, help="k1,k2,... position cut points")
    p.add_argument("--alpha", type=float, default=0.01)
    p.add_argument("--alpha-exponent", type=int, default=compression.DEFAULT_ALPHA_EXPONENT)
    p.add_argument("--kt-order", type=int, default=0)
    p.add_argument("--gate", choices=["gamma", "gamma_hat"], default="gamma_hat")
    p.add_argument("--bit-order", choices=["msb", "lsb"], default="msb")


def build_parser():
    parser = _Parser(prog="infotests", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    gen = sub.add_parser("generate", help="write a generated bit stream as raw bytes")
    _add_source_args(gen)
    gen.add_argument("--out", required=True)

    tst = sub.add_parser("test", help="test one raw binary file")
    tst.add_argument("file")
    tst.add_argument("--test", choices=harness.TESTS, default="bookstack")
    tst.add_argument("--cmd", default="builtin:zlib", help="compressor for --test compress")
    _add_test_args(tst)

    adv = sub.add_parser("advise", help="suggest a block length")
    adv.add_argument("--n-bits", type=int, required=True)
    adv.add_argument("--c", type=float, default=DEFAULT_TARGET_C)

    exp = sub.add_parser("experiment", help="count rejections over many trials")
    exp.add_argument("--source", choices=harness.SOURCES, default="bernoulli")
    exp.add_argument("--test", choices=harness.TESTS, default="bookstack")
    exp.add_argument("--trials", type=int, default=100)
    exp.add_argument("--n-bits", type=int, default=None)
    exp.add_argument("--seed", type=int, default=0)
    exp.add_argument("--k", type=int, default=1)
    exp.add_argument("--pi", type=float, default=0.2)
    exp.add_argument("--kind", choices=["t", "tbar"], default="t")
    exp.add_argument("--input-dir", default=None)
    exp.add_argument("--format", choices=harness.FORMATS, default="table")
    exp.add_argument("--workers", type=int, default=1)
    exp.add_argument("--compressor-cmd", default="builtin:zlib")
    _add_test_args(exp)
    return parser


def _generate(args):
    if args.source == "randu":
        seq = processes.randu_bits(args.n_bits)
    else:
        rng = processes.make_rng(args.seed)
        if args.source == "bernoulli":
            seq = processes.bernoulli_bits(args.n_bits, rng)
        else:
            spec = processes.MarkovSpec(args.k, _kind(args.kind), args.pi)
            seq = processes.two_faced_sample(spec, args.n_bits, rng)
    Path(args.out).write_bytes(seq.to_bytes("msb"))
    return 0


def _test(args):
    seq = read_file(args.file, args.bit_order)
    spec = harness.ExperimentSpec(
        source="dir", input_dir=str(Path(args.file).parent), test=args.test, trials=1,
        alpha=args.alpha, s=args.s, a1_size=args.a1_size, cuts=args.cuts,
        bit_order=args.bit_order, kt_order=args.kt_order, gate=args.gate,
        compressor_cmd=args.cmd, alpha_exponent=args.alpha_exponent,
    )
    if args.test in ("bookstack", "order"):
        s = args.s or suggest_block_length(seq.length_bits).suggested_s
        size = 1 << s
        partition = (ranking.PartitionSpec.from_cuts(size, args.cuts) if args.cuts
                     else ranking.default_partition(size, args.a1_size))
        record = ranking.run_ranking_test(seq, args.test, s, partition, args.alpha).to_dict()
    else:
        record = harness.apply_test(spec, seq)
        if args.test == "compress":
            record["parameters"] = {"cmd": args.cmd, "alpha_exponent": args.alpha_exponent,
                                    "file_bytes": len(seq.to_bytes(args.bit_order))}
    record["file"] = args.file
    print(json.dumps(record))
    return 0


def _advise(args):
    print(json.dumps(suggest_block_length(args.n_bits, args.c).to_dict()))
    return 0


def _experiment(args):
    spec = harness.ExperimentSpec(
        source=args.source, test=args.test, trials=args.trials, n_bits=args.n_bits,
        alpha=args.alpha, master_seed=args.seed, s=args.s, a1_size=args.a1_size,
        cuts=args.cuts, k=args.k, pi=args.pi, kind=_kind(args.kind),
        input_dir=args.input_dir, bit_order=args.bit_order, kt_order=args.kt_order,
        gate=args.gate, compressor_cmd=args.compressor_cmd, alpha_exponent=args.alpha_exponent,
    )
    report = harness.run_experiment(spec, workers=args.workers)
    sys.stdout.write(harness.emit_report(report, args.format))
    return 2 if report.failures else 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handler = {"generate": _generate, "test": _test, "advise": _advise, "experiment": _experiment}
    try:
        return handler[args.command](args)
    except (ParameterError, processes.ResourceError, OSError) as exc:
        print(f"infotests: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
