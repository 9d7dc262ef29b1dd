"""Command line front end.

Exit codes: 0 on success, 1 for usage errors and refused requests
(oversized enumerations, malformed spec files), 2 when a roundtrip
consistency check finds a mismatch.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from .lattice import standard_lattice
from .quantize import make_quantizer, second_moment_mc
from .shaping import BUILTIN_SPECS, get_spec
from .simulate import (
    SIGMA_FORMULA,
    average_energy,
    bench_family,
    bench_to_csv,
    random_ordinals,
    wer_points_to_csv,
    wer_sweep,
)

_FULL_ROUNDTRIP_LIMIT = 1 << 20


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on bad usage; this project reserves 2 for data
    mismatches, so usage problems exit 1 instead."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _sweep_values(text: str) -> list:
    parts = text.split(":")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("sweep must look like start:stop:step")
    try:
        start, stop, step = (float(p) for p in parts)
    except ValueError as exc:
        raise argparse.ArgumentTypeError("sweep values must be numbers") from exc
    if step <= 0:
        raise argparse.ArgumentTypeError("sweep step must be positive")
    if start > stop:
        raise argparse.ArgumentTypeError("sweep is empty (start > stop)")
    values = []
    v = start
    while v <= stop + 1e-9:
        values.append(round(v, 10))
        v += step
    return values


def _dim_list(text: str) -> list:
    try:
        dims = [int(p) for p in text.split(",") if p.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError("dims must be a comma list of integers") from exc
    if not dims:
        raise argparse.ArgumentTypeError("dims list is empty")
    return dims


def _emit(text: str, out_path) -> None:
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="vorlat", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p_round = sub.add_parser("roundtrip", help="encode/index consistency check")
    p_round.add_argument("--spec", required=True,
                         help=f"stock name ({', '.join(BUILTIN_SPECS)}) or spec file")
    p_round.add_argument("--trials", type=int, default=0,
                         help="random messages to test (0 = exhaustive when small)")
    p_round.add_argument("--seed", type=int, default=0)

    p_gain = sub.add_parser("shaping-gain", help="Monte Carlo second-moment gain")
    p_gain.add_argument("--lattice", required=True,
                        help="stock lattice name, e.g. E8_int or Leech_int")
    p_gain.add_argument("--samples", type=int, default=100000)
    p_gain.add_argument("--seed", type=int, default=0)
    p_gain.add_argument("--out", default=None)

    p_wer = sub.add_parser("wer", help="word error rate sweep over Es/N0")
    p_wer.add_argument("--spec", required=True)
    p_wer.add_argument("--sweep", required=True, type=_sweep_values,
                       metavar="START:STOP:STEP", help="Es/N0 grid in dB")
    p_wer.add_argument("--trials", type=int, default=100000)
    p_wer.add_argument("--seed", type=int, default=0)
    p_wer.add_argument("--mode", choices=("multistage", "exhaustive_ml"),
                       default="multistage")
    p_wer.add_argument("--max-errors", type=int, default=200,
                       help="stop a grid point early after this many errors")
    p_wer.add_argument("--out", default=None)

    p_enum = sub.add_parser("enumerate", help="list every constellation point")
    p_enum.add_argument("--spec", required=True)
    p_enum.add_argument("--out", default=None)

    p_bench = sub.add_parser("bench", help="encoding cost versus a dense multiply")
    p_bench.add_argument("--dims", type=_dim_list, default=[8, 16, 32, 64, 128, 256, 512],
                         metavar="N1,N2,...", help="block dimensions, multiples of 8")
    p_bench.add_argument("--trials", type=int, default=256)
    p_bench.add_argument("--repeats", type=int, default=9)
    p_bench.add_argument("--seed", type=int, default=0)
    p_bench.add_argument("--out", default=None)

    return parser


def _cmd_roundtrip(args) -> int:
    spec = get_spec(args.spec)
    if args.trials <= 0:
        if spec.message_count > _FULL_ROUNDTRIP_LIMIT:
            print(
                f"constellation has {spec.message_count} points; pass --trials "
                f"to check a random sample",
                file=sys.stderr,
            )
            return 1
        ordinals = spec.all_ordinals()
    else:
        ordinals = random_ordinals(spec, args.trials, args.seed)
    points = spec.encode_batch(ordinals)
    ok = int((spec.index_batch(points) == ordinals).sum())
    total = len(ordinals)
    if args.trials <= 0:
        distinct = len(np.unique(points, axis=0))
        if distinct != total:
            print(f"{distinct}/{total} points distinct", file=sys.stderr)
            return 2
    if ok != total:
        print(f"{ok}/{total} ok", file=sys.stderr)
        return 2
    print(f"{ok}/{total} ok")
    return 0


def _cmd_shaping_gain(args) -> int:
    lattice = standard_lattice(args.lattice)
    est = second_moment_mc(make_quantizer(lattice), args.samples, seed=args.seed)
    lines = [
        f"# lattice = {args.lattice}",
        f"# samples = {args.samples}",
        f"# seed = {args.seed}",
        "nsm,nsm_stderr,gain_db,gain_stderr_db",
        f"{est.nsm:.8g},{est.stderr:.8g},{est.gain_db():.6g},{est.gain_stderr_db():.6g}",
    ]
    _emit("\n".join(lines) + "\n", args.out)
    return 0


def _cmd_wer(args) -> int:
    spec = get_spec(args.spec)
    energy = average_energy(spec)
    points = wer_sweep(
        spec,
        args.sweep,
        trials=args.trials,
        seed=args.seed,
        mode=args.mode,
        max_errors=args.max_errors,
        energy=energy,
    )
    header = [
        f"spec = {args.spec}",
        f"mode = {args.mode}",
        f"trials = {args.trials}",
        f"seed = {args.seed}",
        f"max_errors = {args.max_errors}",
        f"energy_per_dim = {energy:.8g}",
        SIGMA_FORMULA,
    ]
    _emit(wer_points_to_csv(points, header_lines=header), args.out)
    return 0


def _cmd_enumerate(args) -> int:
    spec = get_spec(args.spec)
    ordinals = spec.all_ordinals()  # refuses oversized constellations
    points = spec.encode_batch(ordinals)
    lines = [
        f"# spec = {args.spec}",
        f"# points = {spec.message_count}",
        f"# rate_bits_per_dim = {spec.rate():.8g}",
    ]
    lines.extend(" ".join(str(int(v)) for v in p) for p in points)
    _emit("\n".join(lines) + "\n", args.out)
    return 0


def _cmd_bench(args) -> int:
    results = bench_family(
        dims=args.dims, trials=args.trials, repeats=args.repeats, seed=args.seed
    )
    header = [
        f"trials = {args.trials}",
        f"repeats = {args.repeats}",
        f"seed = {args.seed}",
        "times are median ns per encoded message",
    ]
    _emit(bench_to_csv(results, header_lines=header), args.out)
    if not all(r.outputs_match for r in results):
        print("benchmark outputs diverged between encode paths", file=sys.stderr)
        return 2
    return 0


_COMMANDS = {
    "roundtrip": _cmd_roundtrip,
    "shaping-gain": _cmd_shaping_gain,
    "wer": _cmd_wer,
    "enumerate": _cmd_enumerate,
    "bench": _cmd_bench,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ValueError as exc:
        print(f"vorlat {args.command}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
