"""Command line entry point: ``pquot verify|list|ppower|pullback|kernel``."""
from __future__ import annotations

import argparse
import json
import sys
from typing import Sequence

from . import blowup, derivation, quotient
from .derivation import Derivation
from .ringcore import AlgebraError, RingCtx
from .scenario import (
    DEFAULT_DMAX,
    SchemaError,
    StepError,
    UnknownFormat,
    corpus_paths,
    emit_report,
    list_scenarios,
    run_scenario,
)

EXIT_PASS, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _param(text: str) -> tuple[str, int]:
    key, sep, value = text.partition("=")
    if not sep or not key:
        raise argparse.ArgumentTypeError(f"expected key=value, got {text!r}")
    try:
        return key.strip(), int(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"parameter {key} must be an integer, got {value!r}") from None


def _ring(args) -> RingCtx:
    return RingCtx(args.p, args.vars.split(","), args.reserved.split(",") if args.reserved else [])


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="pquot", description=__doc__)
    parser.add_argument("--list", action="store_true", help="list corpus scenarios and exit")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    v = sub.add_parser("verify", help="run a scenario and compare against its expectations")
    v.add_argument("--scenario", action="append", default=[], metavar="NAME|PATH")
    v.add_argument("scenarios", nargs="*", metavar="NAME|PATH")
    v.add_argument("--all", action="store_true", help="run every corpus scenario")
    v.add_argument("--param", action="append", type=_param, default=[], metavar="KEY=VALUE")
    v.add_argument("--dmax", type=int, default=None)
    v.add_argument("--format", default="text", choices=["text", "json"])
    v.add_argument("--timings", action="store_true", help="include wall-clock times in json output")

    ls = sub.add_parser("list", help="list corpus scenarios")
    ls.add_argument("--format", default="text", choices=["text", "json"])

    pp = sub.add_parser("ppower", help="p-th power of a derivation literal")
    pp.add_argument("derivation")
    pp.add_argument("--p", type=int, required=True)
    pp.add_argument("--vars", required=True, help="comma separated variable names")
    pp.add_argument("--reserved", default="")

    pb = sub.add_parser("pullback", help="pull a derivation back along a monomial chart")
    pb.add_argument("derivation")
    pb.add_argument("--p", type=int, required=True)
    pb.add_argument("--vars", required=True)
    pb.add_argument("--reserved", default="")
    pb.add_argument("--target", required=True, help="comma separated chart variables")
    pb.add_argument("--image", action="append", default=[], metavar="VAR=MONOMIAL")
    pb.add_argument("--saturate", metavar="VAR", help="also saturate along VAR")

    k = sub.add_parser("kernel", help="truncated kernel of a derivation")
    k.add_argument("derivation")
    k.add_argument("--p", type=int, required=True)
    k.add_argument("--vars", required=True)
    k.add_argument("--dmax", type=int, default=DEFAULT_DMAX)
    return parser


def _cmd_list(fmt: str) -> int:
    catalog = list_scenarios()
    if fmt == "json":
        print(json.dumps(catalog, sort_keys=True, separators=(",", ":")))
        return EXIT_PASS
    for entry in catalog:
        ranges = []
        for k, spec in sorted(entry["params"].items()):
            if "choices" in spec:
                ranges.append(f"{k}={spec['default']} {{{','.join(map(str, spec['choices']))}}}")
            elif "min" in spec or "max" in spec:
                ranges.append(f"{k}={spec['default']} [{spec.get('min', '')}..{spec.get('max', '')}]")
            else:
                ranges.append(f"{k}={spec['default']}")
        print(f"{entry['name']:<28} {' '.join(ranges)}")
        print(f"{'':<28} {entry['source']}")
    return EXIT_PASS


def _cmd_verify(args) -> int:
    names = list(args.scenario) + list(args.scenarios)
    if args.all:
        names += [str(p) for p in corpus_paths()]
    if not names:
        raise SchemaError("verify needs --scenario NAME|PATH or --all")
    overrides = dict(args.param)
    if args.dmax is not None:
        overrides["dmax"] = args.dmax
    code = EXIT_PASS
    for name in names:
        report = run_scenario(name, overrides)
        sys.stdout.buffer.write(emit_report(report, args.format, timings=args.timings))
        if args.format == "json":
            sys.stdout.buffer.write(b"\n")
        sys.stdout.flush()
        if not report.passed:
            code = EXIT_FAIL
    return code


def _cmd_ppower(args) -> int:
    D = Derivation.parse(args.derivation, _ring(args))
    Dp = derivation.p_power(D)
    print(f"D^[p] = {Dp}")
    try:
        print(f"h = {derivation.is_p_closed(D)}")
    except derivation.NotPClosed as exc:
        print(f"not p-closed: {exc}")
    return EXIT_PASS


def _cmd_pullback(args) -> int:
    src = _ring(args)
    tgt = src.renamed(args.target.split(","))
    images = {}
    for item in args.image:
        var, sep, img = item.partition("=")
        if not sep:
            raise SchemaError(f"--image expects VAR=MONOMIAL, got {item!r}")
        images[var.strip()] = img
    chart = blowup.monomial_chart(src, tgt, images)
    D = Derivation.parse(args.derivation, src)
    pulled = blowup.pullback_derivation(D, chart)
    print(f"chart: {chart}")
    print(f"pullback = {pulled}")
    if args.saturate:
        k, S = derivation.saturate(pulled, args.saturate)
        print(f"saturated along {args.saturate}: k = {k}, S = {S}")
    return EXIT_PASS


def _cmd_kernel(args) -> int:
    D = Derivation.parse(args.derivation, RingCtx(args.p, args.vars.split(",")))
    kb = quotient.truncated_kernel(D, args.dmax)
    print(f"dims (deg <= 0..{args.dmax}): {list(kb.dims)}")
    for f in kb.basis:
        print(f"  {f}")
    return EXIT_PASS


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.list or args.command == "list":
            return _cmd_list(getattr(args, "format", "text"))
        if args.command is None:
            parser.print_help(sys.stderr)
            return EXIT_USAGE
        handler = {
            "verify": _cmd_verify,
            "ppower": _cmd_ppower,
            "pullback": _cmd_pullback,
            "kernel": _cmd_kernel,
        }[args.command]
        return handler(args)
    except (SchemaError, UnknownFormat) as exc:
        print(f"pquot: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except StepError as exc:
        print(f"pquot: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except (AlgebraError, ValueError) as exc:
        # malformed ad-hoc input (bad literal, bad prime, ...)
        print(f"pquot: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
