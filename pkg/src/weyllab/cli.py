"""Command-line interface: ``weyllab <subcommand> --key value ...``."""

import argparse
import json
import math
import sys

import numpy as np

from . import __version__
from .asymptotics import DEFAULT_W, RATE_TOL, analyze
from .checks import SUITES, TIERS, run_suites
from .counting import (counting_from_sequence, dyadic_lambda_grid, parse_counting,
                       sequence_from_counting)
from .errors import WeylLabError
from .matrix_harness import make_triple_dump, run_triple
from .models import cusp_constants, parse_model_spec, simon_constant
from .rv_calculus import parse_rv
from .spectra import read_spectrum_csv, write_spectrum, write_spectrum_csv


def _json_default(x):
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, np.bool_):
        return bool(x)
    raise TypeError(f"not JSON serializable: {type(x).__name__}")


def _dump_json(obj, path):
    text = json.dumps(obj, indent=2, default=_json_default, allow_nan=False) + "\n"
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def _load_sequence(args):
    if args.model:
        spec = parse_model_spec(args.model, size=args.size)
        return spec.build(), spec
    return read_spectrum_csv(args.input), None


def _default_g(spec):
    if spec is not None and spec.name == "generator":
        return spec.params["g"]
    if spec is not None and spec.name in ("zeta-rvm", "zeta-file"):
        return parse_rv("power-log:-1,1")
    if spec is not None and spec.name == "podles":
        return parse_rv("power-log:-1,2")
    if spec is not None and spec.name == "planted":
        return parse_rv(f"power-log:{spec.params['rho']!r},{spec.params['q']!r}")
    raise WeylLabError("--g is required for this input")


def _fmt(x):
    return "" if x is None else repr(float(x))


def cmd_analyze(args):
    s, spec = _load_sequence(args)
    g = parse_rv(args.g) if args.g else _default_g(spec)
    rate = args.rate
    if rate is None and spec is not None and spec.name in ("zeta-rvm", "zeta-file", "podles"):
        rate = spec.rate
    rep = analyze(s, g, rate=rate, W=args.W, max_n=args.max_n)
    _dump_json(rep.as_dict(), args.out)
    if args.curve:
        with open(args.curve, "w") as fh:
            fh.write("N,tau,lambda_plus_ratio,lambda_minus_ratio\n")
            for n, t, lp, lm in rep.curve:
                fh.write(f"{n},{_fmt(t)},{_fmt(lp)},{_fmt(lm)}\n")
    return 0


def cmd_model(args):
    spec = parse_model_spec(args.spec, size=args.size)
    s = spec.build()
    if args.out in (None, "-"):
        write_spectrum(s, sys.stdout)
    else:
        write_spectrum_csv(s, args.out)
    return 0


def cmd_convert(args):
    if args.counting:
        if not args.size:
            raise WeylLabError("--size is required when converting a counting function")
        s = sequence_from_counting(parse_counting(args.counting), args.size)
        if args.out in (None, "-"):
            write_spectrum(s, sys.stdout)
        else:
            write_spectrum_csv(s, args.out)
        return 0
    s = read_spectrum_csv(args.input)
    N = counting_from_sequence(s, args.part)
    top = float(s.values[0] if s.kind == "singular" else np.max(s.moduli()))
    floor = N.floor if N.floor > 0 else top * 2.0 ** -60
    grid = dyadic_lambda_grid(top, floor)
    lines = ["lambda,count\n"] + [f"{lam!r},{int(c)}\n" for lam, c in zip(grid.tolist(), np.atleast_1d(N(grid)).tolist())]
    if args.out in (None, "-"):
        sys.stdout.writelines(lines)
    else:
        with open(args.out, "w") as fh:
            fh.writelines(lines)
    return 0


def _seed_range(text):
    lo, sep, hi = text.partition(":")
    try:
        if not sep:
            return range(int(lo), int(lo) + 1)
        return range(int(lo), int(hi))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad seed range {text!r}; use <start>:<stop>")


def cmd_harness(args):
    g = parse_rv(args.g)
    results = []
    failed = []
    for seed in args.seeds:
        r = run_triple(g, args.n, seed, signed=not args.positive)
        results.append(r.as_dict())
        if not r.ok:
            failed.append(seed)
            if args.dump:
                make_triple_dump(g, args.n, seed, args.dump, signed=not args.positive)
    _dump_json({"g": g.label, "n": args.n, "seeds": [args.seeds.start, args.seeds.stop],
                "passed": not failed, "failed_seeds": failed, "triples": results}, args.out)
    return 1 if failed else 0


def cmd_constants(args):
    if args.family == "simon":
        if args.alpha is None:
            raise WeylLabError("--alpha is required for simon")
        alpha = math.inf if args.alpha.strip().lower() in ("inf", "infinity") else float(args.alpha)
        v = simon_constant(args.n, alpha)
        print(f"simon n={args.n} alpha={args.alpha} {v:.12g}")
    else:
        c1, c2 = cusp_constants(args.n)
        print(f"cusp n={args.n} c1={c1:.12g}")
        print(f"cusp n={args.n} c2={c2:.12g}")
    return 0


def cmd_check(args):
    report, timings = run_suites(args.suite, seed=args.seed, tier=args.tier)
    _dump_json(report, args.out)
    for name, dt in timings.items():
        print(f"{name}: {dt:.2f}s", file=sys.stderr)
    return 0 if report["passed"] else 1


def build_parser():
    p = argparse.ArgumentParser(prog="weyllab", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", help="measurability report for a sequence")
    src = a.add_mutually_exclusive_group(required=True)
    src.add_argument("--model", help="model spec, e.g. zeta-rvm:1000000")
    src.add_argument("--input", help="spectrum CSV")
    a.add_argument("--g", help="normalizer spec, e.g. power-log:-1,1")
    a.add_argument("--rate", choices=sorted(RATE_TOL), help="convergence-rate hint")
    a.add_argument("--W", type=int, default=DEFAULT_W, help="trailing windows per band")
    a.add_argument("--max-n", type=int, help="largest N on the dyadic grid")
    a.add_argument("--size", type=int, help="prefix length for planted models")
    a.add_argument("--out", help="report JSON path (default stdout)")
    a.add_argument("--curve", help="tau/Weyl curve CSV path")
    a.set_defaults(func=cmd_analyze)

    m = sub.add_parser("model", help="write a model spectrum as CSV")
    m.add_argument("spec")
    m.add_argument("--size", type=int, help="prefix length for planted models")
    m.add_argument("--out", help="CSV path (default stdout)")
    m.set_defaults(func=cmd_model)

    c = sub.add_parser("convert", help="counting function <-> sequence")
    src = c.add_mutually_exclusive_group(required=True)
    src.add_argument("--counting", help="counting spec: rvm or smalllam:<c>,<p>,<q>")
    src.add_argument("--input", help="spectrum CSV to tabulate as a counting function")
    c.add_argument("--size", type=int, help="number of terms to generate")
    c.add_argument("--part", choices=["singular", "plus", "minus", "modulus"])
    c.add_argument("--out", help="output CSV path (default stdout)")
    c.set_defaults(func=cmd_convert)

    h = sub.add_parser("harness", help="matrix triple suite over a seed range")
    h.add_argument("--seeds", type=_seed_range, default=range(0, 10), help="<start>:<stop>")
    h.add_argument("--n", type=int, default=64)
    h.add_argument("--g", default="power-log:-1,0")
    h.add_argument("--positive", action="store_true", help="plant positive profiles only")
    h.add_argument("--dump", help="directory for binary dumps of failing triples")
    h.add_argument("--out", help="report JSON path (default stdout)")
    h.set_defaults(func=cmd_harness)

    k = sub.add_parser("constants", help="Weyl-law constants")
    k.add_argument("family", choices=["simon", "cusp"])
    k.add_argument("--n", type=int, required=True)
    k.add_argument("--alpha", help="positive number or inf (simon only)")
    k.set_defaults(func=cmd_constants)

    ch = sub.add_parser("check", help="run property suites")
    ch.add_argument("--suite", choices=list(SUITES) + ["all"], default="all")
    ch.add_argument("--seed", type=int, default=0)
    ch.add_argument("--tier", choices=list(TIERS), default="small")
    ch.add_argument("--out", help="report JSON path (default stdout)")
    ch.set_defaults(func=cmd_check)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (WeylLabError, ValueError, OSError) as exc:
        print(f"weyllab {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
