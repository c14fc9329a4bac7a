"""Command-line interface: ``slores path|screen|solve|verify``.

Exit status is 0 on success, 2 when Slores discards an active feature, and 1
on any other error (including bad arguments).
"""

from __future__ import annotations

import argparse
import logging
import sys

import numpy as np

from . import __version__
from .dual import max_geometry
from .errors import ConfigError, SloresError
from .path import PathConfig, emit_report, load_dataset, report_csv, report_json, run_path
from .screening import slores, strong_rule
from .solver import fit, tau_zero
from .verify import run_checks

EXIT_OK, EXIT_ERROR, EXIT_SAFETY = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors; 2 is reserved for safety violations.
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def _synthetic(text):
    parts = text.split(",")
    if len(parts) != 4:
        raise argparse.ArgumentTypeError("expected m,p,density,corr")
    try:
        return (int(parts[0]), int(parts[1]), float(parts[2]), float(parts[3]))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad synthetic description {text!r}") from exc


def _grid(text):
    parts = text.split(":")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("expected lo:hi:n")
    try:
        return (float(parts[0]), float(parts[1]), int(parts[2]))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad grid {text!r}") from exc


def _rules(text):
    return tuple(r.strip() for r in text.split(",") if r.strip())


def _ratio(text):
    value = float(text)
    if not value > 0.0:
        raise argparse.ArgumentTypeError("ratio must be positive")
    return value


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    src = common.add_mutually_exclusive_group(required=True)
    src.add_argument("--data", metavar="PATH", help="svmlight/libsvm file")
    src.add_argument("--synthetic", type=_synthetic, metavar="m,p,density,corr", help="generated dataset")
    common.add_argument("--seed", type=int, default=0, help="generator seed (default 0)")
    common.add_argument("--tol", type=float, default=1e-9, help="duality-gap target (default 1e-9)")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = _Parser(prog="slores", description="Safe screening for sparse logistic regression.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("path", parents=[common], help="screen and solve over a lambda grid")
    p.add_argument("--grid", type=_grid, default=(0.1, 0.95, 86), metavar="lo:hi:n")
    p.add_argument("--rules", type=_rules, default=("slores", "strong"), metavar="r1,r2")
    p.add_argument("--lambda0", choices=("max", "sequential"), default="max")
    p.add_argument("--out", default=None, metavar="DIR", help="write path.csv/path.json here (default stdout)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--repeats", type=int, default=1)
    p.add_argument("--subsample", type=float, default=1.0)
    p.add_argument("--no-timings", action="store_true", help="blank timing columns for byte-stable output")

    s = sub.add_parser("screen", parents=[common], help="screen at one lambda and print the kept set")
    s.add_argument("--ratio", type=_ratio, required=True, help="lambda / lambda_max")
    s.add_argument("--rule", choices=("slores", "strong"), default="slores")

    v = sub.add_parser("solve", parents=[common], help="solve at one lambda")
    v.add_argument("--ratio", type=_ratio, required=True, help="lambda / lambda_max")
    v.add_argument("--method", choices=("newton", "apg"), default="newton")

    c = sub.add_parser("verify", parents=[common], help="run the invariant suite on a dataset")
    c.add_argument("--grid", type=_grid, default=(0.1, 0.95, 18), metavar="lo:hi:n")
    return parser


def _dataset(args):
    cfg = PathConfig(data=args.data, synthetic=args.synthetic, seed=args.seed)
    return load_dataset(cfg)


def _cmd_path(args, out):
    cfg = PathConfig(
        data=args.data,
        synthetic=args.synthetic,
        grid=args.grid,
        rules=args.rules,
        lambda0=args.lambda0,
        tol_gap=args.tol,
        seed=args.seed,
        out_dir=args.out,
        fmt=args.format,
        repeats=args.repeats,
        subsample=args.subsample,
        timings=not args.no_timings,
    ).validate()
    report = run_path(cfg)
    timings = cfg.timings
    if cfg.out_dir is None:
        out.write(report_csv(report, timings) if cfg.fmt == "csv" else report_json(report, timings))
    else:
        target = emit_report(report, cfg.fmt, cfg.out_dir, timings)
        print(f"wrote {target}", file=sys.stderr)
    if report.slores_violations:
        print(f"slores discarded {report.slores_violations} active features", file=sys.stderr)
        return EXIT_SAFETY
    return EXIT_OK


def _cmd_screen(args, out):
    ds = _dataset(args)
    geom = max_geometry(ds)
    lam = args.ratio * geom.lambda_max
    if args.rule == "slores":
        sr = slores(ds, lam, geom)
    else:
        sr = strong_rule(ds, lam, geom.lambda_max, geom.theta0)
    out.write(f"# rule={args.rule} lambda_ratio={args.ratio!r} lambda={lam!r} kept={sr.kept.size} p={ds.p}\n")
    out.write(" ".join(str(j) for j in sr.kept) + "\n")
    return EXIT_OK


def _cmd_solve(args, out):
    ds = _dataset(args)
    geom = max_geometry(ds)
    lam = args.ratio * geom.lambda_max
    sol = fit(ds, lam, tol_gap=args.tol, method=args.method)
    support = np.flatnonzero(np.abs(sol.beta) > tau_zero(sol.beta))
    out.write(f"lambda {lam!r}\nobjective {sol.objective!r}\ngap {sol.gap!r}\n")
    out.write(f"intercept {sol.c!r}\niterations {sol.iterations}\nnonzeros {support.size}\n")
    for j in support:
        out.write(f"{j} {float(sol.beta[j])!r}\n")
    return EXIT_OK


def _cmd_verify(args, out):
    ds = _dataset(args)
    lo, hi, n = args.grid
    if not (0.0 < lo <= hi < 1.0 and n >= 1):
        raise ConfigError(f"grid needs 0 < lo <= hi < 1 and n >= 1, got {lo}:{hi}:{n}")
    checks = run_checks(ds, np.linspace(hi, lo, n), tol_gap=min(args.tol, 1e-10))
    for chk in checks:
        out.write(chk.line() + "\n")
    if any(not c.ok and c.safety for c in checks):
        return EXIT_SAFETY
    return EXIT_OK if all(c.ok for c in checks) else EXIT_ERROR


COMMANDS = {"path": _cmd_path, "screen": _cmd_screen, "solve": _cmd_solve, "verify": _cmd_verify}


def main(argv=None, out=None):
    out = sys.stdout if out is None else out
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args, out)
    except SloresError as exc:
        print(f"slores: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
