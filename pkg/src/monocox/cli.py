"""Command-line front end.

Subcommands::

    monocox fit --input data.csv --shape increasing --target hazard --estimator npmle
    monocox simulate --spec experiment.json --output report
    monocox chernoff --reps 100000 --seed 0
    monocox selfcheck --seed 13

Exit codes: 0 success, 1 selfcheck violation, 2 invalid input or
unsupported request, 3 estimation failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from .breslow import breslow_lambda
from .core import load_csv
from .cox import fit_beta, log_partial_likelihood
from .estimators import estimate
from .exceptions import EstimationError, MonocoxError, ParseError
from .lab import ExperimentSpec, chernoff_sample, run_experiment
from .selfcheck import INJECTIONS, run_selfcheck

EXIT_OK = 0
EXIT_CHECK = 1
EXIT_INPUT = 2
EXIT_ESTIMATION = 3

_SHAPES = {"increasing": "nondecreasing", "decreasing": "nonincreasing"}


def _fail(code, message):
    print(f"monocox: {message}", file=sys.stderr)
    return code


def _num(v) -> str:
    v = float(v)
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return repr(v)


def _write_intervals(path, est, extend):
    rows = est.estimate.intervals(extend_last=extend)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("interval_start,interval_end,value\n")
        for a, b, v in rows:
            fh.write(f"{_num(a)},{_num(b)},{_num(v)}\n")


def cmd_fit(args) -> int:
    shape = _SHAPES[args.shape]
    if args.target == "density" and args.estimator == "npmle":
        return _fail(EXIT_INPUT, "npmle of a density is not supported; use --estimator grenander")
    if args.target == "density" and shape != "nonincreasing":
        return _fail(EXIT_INPUT, "density estimation is not supported for an increasing density")
    try:
        sample = load_csv(args.input)
    except ParseError as exc:
        return _fail(EXIT_INPUT, f"parse error: {exc}")
    except OSError as exc:
        return _fail(EXIT_INPUT, f"cannot read input: {exc}")
    try:
        if sample.n_events == 0:
            raise EstimationError("no events: every observation is censored")
        fit = fit_beta(sample) if sample.p else None
        beta = fit.beta_hat if fit is not None else np.zeros(0)
        if args.target == "cumhaz":
            est = None
            lam = breslow_lambda(sample, beta)
        else:
            est = estimate(sample, args.estimator, args.target, shape, beta=beta)
    except EstimationError as exc:
        return _fail(EXIT_ESTIMATION, f"estimation failed: {exc}")
    prefix = Path(args.output)
    prefix.parent.mkdir(parents=True, exist_ok=True)
    csv_path = prefix.with_name(prefix.name + ".csv")
    json_path = prefix.with_name(prefix.name + ".json")
    if est is None:
        with open(csv_path, "w", encoding="utf-8", newline="") as fh:
            fh.write("x,value\n")
            for x, v in zip(lam.breakpoints, lam.values):
                fh.write(f"{_num(x)},{_num(v)}\n")
    else:
        _write_intervals(csv_path, est, args.extend == "last")
    meta = {
        "beta": [float(b) for b in beta],
        "loglik": float(fit.loglik if fit is not None else log_partial_likelihood(sample, beta)),
        "iterations": int(fit.iterations) if fit is not None else 0,
        "n": sample.n,
        "events": sample.n_events,
        "ties": sample.n_ties,
        "target": args.target,
    }
    if est is None:
        meta.update(method="breslow", continuity=lam.side, right_extension="last")
    else:
        meta.update(
            method=args.estimator,
            shape=shape,
            continuity=est.estimate.side,
            domain_end=est.domain_end,
            right_extension="last" if args.extend == "last" else "undefined",
        )
    with open(json_path, "w", encoding="utf-8") as fh:
        json.dump(meta, fh, sort_keys=True, indent=1)
        fh.write("\n")
    print(f"wrote {csv_path} and {json_path}")
    return EXIT_OK


def _fmt(v, spec="{:.4f}"):
    return "nan" if v is None or not math.isfinite(v) else spec.format(v)


def cmd_simulate(args) -> int:
    try:
        with open(args.spec, encoding="utf-8") as fh:
            spec = ExperimentSpec.from_dict(json.load(fh))
    except (OSError, ValueError, KeyError, TypeError) as exc:
        return _fail(EXIT_INPUT, f"bad experiment spec: {exc}")
    report = run_experiment(spec, workers=args.workers)
    if not args.no_ks:
        report.attach_chernoff_ks()
    prefix = Path(args.output)
    prefix.parent.mkdir(parents=True, exist_ok=True)
    report.write_json(prefix.with_name(prefix.name + ".json"))
    report.write_csv(prefix.with_name(prefix.name + ".csv"))
    print(f"{'n':>8} {'reps':>6} {'excl':>5} {'rmse':>10} {'ratio':>8} {'ks':>8}")
    for s in report.summary:
        print(
            f"{s['n']:>8} {s['reps']:>6} {s['excluded']:>5} {_fmt(s['rmse'], '{:.5f}'):>10} "
            f"{_fmt(s['rate_ratio'], '{:.3f}'):>8} {_fmt(s.get('ks_chernoff', math.nan), '{:.4f}'):>8}"
        )
    for note in report.notes:
        print(f"note: {note}")
    return EXIT_OK


def cmd_chernoff(args) -> int:
    try:
        draws = chernoff_sample(args.L, args.h, args.reps, args.seed)
    except ValueError as exc:
        return _fail(EXIT_INPUT, str(exc))
    if args.output:
        with open(args.output, "w", encoding="utf-8", newline="") as fh:
            fh.write("location\n")
            for v in draws:
                fh.write(f"{v!r}\n")
    sd = float(draws.std(ddof=1)) if draws.size > 1 else math.nan
    print(f"reps={draws.size} mean={_fmt(float(draws.mean()) if draws.size else math.nan, '{:.5f}')} sd={_fmt(sd, '{:.5f}')}")
    return EXIT_OK


def cmd_selfcheck(args) -> int:
    results = run_selfcheck(seed=args.seed, inject=args.inject)
    for r in results:
        print(r.line())
    failed = [r for r in results if not r.passed]
    if failed:
        return _fail(EXIT_CHECK, f"selfcheck failed: property '{failed[0].name}' violated")
    print("all properties hold")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="monocox", description="Shape-constrained baseline estimation in the Cox model.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="estimate a monotone baseline hazard or density from a CSV file")
    p.add_argument("--input", required=True, help="CSV with columns time, status and optional z1, z2, ...")
    p.add_argument("--shape", choices=sorted(_SHAPES), default="increasing")
    p.add_argument("--target", choices=["hazard", "density", "cumhaz"], default="hazard",
                   help="'cumhaz' writes the Breslow estimator as an (x, value) table")
    p.add_argument("--estimator", choices=["npmle", "grenander"], default="npmle")
    p.add_argument("--output", default="monocox_fit", help="output prefix; writes PREFIX.csv and PREFIX.json")
    p.add_argument("--extend", choices=["none", "last"], default="none",
                   help="'last' clamps the estimate beyond the largest follow-up time")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("simulate", help="run a Monte Carlo campaign from a JSON spec")
    p.add_argument("--spec", required=True)
    p.add_argument("--output", default="monocox_report", help="output prefix; writes PREFIX.json and PREFIX.csv")
    p.add_argument("--workers", type=int, default=None, help="worker processes (capped by MONOCOX_THREADS)")
    p.add_argument("--no-ks", action="store_true", help="skip the comparison with a Chernoff sample")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("chernoff", help="sample the Chernoff distribution on a grid")
    p.add_argument("--L", type=float, default=2.0)
    p.add_argument("--h", type=float, default=0.005)
    p.add_argument("--reps", type=int, default=10**5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", default=None, help="CSV file for the draws")
    p.set_defaults(func=cmd_chernoff)

    p = sub.add_parser("selfcheck", help="run the invariant battery")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--inject", choices=list(INJECTIONS), default=None, help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_selfcheck)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except MonocoxError as exc:
        return _fail(EXIT_ESTIMATION, str(exc))


if __name__ == "__main__":
    sys.exit(main())
