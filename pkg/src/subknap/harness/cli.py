"""Command line interface: gen, solve, opt, suite, verify.

Exit codes: 0 success, 1 verification failures, 2 input error, 3 capacity error.
"""

from __future__ import annotations

import argparse
import io
import json
import logging
import sys
from pathlib import Path

import yaml

from .. import core
from ..bruteforce import exact_opt
from ..continuous import solver_names
from ..errors import CapacityError, InputError
from .generate import KINDS, generate
from .instance_io import load_instance, serialize_instance
from .suite import run_one, run_suite, summarize, write_csv

EXIT_OK, EXIT_VIOLATION, EXIT_INPUT, EXIT_CAPACITY = 0, 1, 2, 3


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _params(pairs):
    out = {}
    for pair in pairs or []:
        if "=" not in pair:
            raise InputError(f"parameter {pair!r} must look like key=value")
        key, value = pair.split("=", 1)
        out[key] = _parse_value(value)
    return out


def _emit(text: str, out: str | None):
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def cmd_gen(args):
    inst = generate(args.kind, _params(args.param), args.seed)
    _emit(serialize_instance(inst), args.out)


def _algo_from_args(args):
    opts = {}
    if args.samples is not None:
        opts["samples"] = args.samples
    if args.steps is not None:
        opts["steps"] = args.steps
    if args.resolution is not None:
        opts["resolution"] = args.resolution
    return {"algorithm": args.algorithm, "solver": args.solver, "epsilon": args.epsilon,
            "h": args.h, "attempts": args.attempts, "solver_options": opts}


def cmd_solve(args):
    inst = load_instance(args.instance)
    report = run_one(inst, _algo_from_args(args), args.seed, compute_opt=args.opt,
                     raise_errors=True)
    buf = io.StringIO()
    write_csv([report], buf, timing=not args.no_timing)
    _emit(buf.getvalue(), args.out)
    print(f"members: {list(report.members)}", file=sys.stderr)


def cmd_opt(args):
    inst = load_instance(args.instance)
    res = exact_opt(inst)
    doc = {"instance": inst.name, "optimum_set": list(res.optimum_set),
           "optimum_value": res.optimum_value, "enumerated": res.enumerated,
           "feasible_sets": res.feasible}
    _emit(json.dumps(doc, sort_keys=True) + "\n", args.out)


def cmd_suite(args):
    path = Path(args.config)
    config = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
    reports = run_suite(config, base_dir=path.parent, jobs=args.jobs)
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            write_csv(reports, fh, timing=not args.no_timing)
    else:
        write_csv(reports, sys.stdout, timing=not args.no_timing)
    summary = summarize(reports)
    if args.summary:
        Path(args.summary).write_text(json.dumps(summary, indent=2) + "\n", encoding="utf-8")
    for row in summary:
        print(f"{row['algorithm']:>13} {row['solver']:>12}  rows={row['rows']}  "
              f"mean_ratio={row['mean_ratio']}  min_ratio={row['min_ratio']}", file=sys.stderr)


def cmd_verify(args):
    inst = load_instance(args.instance)
    oracle, trials, seed = inst.oracle, args.trials, args.seed
    checks = [
        ("submodularity", core.submodularity_violations(oracle, trials, seed)),
        ("subadditivity over disjoint parts",
         core.subadditivity_violations(oracle, trials, seed + 1)),
        ("decreasing marginals", core.decreasing_marginal_violations(oracle, trials, seed + 2)),
        ("partition marginals", core.partition_marginal_violations(oracle, trials, seed + 3)),
    ]
    if oracle.monotone:
        checks.append(("monotonicity", core.monotonicity_violations(oracle, trials, seed + 4)))
    failed = False
    for name, violations in checks:
        status = "PASS" if violations == 0 else "FAIL"
        failed |= violations > 0
        print(f"{status}  {name}: {violations} violations in {trials} trials")
    return EXIT_VIOLATION if failed else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="subknap", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a random instance file")
    p.add_argument("kind", choices=KINDS)
    p.add_argument("--param", "-p", action="append", metavar="KEY=VALUE",
                   help="generator parameter, value parsed as JSON when possible")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("solve", help="solve one instance file")
    p.add_argument("instance")
    p.add_argument("--algorithm", choices=("randomized", "deterministic", "bruteforce"),
                   default="randomized")
    p.add_argument("--solver", default="greedy", help=f"one of {', '.join(solver_names())}")
    p.add_argument("--epsilon", type=float, default=0.3)
    p.add_argument("--h", type=int, default=None,
                   help="maximum guess size (default min(ceil(d/eps^4), 3))")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--attempts", type=int, default=16)
    p.add_argument("--samples", type=int, default=None)
    p.add_argument("--steps", type=int, default=None)
    p.add_argument("--resolution", type=float, default=None)
    p.add_argument("--opt", action="store_true", help="also compute the exact optimum")
    p.add_argument("--no-timing", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("opt", help="exact optimum by enumeration")
    p.add_argument("instance")
    p.add_argument("--out")
    p.set_defaults(func=cmd_opt)

    p = sub.add_parser("suite", help="run an experiment configuration (JSON or YAML)")
    p.add_argument("config")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--no-timing", action="store_true")
    p.add_argument("--summary", help="write the per-algorithm summary as JSON")
    p.add_argument("--out")
    p.set_defaults(func=cmd_suite)

    p = sub.add_parser("verify", help="check submodularity-type invariants on an instance")
    p.add_argument("instance")
    p.add_argument("--trials", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        code = args.func(args)
    except CapacityError as exc:
        print(f"capacity error: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except (InputError, OSError, yaml.YAMLError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return code or EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
