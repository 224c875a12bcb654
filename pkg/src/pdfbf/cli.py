"""Command line: ``pdfbf validate | solve | templates``.

Exit codes: 0 success, 2 unreadable or schema-invalid input, 3 property
violation, 4 iteration cap reached, 5 divergence.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys

from . import fbf, problemfile, templates
from .errors import ConfigurationError, StepSizeError
from .minimize import solve_minimization, to_problem_spec

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_PROPERTY = 3
EXIT_MAX_ITER = 4
EXIT_DIVERGED = 5

TERMINATION_EXIT = {
    fbf.Termination.ResidualTolerance: EXIT_OK,
    fbf.Termination.MaxIterations: EXIT_MAX_ITER,
    fbf.Termination.Diverged: EXIT_DIVERGED,
}


def fmt(x) -> str:
    """17 significant digits; empty for missing values."""
    if x is None:
        return ""
    return format(float(x), ".17g")


def _json_float(x):
    if x is None:
        return None
    x = float(x)
    return x if math.isfinite(x) else None


def trace_header(m: int) -> str:
    duals = ",".join(f"dual_res_{i}" for i in range(1, m + 1))
    return f"n,gamma,primal_res,{duals},kkt,primal_obj,dual_obj,gap"


def trace_line(row: fbf.IterationRecord) -> str:
    cells = [str(row.n), fmt(row.gamma), fmt(row.primal_residual)]
    cells += [fmt(d) for d in row.dual_residuals]
    cells += [fmt(row.kkt_residual), fmt(row.primal_objective), fmt(row.dual_objective), fmt(row.gap)]
    return ",".join(cells)


def _fail(msg: str, code: int) -> int:
    print(f"error: {msg}", file=sys.stderr)
    return code


def cmd_validate(args) -> int:
    try:
        loaded = problemfile.load(args.path)
    except (problemfile.ProblemFileError, ConfigurationError) as exc:
        return _fail(f"schema: {exc}", EXIT_INPUT)
    results = problemfile.check_properties(loaded.spec, seed=args.seed, samples=args.samples)
    for res in results:
        print(res.describe())
    bad = [r for r in results if not r.ok]
    if bad:
        worst = max(bad, key=lambda r: r.worst - r.limit)
        return _fail(
            f"property {worst.prop} violated at {worst.where}: worst sample {worst.worst:.6e} > {worst.limit:.1e}",
            EXIT_PROPERTY,
        )
    print(f"{loaded.name}: all {len(results)} checks passed")
    return EXIT_OK


def cmd_solve(args) -> int:
    try:
        loaded = problemfile.load(args.path)
    except (problemfile.ProblemFileError, ConfigurationError) as exc:
        return _fail(f"schema: {exc}", EXIT_INPUT)
    opts = loaded.options
    tol = opts.tol if args.tol is None else args.tol
    max_iter = opts.max_iter if args.max_iter is None else args.max_iter
    seed = opts.seed if args.seed is None else args.seed
    inject = opts.inject if args.inject is None else args.inject
    gamma = opts.gamma if args.gamma is None else args.gamma
    if tol < 0 or max_iter < 0 or args.trace_every < 1:
        return _fail("--tol, --max-iter must be nonnegative and --trace-every positive", EXIT_INPUT)

    mspec = loaded.spec
    try:
        problem = to_problem_spec(mspec)
        policy = fbf.StepPolicy.for_spec(problem, gamma, opts.epsilon)
        policy.gamma(0)
    except (ConfigurationError, StepSizeError) as exc:
        return _fail(str(exc), EXIT_INPUT)
    injector = fbf.ErrorInjector.preset(inject, problem, seed)

    trace = open(args.trace, "w", newline="") if args.trace else None
    try:
        if trace:
            trace.write(trace_header(mspec.m) + "\n")

        def on_row(row):
            if trace:
                trace.write(trace_line(row) + "\n")

        result = solve_minimization(
            mspec,
            tol=tol,
            max_iter=max_iter,
            policy=policy,
            injector=injector,
            callback=on_row,
            record_every=args.trace_every,
            track_objectives=trace is not None or not args.no_objectives,
        )
    finally:
        if trace:
            trace.close()

    report = result.report
    obj = result.objectives
    certificate = {
        "termination": report.termination.value,
        "iterations": report.iterations,
        "kkt_residual": _json_float(report.kkt_residual),
        "primal_objective": _json_float(obj.primal_value) if obj else None,
        "dual_objective": _json_float(obj.dual_value) if obj else None,
        "gap": _json_float(obj.gap) if obj else None,
        "beta": policy.beta,
        "gamma": report.gammas[-1] if report.gammas else policy.gamma(0),
        "tol": tol,
        "max_iter": max_iter,
        "inject": inject,
        "seed": seed,
    }
    out = {
        "problem": loaded.name,
        "certificate": certificate,
        "x": [_json_float(t) for t in report.final.x],
        "v": [[_json_float(t) for t in vi] for vi in report.final.v],
    }
    text = json.dumps(out, indent=2) + "\n"
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return TERMINATION_EXIT[report.termination]


def cmd_templates(args) -> int:
    if args.action == "list":
        for name in templates.names():
            doc = templates.get(name)
            print(f"{name:18s} {doc['description']}")
        return EXIT_OK
    if args.name is None:
        return _fail("templates emit needs a template name", EXIT_INPUT)
    try:
        doc = templates.get(args.name)
    except ConfigurationError as exc:
        return _fail(str(exc), EXIT_INPUT)
    text = problemfile.dump(doc)
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pdfbf", description="Primal-dual splitting solver for JSON problem files.")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="schema check and sampled operator properties")
    p.add_argument("path")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--samples", type=int, default=100)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("solve", help="run the solver, write the final state and a certificate")
    p.add_argument("path")
    p.add_argument("--tol", type=float)
    p.add_argument("--max-iter", type=int)
    p.add_argument("--gamma", type=float, help="constant step size (default: largest admissible)")
    p.add_argument("--trace", help="CSV file receiving one row per recorded iteration")
    p.add_argument("--trace-every", type=int, default=1)
    p.add_argument("--seed", type=int, help="seed for error-injection directions")
    p.add_argument("--inject", choices=problemfile.INJECT_PRESETS)
    p.add_argument("--no-objectives", action="store_true", help="skip objective evaluation when not tracing")
    p.add_argument("-o", "--output", help="JSON output file (default: stdout)")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("templates", help="list or emit ready-to-run problem files")
    p.add_argument("action", choices=("list", "emit"))
    p.add_argument("name", nargs="?")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_templates)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, stream=sys.stderr)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
