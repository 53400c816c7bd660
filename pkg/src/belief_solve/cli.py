"""``belief-solve`` command line.

Single run::

    belief-solve --problem general --J 6 --solver gabp --out hist.csv
    belief-solve --problem mixed --param eps=0.01 --solver mg --smoother 4c-gabp \\
        --cycle V:6,6 --pre 0 --post 4

Benchmark table::

    belief-solve --suite stretched --out stretched.csv

Exit status: 0 converged, 2 diverged, 3 iteration cap reached, 1 invalid
input.  ``BELIEF_SOLVE_THREADS`` caps the worker processes of a suite.
"""

from __future__ import annotations

import argparse
import os
import sys

from .bench import SOLVERS, RunSpec, exit_code, history_csv, run_spec, summary_line
from .multigrid import PERSIST_SCOPES, SMOOTHER_NAMES
from .ordering import KINDS as SCHEDULES
from .problems import PROBLEM_NAMES


class UsageError(ValueError):
    pass


def _param(text: str):
    key, sep, value = text.partition("=")
    if not sep or not key:
        raise argparse.ArgumentTypeError(f"expected k=v, got {text!r}")
    try:
        return key, float(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"parameter {key!r} needs a number, got {value!r}") from None


def _cycle(text: str):
    kind, _, rest = text.partition(":")
    try:
        if kind.upper() != "V":
            raise ValueError
        j1, j2 = (int(t) for t in rest.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected V:J1,J2, got {text!r}") from None
    return j1, j2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="belief-solve", description="GaBP, multigrid and baseline solver benchmarks")
    p.add_argument("--problem", choices=PROBLEM_NAMES)
    p.add_argument("--param", type=_param, action="append", default=[], metavar="K=V",
                   help="problem parameter (repeatable)")
    p.add_argument("--J", type=int, default=6, help="grid has 2^J + 1 points per axis")
    p.add_argument("--solver", choices=SOLVERS, default="gabp")
    p.add_argument("--schedule", default="sequential-lexicographic",
                   help=f"GaBP schedule: {', '.join(SCHEDULES)}")
    p.add_argument("--tol", type=float, default=2e-4)
    p.add_argument("--max-iter", type=int, default=10_000)
    p.add_argument("--cycle", type=_cycle, help="V:J1,J2 (mg solver)")
    p.add_argument("--pre", type=int, default=1)
    p.add_argument("--post", type=int, default=1)
    p.add_argument("--smoother", choices=SMOOTHER_NAMES, default="gabp")
    p.add_argument("--persist", choices=PERSIST_SCOPES, default="call",
                   help="lifetime of GaBP smoother messages")
    p.add_argument("--sweeps", type=int, default=3, help="sweeps per error-correction step (ec-gabp)")
    p.add_argument("--out", help="CSV output path")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--suite", help="run a benchmark table instead of a single solve")
    p.add_argument("--markdown", help="markdown table path (suite mode)")
    return p


def _run_suite(args) -> int:
    from .suites import SUITE_NAMES, histories_csv, run_suite, to_csv, to_markdown

    if args.suite not in SUITE_NAMES:
        raise UsageError(f"unknown suite {args.suite!r}; expected one of {SUITE_NAMES}")
    results = run_suite(args.suite)
    table = to_markdown(results)
    sys.stdout.write(table)
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write(to_csv(results))
        root, ext = os.path.splitext(args.out)
        with open(f"{root}_histories{ext or '.csv'}", "w", newline="") as fh:
            fh.write(histories_csv(results))
    if args.markdown:
        with open(args.markdown, "w") as fh:
            fh.write(table)
    return 0


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if os.environ.get("BELIEF_SOLVE_THREADS") is not None:
            raw = os.environ["BELIEF_SOLVE_THREADS"]
            if not raw.isdigit() or int(raw) < 1:
                raise UsageError("BELIEF_SOLVE_THREADS must be a positive integer")
        if args.suite:
            return _run_suite(args)
        if args.problem is None:
            raise UsageError("--problem is required unless --suite is given")
        spec = RunSpec(args.problem, J=args.J, solver=args.solver,
                       params=dict(args.param) if args.param else None, schedule=args.schedule,
                       tol=args.tol, max_iter=args.max_iter, cycle=args.cycle, pre=args.pre,
                       post=args.post, smoother=args.smoother, sweeps=args.sweeps, seed=args.seed,
                       persist=args.persist)
        if spec.solver in ("gabp", "ec-gabp") and spec.schedule not in SCHEDULES:
            raise UsageError(f"unknown schedule {spec.schedule!r}")
        report = run_spec(spec)
    except (UsageError, ValueError, KeyError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"belief-solve: error: {msg}", file=sys.stderr)
        return 1
    print(summary_line(spec, report))
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write(history_csv(report))
    return exit_code(report)


if __name__ == "__main__":
    sys.exit(main())
