"""Command-line front end.

Exit codes: 0 ok, 1 usage or validation error, 2 I/O error, 3 solver failure.
A scenario argument is a file path or ``builtin:<name>`` for a bundled file.
"""

from __future__ import annotations

import argparse
import contextlib
import sys
from pathlib import Path
from typing import Iterator, Sequence, TextIO

from . import csvio
from .bench import REFERENCE_CONFIG, benchmark_discrete, convergence_study
from .logic import simulate_scenario
from .reference import CtSolverConfig, SolverError, simulate_ct
from .scenario import Scenario, ScenarioError, bundled_scenario_path, parse_scenario

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_IO = 2
EXIT_SOLVER = 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        raise UsageError(message)


def _read_scenario(arg: str) -> Scenario:
    if arg.startswith("builtin:"):
        path = bundled_scenario_path(arg.removeprefix("builtin:"))
    else:
        path = Path(arg)
    return parse_scenario(path.read_text(encoding="utf-8"))


@contextlib.contextmanager
def _output(path: str | None) -> Iterator[TextIO]:
    if path is None or path == "-":
        yield sys.stdout
        return
    with open(path, "w", encoding="utf-8", newline="") as fp:
        yield fp


def _ts_list(text: str) -> list[float]:
    items = [s for s in text.split(",") if s.strip()]
    if not items:
        raise UsageError("--ts needs at least one step size")
    try:
        values = [float(s) for s in items]
    except ValueError:
        raise UsageError(f"bad step size list {text!r}") from None
    if any(not v > 0.0 for v in values):
        raise UsageError("step sizes must be > 0")
    return values


def cmd_run(args) -> int:
    scn = _read_scenario(args.scenario)
    trace = simulate_scenario(scn, args.ts)
    with _output(args.output) as fp:
        csvio.write_discrete_trace(fp, trace)
    return EXIT_OK


def cmd_ref(args) -> int:
    scn = _read_scenario(args.scenario)
    cfg = CtSolverConfig(
        rel_tol=args.rel_tol, abs_tol=args.abs_tol, max_step=args.max_step, event_tol=args.event_tol
    )
    trace = simulate_ct(scn.params, scn, scn.w0, scn.t_end, cfg)
    with _output(args.output) as fp:
        csvio.write_ct_trace(fp, scn.params, trace)
    return EXIT_OK


def cmd_compare(args) -> int:
    ts_list = _ts_list(args.ts)
    scn = _read_scenario(args.scenario)
    study = convergence_study(scn, ts_list, REFERENCE_CONFIG)
    with _output(args.output) as fp:
        csvio.write_convergence(fp, study.rows)
    return EXIT_OK


def cmd_bench(args) -> int:
    if args.executions < 1:
        raise UsageError("--executions must be >= 1")
    scn = _read_scenario(args.scenario)
    stats, _ = benchmark_discrete(scn, args.executions, args.ts)
    print(stats.summary())
    if args.output is not None:
        with _output(args.output) as fp:
            csvio.write_timing(fp, stats)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="powershift", description="Two-clutch powershift transmission simulator.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("run", help="fixed-step discrete simulation -> CSV trace")
    p.add_argument("scenario")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--ts", type=float, default=None, help="override the scenario step size (s)")
    p.set_defaults(func=cmd_run)

    d = CtSolverConfig()
    p = sub.add_parser("ref", help="continuous-time reference run -> CSV of accepted steps")
    p.add_argument("scenario")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--rel-tol", type=float, default=d.rel_tol)
    p.add_argument("--abs-tol", type=float, default=d.abs_tol)
    p.add_argument("--max-step", type=float, default=d.max_step)
    p.add_argument("--event-tol", type=float, default=d.event_tol)
    p.set_defaults(func=cmd_ref)

    p = sub.add_parser("compare", help="step-size sweep against the reference -> CSV")
    p.add_argument("scenario")
    p.add_argument("--ts", required=True, help="comma-separated step sizes (s)")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("bench", help="per-step execution time statistics")
    p.add_argument("scenario")
    p.add_argument("--executions", type=int, default=20)
    p.add_argument("--ts", type=float, default=None, help="override the scenario step size (s)")
    p.add_argument("-o", "--output", default=None)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"powershift: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SolverError as exc:
        print(f"powershift: solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (ScenarioError, ValueError) as exc:
        print(f"powershift: invalid input: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"powershift: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
