"""Command-line front end.

Exit codes:
    0  clean run
    2  usage error (bad arguments, unknown scenario or suite)
    3  scenario file parse error
    4  scenario invariant violation
    5  QP infeasible at one or more control steps
    6  instability flagged
    1  acceptance check failed
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path

from . import acceptance, scenarios
from .io import ScenarioParseError, dump_metrics, load_scenario, write_log_csv
from .plant import PlantBlowUp
from .sim import Scenario, ScenarioError, run_scenario, scenario_metrics, validate

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2
EXIT_PARSE = 3
EXIT_INVARIANT = 4
EXIT_INFEASIBLE = 5
EXIT_UNSTABLE = 6


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _execute(s: Scenario, out: Path) -> int:
    try:
        validate(s)
    except ScenarioError as exc:
        print(f"invalid scenario: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    try:
        log = run_scenario(s)
    except PlantBlowUp as exc:  # pragma: no cover - the engine catches blow-ups itself
        print(str(exc), file=sys.stderr)
        return EXIT_UNSTABLE
    metrics = scenario_metrics(s, log)
    out.mkdir(parents=True, exist_ok=True)
    write_log_csv(log, out / f"{s.name}.csv")
    extra = {"scenario": s.name, "steps": len(log), "blowup_time": log.blowup_time}
    (out / f"{s.name}.metrics.yaml").write_text(dump_metrics(metrics, extra))
    print(f"{s.name}: {len(log)} steps written to {out}")
    if log.infeasible_steps:
        print(f"QP infeasible at step(s) {list(log.infeasible_steps[:10])}", file=sys.stderr)
        return EXIT_INFEASIBLE
    if metrics.instability_flag:
        where = f" (blow-up at t={log.blowup_time:.3f} s)" if log.blowup else ""
        print(f"instability flagged: oscillation index {metrics.oscillation_index:.3f}{where}", file=sys.stderr)
        return EXIT_UNSTABLE
    return EXIT_OK


def _cmd_run(args) -> int:
    try:
        s = load_scenario(args.file)
    except ScenarioParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    changes = {}
    if args.dt is not None:
        changes["dt"] = args.dt
    if args.t_end is not None:
        changes["t_end"] = args.t_end
    if changes:
        s = dataclasses.replace(s, **changes)
    return _execute(s, Path(args.out))


def _cmd_builtin(args) -> int:
    try:
        s = scenarios.builtin(args.name)
    except KeyError as exc:
        print(exc.args[0], file=sys.stderr)
        return EXIT_USAGE
    return _execute(s, Path(args.out))


def _cmd_list(args) -> int:
    for name, desc in scenarios.list_builtin():
        print(f"{name:26s} {desc}")
    return EXIT_OK


def _cmd_check(args) -> int:
    if args.suite not in acceptance.SUITES:
        print(f"unknown suite {args.suite!r}; choose from {', '.join(acceptance.SUITES)}", file=sys.stderr)
        return EXIT_USAGE
    results = acceptance.run_suite(args.suite, echo=print)
    passed = sum(r.passed for r in results)
    print(f"{passed}/{len(results)} criteria passed")
    return EXIT_OK if passed == len(results) else EXIT_CHECK_FAILED


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="robustqp", description="Robust task-space QP control simulations.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("run", help="run a scenario file")
    p.add_argument("file")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--dt", type=float, help="override the control period [s]")
    p.add_argument("--t-end", type=float, help="override the horizon [s]")
    p.add_argument("--seed", type=int, help="accepted for compatibility; runs are deterministic")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("builtin", help="run a built-in scenario")
    p.add_argument("name")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=_cmd_builtin)

    p = sub.add_parser("list", help="list built-in scenarios")
    p.set_defaults(func=_cmd_list)

    p = sub.add_parser("check", help="run an acceptance suite")
    p.add_argument("suite", help=", ".join(acceptance.SUITES))
    p.set_defaults(func=_cmd_check)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
