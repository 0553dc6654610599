"""Command-line entry point: ``pep run | check | parse``.

Exit codes: 0 terminated / clean / parsed, 1 parse or usage error,
2 step cap reached, 3 deadlock found.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from typing import Optional, Sequence

from .engine import DEADLOCKED, STEP_CAP, TERMINATED, boot, explore, make_policy, run, snapshot
from .frontend import PepError, dump_program, parse_program
from .trace import export_msc, export_trace

EXIT_OK, EXIT_ERROR, EXIT_CAP, EXIT_DEADLOCK = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="pep", description="Run and check PEP programs.")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    r = sub.add_parser("run", help="execute a program under a scheduling policy")
    r.add_argument("file")
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--policy", choices=("seeded", "roundrobin"), default="seeded")
    r.add_argument("--max-steps", type=int, default=1_000_000)
    r.add_argument("--trace", metavar="PATH", help="write JSON-lines trace")
    r.add_argument("--msc", metavar="PATH", help="write Mermaid sequence diagram")
    r.add_argument("--verbose", action="store_true", help="include queue/table steps in the MSC")

    c = sub.add_parser("check", help="explore all interleavings up to a depth")
    c.add_argument("file")
    c.add_argument("--depth", type=int, required=True)
    c.add_argument("--report", metavar="PATH", help="write JSON report")
    c.add_argument("--max-states", type=int, default=None)
    c.add_argument("--unsafe-handlers", action="store_true",
                   help="test only: drop halt' while event handlers hold an event")
    c.add_argument("--full", action="store_true",
                   help="follow every enabled step (no partial-order reduction)")

    p = sub.add_parser("parse", help="parse and compile a program")
    p.add_argument("file")
    p.add_argument("--dump-ast", action="store_true")
    return ap


def _load(path: str):
    with open(path, encoding="utf-8") as fh:
        return parse_program(fh.read())


def _cmd_run(args) -> int:
    if args.max_steps < 1:
        print("pep: --max-steps must be at least 1", file=sys.stderr)
        return EXIT_ERROR
    program = _load(args.file)
    policy = make_policy(args.policy, args.seed)
    started = time.perf_counter()
    outcome = run(program, policy, args.max_steps)
    elapsed = time.perf_counter() - started
    header = {"program": args.file, "entry": program.entry, "policy": args.policy,
              "seed": args.seed if args.policy == "seeded" else None,
              "max_steps": args.max_steps}
    footer = {"status": outcome.status, "steps": outcome.steps}
    if outcome.status != TERMINATED:
        footer["snapshot"] = snapshot(outcome.state)
    if args.trace:
        with open(args.trace, "w", encoding="utf-8", newline="\n") as fh:
            export_trace(outcome.trace, fh, header, footer)
    if args.msc:
        with open(args.msc, "w", encoding="utf-8", newline="\n") as fh:
            export_msc(outcome.trace, fh, args.verbose)
    print(f"{outcome.status} after {outcome.steps} steps ({elapsed:.2f}s)")
    return {TERMINATED: EXIT_OK, STEP_CAP: EXIT_CAP, DEADLOCKED: EXIT_DEADLOCK}[outcome.status]


def _cmd_check(args) -> int:
    if args.depth < 1:
        print("pep: --depth must be at least 1", file=sys.stderr)
        return EXIT_ERROR
    program = _load(args.file)
    s0, world = boot(program, failsafe=not args.unsafe_handlers)
    report = explore(s0, world, args.depth, max_states=args.max_states,
                     reduce=not args.full)
    doc = {
        "program": args.file,
        "depth": args.depth,
        "states": report.state_count,
        "terminated_states": report.terminated_count,
        "truncated": report.truncated,
        "deadlocks": [
            {"witness": [str(l) for l in d.witness], "stuck": d.stuck,
             "snapshot": snapshot(d.state)}
            for d in report.deadlocks
        ],
    }
    if args.report:
        with open(args.report, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)
            fh.write("\n")
    trunc = " (truncated)" if report.truncated else ""
    print(f"{report.state_count} states, {len(report.deadlocks)} deadlocks{trunc}")
    return EXIT_DEADLOCK if report.deadlocks else EXIT_OK


def _cmd_parse(args) -> int:
    program = _load(args.file)
    if args.dump_ast:
        sys.stdout.write(dump_program(program))
    else:
        print(f"ok: {len(program.machines)} machines, entry {program.entry}")
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    handler = {"run": _cmd_run, "check": _cmd_check, "parse": _cmd_parse}[args.command]
    try:
        return handler(args)
    except PepError as err:
        print(f"{args.file}:{err}", file=sys.stderr)
        return EXIT_ERROR
    except OSError as err:
        print(f"pep: {err}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
