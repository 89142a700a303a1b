"""Command line driver.

    rizzo check <prog.rzo>                 typecheck every definition
    rizzo run <prog.rzo> --trace <file>    run a trace, print snapshots
    rizzo corpus                           run the bundled test suites

Exit codes: 0 success, 2 parse error, 3 type error, 4 trace error,
5 oracle failure, 6 internal fault.
"""

from __future__ import annotations

import argparse
import sys

from .frontend.lexer import ParseError
from .frontend.desugar import DesugarError
from .frontend.trace import parse_trace
from .machine import BudgetExceeded, DEFAULT_BUDGET, EvalFault
from .oracles import OracleFailure
from .runner import (
    TraceError, check_all_definitions, load_program, prepare_trace, run_trace,
)
from .stdlib import corpus, _corpus_dir
from .store import snapshot_json, snapshot_text
from .syntax import type_to_str
from .typecheck import TypeCheckError

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_TYPE = 3
EXIT_TRACE = 4
EXIT_ORACLE = 5
EXIT_FAULT = 6


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="rizzo",
        description="Reactive signal-language interpreter and typechecker.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a program over an event trace")
    p_run.add_argument("program")
    p_run.add_argument("--trace", required=True,
                       help="trace file of channel declarations and events")
    p_run.add_argument("--check-preservation", action="store_true",
                       help="typecheck the result and both heaps after "
                            "every step")
    p_run.add_argument("--check-determinism", action="store_true",
                       help="replay the run and require byte-equal snapshots")
    p_run.add_argument("--hide-unreachable", action="store_true",
                       help="omit heap cells unreachable from the result")
    p_run.add_argument("--snapshot-format", choices=("text", "json"),
                       default="text")
    p_run.add_argument("--budget", type=int, default=DEFAULT_BUDGET,
                       help="total evaluation step budget")
    p_run.add_argument("--entry", default="main",
                       help="definition to run (default: main)")

    p_check = sub.add_parser("check", help="typecheck a program")
    p_check.add_argument("program")

    sub.add_parser("corpus", help="typecheck and run the bundled corpus")

    args = parser.parse_args(argv)
    try:
        if args.command == "check":
            return cmd_check(args)
        if args.command == "run":
            return cmd_run(args)
        return cmd_corpus(args)
    except ParseError as e:
        print(f"parse error: {e}", file=sys.stderr)
        return EXIT_PARSE
    except (TypeCheckError, DesugarError) as e:
        print(f"type error: {e}", file=sys.stderr)
        return EXIT_TYPE
    except TraceError as e:
        print(f"trace error: {e}", file=sys.stderr)
        return EXIT_TRACE
    except OracleFailure as e:
        print(f"oracle failure: {e}", file=sys.stderr)
        return EXIT_ORACLE
    except (EvalFault, BudgetExceeded, OSError) as e:
        print(f"fault: {e}", file=sys.stderr)
        return EXIT_FAULT


def cmd_check(args) -> int:
    with open(args.program) as f:
        source = f.read()
    for name, ty in check_all_definitions(source):
        print(f"{name} : {type_to_str(ty)}")
    return EXIT_OK


def _render(state, fmt: str, hide: bool) -> str:
    if fmt == "json":
        return snapshot_json(state, hide_unreachable=hide, rename=False)
    return snapshot_text(state, hide_unreachable=hide, rename=False)


def cmd_run(args) -> int:
    with open(args.program) as f:
        source = f.read()
    with open(args.trace) as f:
        trace = parse_trace(f.read())
    loaded = load_program(source, entry=args.entry)
    events, chan_ctx = prepare_trace(loaded, trace)
    result = run_trace(loaded, events, chan_ctx, budget_limit=args.budget,
                       check_pres=args.check_preservation)
    if args.check_determinism:
        replay = run_trace(loaded, events, chan_ctx, budget_limit=args.budget,
                           check_pres=False)
        for i, (a, b) in enumerate(zip(result.states, replay.states)):
            sa = _render(a, args.snapshot_format, args.hide_unreachable)
            sb = _render(b, args.snapshot_format, args.hide_unreachable)
            if sa != sb:
                raise OracleFailure("determinism",
                                    f"replay diverged:\n{sa}\nvs\n{sb}", i)
    for i, state in enumerate(result.states):
        label = "init" if i == 0 else f"step {i}"
        print(f"-- {label} --")
        print(_render(state, args.snapshot_format, args.hide_unreachable))
    return EXIT_OK


def cmd_corpus(args) -> int:
    failures = 0
    for entry in corpus():
        try:
            check_all_definitions(entry.source)
            accepted = True
            diag = ""
        except (TypeCheckError, DesugarError) as e:
            accepted = False
            diag = str(e)
        if accepted != (entry.expect == "accept"):
            print(f"FAIL {entry.name}: expected {entry.expect}")
            failures += 1
            continue
        note = "accepted" if accepted else f"rejected ({diag.split(';')[0]})"
        print(f"ok   {entry.name}: {note}")
        if entry.entry is None or not accepted:
            continue
        trace_file = _corpus_dir() / f"{entry.name}.trace"
        if not trace_file.is_file():
            continue
        try:
            loaded = load_program(entry.source, entry=entry.entry)
            trace = parse_trace(trace_file.read_text())
            events, chan_ctx = prepare_trace(loaded, trace)
            first = run_trace(loaded, events, chan_ctx, check_pres=True,
                              check_agreement=True, check_flags=True)
            second = run_trace(loaded, events, chan_ctx)
            for a, b in zip(first.states, second.states):
                if snapshot_text(a) != snapshot_text(b):
                    raise OracleFailure("determinism", "replay diverged")
            print(f"ok   {entry.name}: ran {len(events)} events, "
                  f"oracles passed")
        except (OracleFailure, EvalFault, BudgetExceeded, TraceError) as e:
            print(f"FAIL {entry.name}: {e}")
            failures += 1
    if failures:
        print(f"{failures} failure(s)")
        return EXIT_ORACLE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
