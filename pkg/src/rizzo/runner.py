"""Program loading and trace execution.

Glue shared by the command line driver and the test suite: parse and
elaborate a source program, reconcile its channel declarations with a
trace file, run the reactive machine over the events, and optionally
apply the metatheory oracles at every step.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .frontend.desugar import CoreProgram, desugar_program
from .frontend.parser import parse_program
from .frontend.trace import TraceFile
from .machine import Budget, DEFAULT_BUDGET, evaluate
from .oracles import (
    AgreementObserver, FlagObserver, check_preservation, check_step_integrity,
)
from .reactive import InputEvent, reactive_step
from .store import ChannelContext, Environment, MachineState
from .syntax import Term, Type, term_to_str
from .typecheck import (
    Checker, HeapContext, TypeCheckError, TypingContext, synthesize,
)


class TraceError(Exception):
    pass


@dataclass
class Loaded:
    program: CoreProgram
    main_term: Term
    main_type: Type


def load_program(source: str, entry: str = "main") -> Loaded:
    """Parse, desugar, and typecheck a program; the entry definition is
    closed over the other definitions it uses."""
    prog = desugar_program(parse_program(source))
    core = prog.lookup_def(entry)
    if core is None:
        raise TraceError(f"program has no definition named {entry!r}")
    term = prog.term_for(entry)
    chan_ctx = ChannelContext({cid: ty for cid, _, ty in prog.channels})
    if core.signature is not None:
        checker = Checker(HeapContext.empty(), chan_ctx)
        elaborated = checker.check(TypingContext.empty(), term, core.signature)
        ty = core.signature
    else:
        ty, elaborated = synthesize(TypingContext.empty(), HeapContext.empty(),
                                    chan_ctx, term)
    return Loaded(prog, elaborated, ty)


def check_all_definitions(source: str) -> list[tuple[str, Type]]:
    """Typecheck every definition of a program in order; used by the
    `check` command."""
    prog = desugar_program(parse_program(source))
    chan_ctx = ChannelContext({cid: ty for cid, _, ty in prog.channels})
    results = []
    for core in prog.defs:
        term = prog.term_for(core.name)
        if core.signature is not None:
            checker = Checker(HeapContext.empty(), chan_ctx)
            checker.check(TypingContext.empty(), term, core.signature)
            results.append((core.name, core.signature))
        else:
            ty, _ = synthesize(TypingContext.empty(), HeapContext.empty(),
                               chan_ctx, term)
            results.append((core.name, ty))
    return results


def prepare_trace(loaded: Loaded,
                  trace: TraceFile) -> tuple[list[InputEvent], ChannelContext]:
    """Reconcile trace channel declarations with the program's and
    translate named events into channel-id events.

    A trace channel sharing a name with a program channel must agree on
    its type; other trace channels get fresh ids after the program's.
    Returns the events and the combined channel context."""
    from .typecheck import type_equal

    by_name: dict[str, tuple[int, Type]] = {
        name: (cid, ty) for cid, name, ty in loaded.program.channels
    }
    next_id = 1 + max((cid for cid, _, _ in loaded.program.channels), default=0)
    for name, ty in trace.channels:
        if name in by_name:
            _, declared = by_name[name]
            if not type_equal(ty, declared):
                raise TraceError(
                    f"channel {name!r} declared with conflicting types")
        else:
            by_name[name] = (next_id, ty)
            next_id += 1
    events = []
    for name, value in trace.events:
        if name not in by_name:
            raise TraceError(f"event on undeclared channel {name!r}")
        cid, ty = by_name[name]
        checker = Checker(HeapContext.empty(), ChannelContext({}))
        try:
            checker.check(TypingContext.empty(), value, ty)
        except TypeCheckError as e:
            raise TraceError(
                f"event value {term_to_str(value)} does not have the "
                f"declared type of channel {name!r}") from e
        events.append(InputEvent(cid, value))
    chan_ctx = ChannelContext({cid: ty for cid, ty in by_name.values()})
    return events, chan_ctx


@dataclass
class RunResult:
    states: list[MachineState]
    budget_used: int
    oracle_failures: list[str] = field(default_factory=list)


def run_trace(loaded: Loaded, events: list[InputEvent],
              chan_ctx: ChannelContext,
              budget_limit: int = DEFAULT_BUDGET,
              check_pres: bool = False,
              check_agreement: bool = False,
              check_flags: bool = False) -> RunResult:
    """Initialize the program and run one reactive step per event,
    returning the machine state after initialization and after each
    step.  Oracle failures raise OracleFailure."""
    env = Environment(channels=chan_ctx.copy())
    env.next_chan = 1 + max(chan_ctx.entries, default=0)
    budget = Budget(budget_limit)
    result = evaluate(loaded.main_term, env, budget)
    states = [MachineState(result, env.store.now.copy(), env.channels.copy(),
                           env.next_loc, env.next_chan)]
    if check_pres:
        check_preservation(result, env, loaded.main_type, step=0)
    for i, event in enumerate(events, start=1):
        observers = []
        if check_agreement:
            observers.append(AgreementObserver(env.store.now.copy(), event, i))
        flag_obs = FlagObserver()
        if check_flags:
            observers.append(flag_obs)

        def observer(cell, did_tick, env, _obs=tuple(observers)):
            for o in _obs:
                o(cell, did_tick, env)

        reactive_step(env, event, budget,
                      observer=observer if observers else None, root=result)
        states.append(MachineState(result, env.store.now.copy(),
                                   env.channels.copy(),
                                   env.next_loc, env.next_chan))
        if check_flags:
            check_step_integrity(result, env, flag_obs, i)
        if check_pres:
            check_preservation(result, env, loaded.main_type, step=i)
    return RunResult(states, budget_limit - budget.remaining)
