"""Metatheory oracles.

Each oracle independently checks one guarantee of the calculus against a
concrete run: type preservation across steps, agreement between the
tick test and the clock of a delayed value, flag/no-leak discipline of
the update sweep, determinism, and causality.  They are deliberately
implemented against the declarative definitions, not the machine's own
code paths, so a machine bug shows up as an oracle failure.
"""

from __future__ import annotations

from .reactive import InputEvent, clock
from .store import Environment, Heap, MachineState, reachable_locations
from .syntax import Inj, Term, Type
from .typecheck import (
    TypeCheckError, TypingContext, check_heap_earlier, check_heap_now,
    heaptype, Checker,
)


class OracleFailure(Exception):
    def __init__(self, oracle: str, message: str, step: int | None = None):
        self.oracle = oracle
        self.step = step
        prefix = f"[{oracle}]" if step is None else f"[{oracle}] step {step}"
        super().__init__(f"{prefix}: {message}")


def check_preservation(result: Term, env: Environment, result_type: Type,
                       step: int | None = None) -> None:
    """Extended typing of the result value under the current heap
    typings, plus well-typedness of both heap zones."""
    try:
        check_heap_now(env.channels, env.store.now)
        check_heap_earlier(heaptype(env.store.now), env.channels,
                           env.store.earlier)
        heap_ctx = heaptype(env.store.now)
        for cell in env.store.earlier:
            heap_ctx = heap_ctx.extended(cell.loc, cell.ann)
        checker = Checker(heap_ctx, env.channels)
        checker.check(TypingContext.empty(), result, result_type)
    except TypeCheckError as e:
        raise OracleFailure("preservation", str(e), step) from e


class AgreementObserver:
    """Checks, at every update decision, that the operational tick test
    agrees with the declarative clock: a delayed value ticks iff the
    event's channel is in its clock, or some watched location in its
    clock now holds an updated value of the form in1 v."""

    def __init__(self, pre_heap: Heap, event: InputEvent, step: int):
        self.pre_heap = pre_heap
        self.event = event
        self.step = step

    def __call__(self, cell, did_tick: bool, env: Environment) -> None:
        cl = clock(self.pre_heap, cell.sig.tail)
        now = env.store.now
        expected = ("chan", self.event.chan) in cl
        if not expected:
            for kind, lid in cl:
                if kind != "loc":
                    continue
                c = now.get(lid)
                if (c is not None and c.sig.updated
                        and isinstance(c.sig.head, Inj) and c.sig.head.index == 1):
                    expected = True
                    break
        if expected != did_tick:
            raise OracleFailure(
                "tick-clock-agreement",
                f"cell l{cell.loc}: ticked={did_tick} but clock "
                f"{sorted(cl)} says {expected}",
                self.step,
            )


class FlagObserver:
    """Records each sweep decision so the flags written into the new
    heap can be audited after the step."""

    def __init__(self) -> None:
        self.decisions: dict[int, bool] = {}

    def __call__(self, cell, did_tick: bool, env: Environment) -> None:
        self.decisions[cell.loc] = did_tick


def check_step_integrity(result: Term, env: Environment,
                         flags: FlagObserver, step: int) -> None:
    """Post-step structural checks: the earlier heap is drained, every
    reachable cell was written during this step, and each swept cell's
    flag records exactly whether it ticked (fresh cells carry the
    updated flag)."""
    if len(env.store.earlier) != 0:
        raise OracleFailure("no-leak", "earlier heap not drained", step)
    state = MachineState(result, env.store.now, env.channels,
                         env.next_loc, env.next_chan)
    swept = set(flags.decisions)
    present = set(env.store.now.locations())
    for lid in reachable_locations(state):
        if lid not in present:
            raise OracleFailure("no-leak", f"dangling reachable location l{lid}", step)
    for cell in env.store.now:
        if cell.loc in swept:
            want = flags.decisions[cell.loc]
        else:
            want = True  # allocated during this step
        if cell.sig.updated != want:
            raise OracleFailure(
                "no-leak",
                f"cell l{cell.loc} has flag {cell.sig.updated}, expected {want}",
                step,
            )


def states_equal(a: MachineState, b: MachineState) -> bool:
    return a == b
