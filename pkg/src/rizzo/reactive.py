"""Reactive step semantics.

A program is first evaluated in an empty store (the initialisation step).
Each subsequent input event, a value arriving on a channel, triggers a
reactive step: the whole now-heap is designated as earlier, and the
machine sweeps it left to right.  A cell whose stored tail ticks on this
event is advanced and updated in place (keeping its identity); all other
cells are copied over unchanged.  Cell flags record which signals were
updated during the most recent step.
"""

from __future__ import annotations

from dataclasses import dataclass

from .machine import Budget, EvalFault, evaluate
from .store import (
    Environment, Heap, HeapCell, MachineState, StoredSignal, reachable_from,
)
from .syntax import (
    ApE, App, ChanLit, Delay, Inj, Loc, Never, Pair, Sync, Tail, Term,
    term_to_str, Wait, Watch,
)


@dataclass(frozen=True)
class InputEvent:
    """A value arriving on a channel."""

    chan: int
    value: Term


def ticked(now: Heap, event_chan: int, u: Term) -> bool:
    """Does the delayed computation u tick on this step?  Flags in the
    now-heap record which cells have already been updated this step."""
    match u:
        case Never():
            return False
        case ApE(_, w):
            return ticked(now, event_chan, w)
        case Wait(ChanLit(cid)):
            return cid == event_chan
        case Watch(Loc(lid)):
            cell = now.get(lid)
            return (
                cell is not None
                and cell.sig.updated
                and isinstance(cell.sig.head, Inj)
                and cell.sig.head.index == 1
            )
        case Tail(Loc(lid)):
            cell = now.get(lid)
            return cell is not None and cell.sig.updated
        case Sync(a, b):
            return ticked(now, event_chan, a) or ticked(now, event_chan, b)
    raise EvalFault("ticked: not a delayed value", u)


def clock(heap: Heap, u: Term) -> frozenset[tuple[str, int]]:
    """The clock of a delayed value: the channels and watched locations
    whose activity can make it tick.  Locations' stored tails are chased
    through `heap` (the pre-step heap); the left-to-right allocation
    discipline makes this terminate."""
    match u:
        case Never():
            return frozenset()
        case ApE(_, w):
            return clock(heap, w)
        case Wait(ChanLit(cid)):
            return frozenset({("chan", cid)})
        case Watch(Loc(lid)):
            return frozenset({("loc", lid)})
        case Tail(Loc(lid)):
            cell = heap.get(lid)
            if cell is None:
                raise EvalFault(f"clock: dangling location l{lid}", u)
            return clock(heap, cell.sig.tail)
        case Sync(a, b):
            return clock(heap, a) | clock(heap, b)
    raise EvalFault("clock: not a delayed value", u)


def advance(u: Term, event: InputEvent, env: Environment, budget: Budget) -> Term:
    """Advance a ticked delayed computation to its value.  May evaluate
    suspended code, which can allocate fresh cells in the now-heap."""
    match u:
        case ApE(Delay(fn), w):
            wv = advance(w, event, env, budget)
            return evaluate(App(fn, wv), env, budget)
        case Wait(ChanLit(cid)):
            if cid != event.chan:
                raise EvalFault(f"advance: wait k{cid} did not tick", u)
            return event.value
        case Watch(Loc(lid)):
            cell = env.store.now.get(lid)
            if cell is None or not cell.sig.updated:
                raise EvalFault(f"advance: watched location l{lid} did not tick", u)
            head = cell.sig.head
            if not (isinstance(head, Inj) and head.index == 1):
                raise EvalFault(f"advance: watched location l{lid} holds no value", u)
            return head.val
        case Tail(Loc(lid)):
            return Loc(lid)
        case Sync(a, b):
            now = env.store.now
            at = ticked(now, event.chan, a)
            bt = ticked(now, event.chan, b)
            if at and bt:
                av = advance(a, event, env, budget)
                bv = advance(b, event, env, budget)
                return Inj(2, Pair(av, bv))
            if at:
                return Inj(1, Inj(1, advance(a, event, env, budget)))
            if bt:
                return Inj(1, Inj(2, advance(b, event, env, budget)))
            raise EvalFault("advance: sync did not tick", u)
    raise EvalFault(f"advance: cannot advance {term_to_str(u)}", u)


# test hook: when set, the non-ticked update path writes the updated
# flag anyway; used as a negative control for the flag oracle
FAULT_FLIP_STALE_FLAG = False


def update_one(env: Environment, event: InputEvent, budget: Budget,
               observer=None) -> None:
    """Process the leftmost earlier cell: either copy it over unchanged
    (stale flag) or advance its tail and refresh it in place (updated
    flag).  The cell keeps its location either way."""
    earlier = env.store.earlier
    now = env.store.now
    cell = earlier.cells[0]
    did_tick = ticked(now, event.chan, cell.sig.tail)
    if observer is not None:
        observer(cell, did_tick, env)
    if not did_tick:
        earlier.pop_leftmost()
        now.append(HeapCell(cell.loc, cell.ann, StoredSignal(
            cell.sig.head, cell.sig.tail, updated=FAULT_FLIP_STALE_FLAG)))
        return
    # advance with the cell still at the head of the earlier heap, so
    # suspended code cannot read the cell's own stale content
    succ = advance(cell.sig.tail, event, env, budget)
    if not isinstance(succ, Loc):
        raise EvalFault("update: advanced tail is not a signal", succ)
    earlier.pop_leftmost()
    fresh = now.get(succ.id)
    if fresh is None:
        raise EvalFault(f"update: advanced tail points at missing cell l{succ.id}")
    now.append(HeapCell(cell.loc, cell.ann, StoredSignal(
        fresh.sig.head, fresh.sig.tail, updated=True)))


def reactive_step(env: Environment, event: InputEvent, budget: Budget,
                  observer=None, root: Term | None = None) -> None:
    """One input event: designate the whole heap as earlier and sweep it
    left to right until drained.  The optional observer is called with
    (cell, did_tick, env) at each update decision.

    When the result value is supplied as `root`, cells that became
    unreachable are dropped after the sweep.  The semantics itself never
    deallocates, but unreachable cells can never be dereferenced again,
    so collecting them is unobservable; without collection, dead signal
    chains keep being updated and the heap grows without bound."""
    env.store.earlier = env.store.now
    env.store.now = Heap()
    env.step_flag = True
    try:
        while len(env.store.earlier) > 0:
            update_one(env, event, budget, observer)
    finally:
        env.step_flag = False
    if root is not None:
        collect_garbage(env, root)


def collect_garbage(env: Environment, root: Term) -> None:
    """Drop now-heap cells unreachable from the root value."""
    live = reachable_from(root, env.store.now)
    for loc in list(env.store.now.locations()):
        if loc not in live:
            env.store.now.remove(loc)


def init_program(term: Term, env: Environment, budget: Budget) -> Term:
    """Initialisation step: evaluate the program in the given (normally
    empty) environment; returns the result value."""
    return evaluate(term, env, budget)


def machine_state(result: Term, env: Environment) -> MachineState:
    """Snapshot of the machine between steps (earlier heap is empty)."""
    return MachineState(
        result=result,
        heap=env.store.now.copy(),
        channels=env.channels.copy(),
        next_loc=env.next_loc,
        next_chan=env.next_chan,
    )
