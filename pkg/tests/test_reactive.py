"""Reactive step unit tests: tick decisions, clocks, advancing delayed
values, and the flag oracle's fault-injection negative control."""

import random

import pytest

import rizzo.reactive as reactive
from rizzo.machine import Budget
from rizzo.oracles import OracleFailure
from rizzo.reactive import InputEvent, clock, reactive_step, ticked
from rizzo.runner import run_trace
from rizzo.store import (
    ChannelContext, Environment, Heap, HeapCell, StoredSignal,
)
from rizzo.syntax import (
    INT, Inj, Lit, Loc, Never, Sync, TSig, Tail, Unit, Wait, Watch,
)

from conftest import load_corpus_program, random_events


def make_cell(loc, tail, updated=False, head=None):
    return HeapCell(loc, INT, StoredSignal(head or Lit("Int", 0), tail,
                                           updated=updated))


def test_ticked_wait_matches_channel():
    from rizzo.syntax import ChanLit
    now = Heap()
    assert ticked(now, 1, Wait(ChanLit(1)))
    assert not ticked(now, 2, Wait(ChanLit(1)))
    assert not ticked(now, 1, Never(TSig(INT)))


def test_ticked_watch_needs_updated_in1_head():
    from rizzo.syntax import ChanLit
    now = Heap()
    now.append(make_cell(1, Never(TSig(INT)), updated=True,
                         head=Inj(1, Lit("Int", 3))))
    assert ticked(now, 1, Watch(Loc(1)))
    stale = Heap()
    stale.append(make_cell(1, Never(TSig(INT)), updated=False,
                           head=Inj(1, Lit("Int", 3))))
    assert not ticked(stale, 1, Watch(Loc(1)))
    nothing = Heap()
    nothing.append(make_cell(1, Never(TSig(INT)), updated=True,
                             head=Inj(2, Unit())))
    assert not ticked(nothing, 1, Watch(Loc(1)))


def test_clock_of_delayed_values():
    heap = Heap()
    heap.append(make_cell(1, Never(TSig(INT))))
    assert clock(heap, Never(TSig(INT))) == frozenset()
    assert clock(heap, Tail(Loc(1))) == clock(heap, heap.get(1).sig.tail)
    assert ("loc", 1) in clock(heap, Watch(Loc(1)))
    joint = clock(heap, Sync(Watch(Loc(1)), Never(INT)))
    assert ("loc", 1) in joint


def test_nonticked_cells_copied_stale():
    env = Environment(channels=ChannelContext({1: INT}))
    env.store.now.append(make_cell(1, Never(TSig(INT)), updated=True))
    reactive_step(env, InputEvent(1, Lit("Int", 9)), Budget(1000))
    cell = env.store.now.get(1)
    assert cell.sig.updated is False
    assert len(env.store.earlier) == 0


def test_fault_injection_trips_flag_oracle():
    """Negative control: flipping the stale flag in the non-ticked
    update path must be caught by the step-integrity oracle."""
    loaded = load_corpus_program("sample")
    rng = random.Random(7)
    events = random_events(loaded, rng, 4)
    ctx = ChannelContext({cid: ty for cid, _, ty in loaded.program.channels})

    run_trace(loaded, events, ctx, check_flags=True)  # sanity: passes

    reactive.FAULT_FLIP_STALE_FLAG = True
    try:
        with pytest.raises(OracleFailure) as e:
            run_trace(loaded, events, ctx, check_flags=True)
        assert e.value.oracle == "no-leak"
    finally:
        reactive.FAULT_FLIP_STALE_FLAG = False


def test_observer_sees_every_pre_step_cell():
    loaded = load_corpus_program("filter")
    ctx = ChannelContext({cid: ty for cid, _, ty in loaded.program.channels})
    events = [InputEvent(1, Lit("Int", 1))]
    seen = []

    from rizzo.machine import evaluate
    env = Environment(channels=ctx.copy())
    result = evaluate(loaded.main_term, env, Budget(100000))
    pre_locs = set(env.store.now.locations())
    reactive_step(env, events[0], Budget(100000),
                  observer=lambda c, tick, e: seen.append(c.loc))
    assert set(seen) == pre_locs
