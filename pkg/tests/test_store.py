"""Heap and environment unit tests: allocation discipline, stale
location faults, and snapshot canonicity."""

import pytest

from rizzo.store import (
    ChannelContext, Environment, Heap, HeapCell, MachineState,
    StaleLocationError, StoredSignal, alloc_location, insert_now_rightmost,
    lookup_now, reachable_locations, snapshot_json, snapshot_text,
)
from rizzo.syntax import INT, Lit, Loc, Never, Unit


def cell(loc, head=0):
    return HeapCell(loc, INT, StoredSignal(Lit("Int", head), Never(INT)))


def test_alloc_monotone_and_fresh():
    env = Environment()
    seen = set()
    for _ in range(10):
        loc = alloc_location(env)
        insert_now_rightmost(env, loc, INT,
                             StoredSignal(Lit("Int", 0), Never(INT)))
        assert loc not in seen
        seen.add(loc)
    assert sorted(seen) == list(seen)  # monotone counter


def test_lookup_now_stale_location():
    env = Environment()
    env.store.earlier.append(cell(1))
    with pytest.raises(StaleLocationError):
        lookup_now(env, 1)


def test_heap_order_preserved():
    h = Heap()
    h.append(cell(3))
    h.append(cell(1))
    assert [c.loc for c in h] == [3, 1]
    assert h.pop_leftmost().loc == 3


def test_snapshot_canonical():
    a = MachineState(Loc(1), Heap([cell(1, 7)]), ChannelContext({}), 2, 1)
    b = MachineState(Loc(1), Heap([cell(1, 7)]), ChannelContext({}), 9, 4)
    assert a == b  # counters are not part of the observable state
    assert snapshot_text(a) == snapshot_text(b)
    assert snapshot_json(a) == snapshot_json(b)


def test_snapshot_hide_unreachable():
    heap = Heap([cell(1), cell(2)])
    state = MachineState(Loc(2), heap, ChannelContext({}), 3, 1)
    shown = snapshot_text(state, hide_unreachable=True)
    assert "l2" in shown and "l1" not in shown


def test_reachable_follows_tails():
    h = Heap()
    h.append(HeapCell(1, INT, StoredSignal(Lit("Int", 0), Loc(2))))
    h.append(cell(2))
    state = MachineState(Loc(1), h, ChannelContext({}), 3, 1)
    assert reachable_locations(state) == {1, 2}


def test_snapshot_rename_order_preserving():
    heap = Heap([cell(5), cell(9)])
    state = MachineState(Unit(), heap, ChannelContext({}), 10, 1)
    text = snapshot_text(state, rename=True)
    assert text.splitlines()[0].startswith("l1 ")
    assert text.splitlines()[1].startswith("l2 ")
