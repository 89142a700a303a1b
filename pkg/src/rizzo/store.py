"""Heaps, two-zone stores, machine environments and state snapshots.

A heap is an ordered sequence of cells; order matters because a cell may
only refer to locations strictly to its left, and the update sweep
processes cells left to right.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

from .syntax import Term, Type, term_to_str, type_to_str


class StaleLocationError(Exception):
    """A location was dereferenced while sitting in the earlier heap, or
    is missing entirely.  Unreachable for well-typed programs."""


@dataclass(frozen=True)
class StoredSignal:
    head: Term
    tail: Term
    updated: bool = False


@dataclass(frozen=True)
class HeapCell:
    loc: int
    ann: Type
    sig: StoredSignal


class Heap:
    """Ordered location -> stored-signal map."""

    __slots__ = ("cells", "_index")

    def __init__(self, cells: list[HeapCell] | None = None):
        self.cells: list[HeapCell] = list(cells) if cells else []
        self._index: dict[int, int] = {c.loc: i for i, c in enumerate(self.cells)}
        if len(self._index) != len(self.cells):
            raise ValueError("duplicate heap location")

    def __contains__(self, loc: int) -> bool:
        return loc in self._index

    def __len__(self) -> int:
        return len(self.cells)

    def __iter__(self):
        return iter(self.cells)

    def get(self, loc: int) -> HeapCell | None:
        i = self._index.get(loc)
        return None if i is None else self.cells[i]

    def lookup(self, loc: int) -> StoredSignal:
        cell = self.get(loc)
        if cell is None:
            raise StaleLocationError(f"location l{loc} not present in heap")
        return cell.sig

    def append(self, cell: HeapCell) -> None:
        if cell.loc in self._index:
            raise ValueError(f"location l{cell.loc} already in heap")
        self._index[cell.loc] = len(self.cells)
        self.cells.append(cell)

    def pop_leftmost(self) -> HeapCell:
        cell = self.cells.pop(0)
        del self._index[cell.loc]
        self._index = {c.loc: i for i, c in enumerate(self.cells)}
        return cell

    def remove(self, loc: int) -> None:
        i = self._index.pop(loc)
        del self.cells[i]
        self._index = {c.loc: j for j, c in enumerate(self.cells)}

    def locations(self) -> list[int]:
        return [c.loc for c in self.cells]

    def copy(self) -> "Heap":
        return Heap(self.cells)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Heap) and self.cells == other.cells

    def __repr__(self) -> str:
        return f"Heap({self.cells!r})"


@dataclass
class Store:
    now: Heap = field(default_factory=Heap)
    earlier: Heap = field(default_factory=Heap)

    def domain(self) -> set[int]:
        return set(self.now.locations()) | set(self.earlier.locations())

    def check_disjoint(self) -> None:
        overlap = set(self.now.locations()) & set(self.earlier.locations())
        if overlap:
            raise ValueError(f"now/earlier heaps overlap on {sorted(overlap)}")


class ChannelContext:
    """Ordered channel-id -> type assignment."""

    __slots__ = ("entries",)

    def __init__(self, entries: dict[int, Type] | None = None):
        self.entries: dict[int, Type] = dict(entries) if entries else {}

    def __contains__(self, chan: int) -> bool:
        return chan in self.entries

    def __len__(self) -> int:
        return len(self.entries)

    def lookup(self, chan: int) -> Type | None:
        return self.entries.get(chan)

    def extended(self, chan: int, ty: Type) -> "ChannelContext":
        out = ChannelContext(self.entries)
        out.entries[chan] = ty
        return out

    def add(self, chan: int, ty: Type) -> None:
        if chan in self.entries:
            raise ValueError(f"channel k{chan} already declared")
        self.entries[chan] = ty

    def is_subset_of(self, other: "ChannelContext") -> bool:
        return all(other.entries.get(k) == v for k, v in self.entries.items())

    def copy(self) -> "ChannelContext":
        return ChannelContext(self.entries)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, ChannelContext) and self.entries == other.entries

    def __repr__(self) -> str:
        return f"ChannelContext({self.entries!r})"


@dataclass
class Environment:
    """Store plus channel context plus the deterministic fresh-name
    counters.  The counters live here so allocation is a pure function
    of the environment (determinism of the whole machine depends on
    it)."""

    store: Store = field(default_factory=Store)
    channels: ChannelContext = field(default_factory=ChannelContext)
    next_loc: int = 1
    next_chan: int = 1
    # cells allocated while a reactive step is in progress carry the
    # updated flag; initialisation-step allocations are stale
    step_flag: bool = False

    def copy(self) -> "Environment":
        return Environment(
            store=Store(self.store.now.copy(), self.store.earlier.copy()),
            channels=self.channels.copy(),
            next_loc=self.next_loc,
            next_chan=self.next_chan,
            step_flag=self.step_flag,
        )


def alloc_location(env: Environment) -> int:
    """Fresh location not in dom(now) + dom(earlier); monotone counter."""
    loc = env.next_loc
    dom = env.store.domain()
    while loc in dom:
        loc += 1
    env.next_loc = loc + 1
    return loc


def alloc_channel(env: Environment) -> int:
    chan = env.next_chan
    while chan in env.channels:
        chan += 1
    env.next_chan = chan + 1
    return chan


def insert_now_rightmost(env: Environment, loc: int, ann: Type, sig: StoredSignal) -> None:
    if loc in env.store.earlier:
        raise ValueError(f"location l{loc} already in earlier heap")
    env.store.now.append(HeapCell(loc, ann, sig))


def lookup_now(env: Environment, loc: int) -> StoredSignal:
    """Dereference a signal.  A hit in the earlier heap is a stale
    dereference and signals an interpreter bug for well-typed programs."""
    cell = env.store.now.get(loc)
    if cell is not None:
        return cell.sig
    if loc in env.store.earlier:
        raise StaleLocationError(f"location l{loc} dereferenced while stale")
    raise StaleLocationError(f"location l{loc} not allocated")


@dataclass
class MachineState:
    result: Term
    heap: Heap
    channels: ChannelContext
    next_loc: int = 1
    next_chan: int = 1

    def copy(self) -> "MachineState":
        return MachineState(
            self.result, self.heap.copy(), self.channels.copy(), self.next_loc, self.next_chan
        )

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, MachineState)
            and self.result == other.result
            and self.heap == other.heap
            and self.channels == other.channels
        )


# ---------------------------------------------------------------------------
# Snapshots
# ---------------------------------------------------------------------------

FLAG_UPDATED = "T"
FLAG_STALE = "B"


def _flag(sig: StoredSignal) -> str:
    return FLAG_UPDATED if sig.updated else FLAG_STALE


def reachable_from(root: Term, heap: Heap) -> set[int]:
    """Locations reachable from a root value through stored heads and
    tails (transitively)."""
    from .syntax import Loc  # local import to avoid a cycle in type hints

    def locs_in(t: Term, acc: set[int]) -> None:
        if isinstance(t, Loc):
            acc.add(t.id)
            return
        for f in getattr(t, "__dataclass_fields__", ()):
            v = getattr(t, f)
            if isinstance(v, Term):
                locs_in(v, acc)
            elif isinstance(v, tuple):
                for x in v:
                    if isinstance(x, Term):
                        locs_in(x, acc)

    seen: set[int] = set()
    frontier: set[int] = set()
    locs_in(root, frontier)
    while frontier:
        loc = frontier.pop()
        if loc in seen:
            continue
        seen.add(loc)
        cell = heap.get(loc)
        if cell is None:
            continue
        nxt: set[int] = set()
        locs_in(cell.sig.head, nxt)
        locs_in(cell.sig.tail, nxt)
        frontier |= nxt - seen
    return seen


def reachable_locations(state: MachineState) -> set[int]:
    """Locations reachable from the result value."""
    return reachable_from(state.result, state.heap)


def _visible_cells(state: MachineState, hide_unreachable: bool) -> list[HeapCell]:
    if not hide_unreachable:
        return list(state.heap)
    keep = reachable_locations(state)
    return [c for c in state.heap if c.loc in keep]


def _rename_map(cells: list[HeapCell]) -> dict[int, int]:
    return {c.loc: i + 1 for i, c in enumerate(cells)}


def _rename_term(t: Term, mapping: dict[int, int]) -> Term:
    from .syntax import Loc

    def go(t: Term) -> Term:
        if isinstance(t, Loc):
            return Loc(mapping.get(t.id, t.id))
        changed = False
        updates = {}
        for f in getattr(t, "__dataclass_fields__", ()):
            v = getattr(t, f)
            if isinstance(v, Term):
                nv = go(v)
                if nv is not v:
                    changed = True
                updates[f] = nv
            elif isinstance(v, tuple) and any(isinstance(x, Term) for x in v):
                nv = tuple(go(x) if isinstance(x, Term) else x for x in v)
                changed = changed or nv != v
                updates[f] = nv
        return replace(t, **updates) if changed else t

    return go(t)


def snapshot_lines(
    state: MachineState, hide_unreachable: bool = False, rename: bool = False
) -> list[str]:
    """Canonical textual snapshot: one cell per line, in heap order.

    Format: ``l<i> :<type> -> <flag>(<head>, <tail>)``.  With `rename`,
    visible locations are renumbered 1.. in order of appearance so that
    traces can be compared up to order-preserving renaming."""
    cells = _visible_cells(state, hide_unreachable)
    mapping = _rename_map(cells) if rename else {}
    lines = []
    for c in cells:
        loc = mapping.get(c.loc, c.loc)
        head = _rename_term(c.sig.head, mapping) if rename else c.sig.head
        tail = _rename_term(c.sig.tail, mapping) if rename else c.sig.tail
        lines.append(
            f"l{loc} :{type_to_str(c.ann)} -> "
            f"{_flag(c.sig)}({term_to_str(head)}, {term_to_str(tail)})"
        )
    return lines


def snapshot_text(state: MachineState, hide_unreachable: bool = False, rename: bool = False) -> str:
    return "\n".join(snapshot_lines(state, hide_unreachable, rename))


def snapshot_json(state: MachineState, hide_unreachable: bool = False, rename: bool = False) -> str:
    cells = _visible_cells(state, hide_unreachable)
    mapping = _rename_map(cells) if rename else {}
    out = []
    for c in cells:
        head = _rename_term(c.sig.head, mapping) if rename else c.sig.head
        tail = _rename_term(c.sig.tail, mapping) if rename else c.sig.tail
        out.append(
            {
                "loc": mapping.get(c.loc, c.loc),
                "type": type_to_str(c.ann),
                "flag": _flag(c.sig),
                "head": term_to_str(head),
                "tail": term_to_str(tail),
            }
        )
    return json.dumps(out, sort_keys=True)


def heads_and_flags(state: MachineState, hide_unreachable: bool = True) -> list[tuple[str, str]]:
    """(head, flag) per visible cell in heap order; the golden-trace
    comparisons key on exactly this."""
    cells = _visible_cells(state, hide_unreachable)
    return [(term_to_str(c.sig.head), _flag(c.sig)) for c in cells]
