"""Shared helpers: corpus access and random trace generation."""

from __future__ import annotations

import random
import string

from rizzo.reactive import InputEvent
from rizzo.runner import Loaded, load_program
from rizzo.stdlib import corpus
from rizzo.syntax import (
    Lit, Pair, TBase, TProd, TSum, TUnit, Term, Type, Unit, TRUE, FALSE,
)


def corpus_entry(name: str):
    for e in corpus():
        if e.name == name:
            return e
    raise KeyError(name)


def runnable_entries():
    return [e for e in corpus() if e.entry is not None and e.expect == "accept"]


_LOADED: dict[str, Loaded] = {}


def load_corpus_program(name: str) -> Loaded:
    """Parse and typecheck a corpus program once per session; reusing
    the elaborated term keeps generated names identical across runs."""
    if name not in _LOADED:
        e = corpus_entry(name)
        _LOADED[name] = load_program(e.source, entry=e.entry or "main")
    return _LOADED[name]


def random_value(ty: Type, rng: random.Random) -> Term:
    match ty:
        case TBase("Int"):
            return Lit("Int", rng.randint(-100, 100))
        case TBase("Char"):
            return Lit("Char", rng.choice(string.ascii_lowercase))
        case TBase("String"):
            n = rng.randint(0, 5)
            return Lit("String", "".join(rng.choices(string.ascii_lowercase, k=n)))
        case TUnit():
            return Unit()
        case TSum(TUnit(), TUnit()):
            return rng.choice((TRUE, FALSE))
        case TProd(a, b):
            return Pair(random_value(a, rng), random_value(b, rng))
    raise ValueError(f"cannot generate a value of type {ty}")


def random_events(loaded: Loaded, rng: random.Random,
                  length: int) -> list[InputEvent]:
    channels = loaded.program.channels
    assert channels, "program declares no channels"
    events = []
    for _ in range(length):
        cid, _, ty = rng.choice(channels)
        events.append(InputEvent(cid, random_value(ty, rng)))
    return events
