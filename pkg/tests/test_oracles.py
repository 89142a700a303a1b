"""Oracle tests: the checks pass on honest runs and catch corrupted
states."""

import random

import pytest

from rizzo.machine import Budget, evaluate
from rizzo.oracles import OracleFailure, check_preservation
from rizzo.runner import run_trace
from rizzo.store import ChannelContext, Environment, HeapCell, StoredSignal
from rizzo.syntax import Lit

from conftest import load_corpus_program, random_events


def fresh_env(loaded):
    ctx = ChannelContext({cid: ty for cid, _, ty in loaded.program.channels})
    env = Environment(channels=ctx)
    env.next_chan = 1 + len(ctx)
    return env


def test_preservation_passes_on_honest_run():
    loaded = load_corpus_program("sample")
    env = fresh_env(loaded)
    result = evaluate(loaded.main_term, env, Budget(100000))
    check_preservation(result, env, loaded.main_type)


def test_preservation_catches_corrupted_head():
    loaded = load_corpus_program("sample")
    env = fresh_env(loaded)
    result = evaluate(loaded.main_term, env, Budget(100000))
    cell = env.store.now.cells[0]
    env.store.now.cells[0] = HeapCell(
        cell.loc, cell.ann,
        StoredSignal(Lit("Char", "x"), cell.sig.tail, cell.sig.updated))
    with pytest.raises(OracleFailure) as e:
        check_preservation(result, env, loaded.main_type)
    assert e.value.oracle == "preservation"


def test_all_oracles_pass_on_random_runs():
    rng = random.Random(42)
    for name in ("sample", "filter", "zipsample", "scan"):
        loaded = load_corpus_program(name)
        ctx = ChannelContext({cid: ty for cid, _, ty in loaded.program.channels})
        events = random_events(loaded, rng, 10)
        run_trace(loaded, events, ctx, check_pres=True,
                  check_agreement=True, check_flags=True)
