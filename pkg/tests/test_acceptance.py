"""Acceptance suite.

One test per acceptance criterion; each prints a single PASS line on
success (pytest reports the FAIL case).  The golden traces compare the
visible heap (unreachable cells hidden, locations renamed in order of
appearance) head-by-head and flag-by-flag against hand-checked
expectations.
"""

from __future__ import annotations

import random
import time

import pytest

from rizzo.frontend.trace import parse_trace
from rizzo.machine import DEFAULT_BUDGET
from rizzo.runner import (
    RunResult, check_all_definitions, load_program, prepare_trace, run_trace,
)
from rizzo.store import (
    ChannelContext, heads_and_flags, snapshot_json, snapshot_text,
)
from rizzo.stdlib import corpus
from rizzo.syntax import term_to_str
from rizzo.typecheck import TypeCheckError

from conftest import load_corpus_program, random_events, runnable_entries

SEED = 20260826


def run_corpus_trace(name, trace_text, **oracles) -> RunResult:
    loaded = load_corpus_program(name)
    events, ctx = prepare_trace(loaded, parse_trace(trace_text))
    return run_trace(loaded, events, ctx, **oracles)


def output_heads(states) -> list[tuple[str, str]]:
    """(head, flag) of the output signal's own cell, per state."""
    out = []
    for st in states:
        cell = st.heap.get(st.result.id)
        flag = "T" if cell.sig.updated else "B"
        out.append((term_to_str(cell.sig.head), flag))
    return out


_ORACLE_RUN_CACHE: dict = {}


def oracle_runs():
    """One shared randomized run set with every oracle enabled: at
    least 1000 reactive steps across the runnable corpus, with
    per-step preservation, tick/clock agreement, and flag/no-leak
    checks.  Criteria 6, 8, and 9 all key on this set."""
    if _ORACLE_RUN_CACHE:
        return _ORACLE_RUN_CACHE["steps"]
    rng = random.Random(SEED)
    total_steps = 0
    for entry in runnable_entries():
        loaded = load_corpus_program(entry.name)
        ctx = ChannelContext(
            {cid: ty for cid, _, ty in loaded.program.channels})
        for _ in range(10):
            events = random_events(loaded, rng, rng.randint(20, 30))
            run_trace(loaded, events, ctx, check_pres=True,
                      check_agreement=True, check_flags=True)
            total_steps += len(events)
    _ORACLE_RUN_CACHE["steps"] = total_steps
    return total_steps


def test_criterion_01_golden_sample_trace():
    t0 = time.time()
    res = run_corpus_trace("sample", "k1 1\nk2 'b'\nk1 2\n",
                           check_pres=True, check_agreement=True,
                           check_flags=True)
    expected = [
        [("0", "B"), ("'a'", "B"), ("(0, 'a')", "B")],
        [("1", "T"), ("'a'", "B"), ("(1, 'a')", "T")],
        [("1", "B"), ("'b'", "T"), ("(1, 'a')", "B")],
        [("2", "T"), ("'b'", "B"), ("(2, 'b')", "T")],
    ]
    got = [heads_and_flags(st, hide_unreachable=True) for st in res.states]
    assert got == expected
    assert time.time() - t0 < 1.0
    print("PASS criterion 1: golden sample trace matches hand-checked "
          "states and flags")


def test_criterion_02_golden_filter_trace():
    t0 = time.time()
    res = run_corpus_trace("filter", "k1 1\nk1 2\n",
                           check_pres=True, check_agreement=True,
                           check_flags=True)
    expected = [
        [("(in2 ())", "B"), ("0", "B")],
        [("1", "T"), ("(in2 ())", "T"), ("0", "B")],
        [("2", "T"), ("(in1 2)", "T"), ("2", "T")],
    ]
    got = [heads_and_flags(st, hide_unreachable=True) for st in res.states]
    assert got == expected
    assert time.time() - t0 < 1.0
    print("PASS criterion 2: golden filter trace matches hand-checked "
          "states and flags")


def test_criterion_03_typechecking_corpus():
    names_accepted = []
    for entry in corpus():
        if entry.expect == "accept":
            check_all_definitions(entry.source)
            names_accepted.append(entry.name)
        else:
            with pytest.raises(TypeCheckError) as e:
                check_all_definitions(entry.source)
            assert e.value.rule  # diagnostic names the violated rule
    combinators = ("map", "switch", "mkSig", "const", "sample", "zip",
                   "switchS", "switchR", "scan", "filter", "jump",
                   "interleave")
    comb_src = next(e.source for e in corpus() if e.name == "combinators")
    checked = {name for name, _ in check_all_definitions(comb_src)}
    assert set(combinators) <= checked
    print(f"PASS criterion 3: corpus typechecks as declared "
          f"({', '.join(names_accepted)} accepted; reject programs "
          f"rejected with rule-named diagnostics)")


def test_criterion_04_determinism():
    rng = random.Random(SEED + 1)
    diffs = 0
    for entry in runnable_entries():
        loaded = load_corpus_program(entry.name)
        ctx = ChannelContext(
            {cid: ty for cid, _, ty in loaded.program.channels})
        for _ in range(50):
            events = random_events(loaded, rng, rng.randint(0, 30))
            first = run_trace(loaded, events, ctx)
            second = run_trace(loaded, events, ctx)
            for a, b in zip(first.states, second.states):
                if (snapshot_text(a) != snapshot_text(b)
                        or snapshot_json(a) != snapshot_json(b)):
                    diffs += 1
    assert diffs == 0
    print("PASS criterion 4: determinism, 50 random traces per corpus "
          "program, byte-equal snapshot streams, zero diffs")


def test_criterion_05_causality():
    rng = random.Random(SEED + 2)
    entries = runnable_entries()
    violations = 0
    for i in range(50):
        entry = entries[i % len(entries)]
        loaded = load_corpus_program(entry.name)
        ctx = ChannelContext(
            {cid: ty for cid, _, ty in loaded.program.channels})
        n = rng.randint(0, 15)
        prefix = random_events(loaded, rng, n)
        one = prefix + random_events(loaded, rng, rng.randint(0, 10))
        two = prefix + random_events(loaded, rng, rng.randint(0, 10))
        state_one = run_trace(loaded, one, ctx).states[n]
        state_two = run_trace(loaded, two, ctx).states[n]
        if state_one != state_two:
            violations += 1
    assert violations == 0
    print("PASS criterion 5: causality, 50 shared-prefix trace pairs, "
          "states at the fork point structurally equal")


def test_criterion_06_preservation():
    steps = oracle_runs()
    assert steps >= 1000
    print(f"PASS criterion 6: preservation, result and both heaps "
          f"re-typechecked after init and after each of {steps} steps, "
          f"zero failures")


def test_criterion_07_productivity():
    rng = random.Random(SEED + 3)
    for entry in runnable_entries():
        loaded = load_corpus_program(entry.name)
        ctx = ChannelContext(
            {cid: ty for cid, _, ty in loaded.program.channels})
        events = random_events(loaded, rng, 100)
        res = run_trace(loaded, events, ctx, budget_limit=DEFAULT_BUDGET)
        assert len(res.states) == 101
        assert res.budget_used < DEFAULT_BUDGET
    print("PASS criterion 7: productivity, 100-event runs per corpus "
          "program complete without faults within the step budget")


def test_criterion_08_tick_clock_agreement():
    steps = oracle_runs()
    print(f"PASS criterion 8: tick/clock agreement held at every update "
          f"point across {steps} randomized steps plus both golden runs")


def test_criterion_09_no_space_leak():
    steps = oracle_runs()
    print(f"PASS criterion 9: after each of {steps} steps the earlier "
          f"heap was drained and every reachable cell carried "
          f"this-step data")


def test_criterion_10_sample_vs_zip_contrast():
    trace = "ky 1\nkx 2\nky 3\n"
    entry_src = next(e.source for e in corpus() if e.name == "zipsample")

    sample_loaded = load_program(entry_src, entry="sampleOut")
    events, ctx = prepare_trace(sample_loaded, parse_trace(trace))
    sample_states = run_trace(sample_loaded, events, ctx).states

    zip_loaded = load_program(entry_src, entry="zipOut")
    events, ctx = prepare_trace(zip_loaded, parse_trace(trace))
    zip_states = run_trace(zip_loaded, events, ctx).states

    assert output_heads(sample_states) == [
        ("(0, 0)", "B"),  # init
        ("(0, 0)", "B"),  # ys event: sample output unchanged
        ("(2, 1)", "T"),  # xs event: output updates, sees current ys
        ("(2, 1)", "B"),  # ys event: unchanged again
    ]
    assert output_heads(zip_states) == [
        ("(0, 0)", "B"),
        ("(0, 1)", "T"),  # zip updates on every event
        ("(2, 1)", "T"),
        ("(2, 3)", "T"),
    ]
    print("PASS criterion 10: sample updates only on xs events, zip on "
          "all three, matching the hand-derived trace")
