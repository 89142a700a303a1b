"""Typechecker unit and property tests: core rules, elaboration, heap
well-typedness, and heap-context weakening."""

import pytest
from hypothesis import given, strategies as st

from rizzo.store import ChannelContext, Heap, HeapCell, StoredSignal
from rizzo.syntax import (
    ApA, App, BOOL, ConsS, Fix, INT, Lam, Lit, Loc,
    Never, Pair, Prim, Tail, TFun, TLaterE, TSig, TSum, TUnit, Unit,
    Var, Wait,
)
from rizzo.typecheck import (
    HeapContext, TypeCheckError, TypingContext, check_heap_now,
    synthesize, type_equal, typecheck,
)


def synth(t, chan_ctx=None, heap_ctx=None):
    return synthesize(TypingContext.empty(), heap_ctx or HeapContext.empty(),
                      chan_ctx or ChannelContext({}), t)


def check(t, ty, chan_ctx=None, heap_ctx=None):
    return typecheck(TypingContext.empty(), heap_ctx or HeapContext.empty(),
                     chan_ctx or ChannelContext({}), t, ty)


def test_literal_and_prim():
    ty, _ = synth(Prim("add", [Lit("Int", 1), Lit("Int", 2)]))
    assert ty == INT
    ty, _ = synth(Prim("gt", [Lit("Int", 1), Lit("Int", 2)]))
    assert ty == BOOL


def test_lambda_checks_and_elaborates_annotation():
    t = check(Lam("x", Var("x")), TFun(INT, INT))
    assert t.param_type == INT


def test_unbound_variable():
    with pytest.raises(TypeCheckError):
        synth(Var("nope"))


def test_cons_elaboration_fills_never_annotation():
    t = check(ConsS(Lit("Int", 3), Never()), TSig(INT))
    assert t.tail.ann == TSig(INT)


def test_tail_is_not_a_signal():
    t = Lam("s", Tail(Var("s")))
    with pytest.raises(TypeCheckError) as e:
        check(t, TFun(TSig(INT), TSig(INT)))
    assert e.value.rule in ("mismatch", "tail")


def test_apa_rejects_existential_function():
    t = Lam("f", Lam("d", ApA(Var("f"), Var("d"))))
    ty = TFun(TLaterE(TFun(INT, INT)), TFun(TLaterE(INT), TLaterE(INT)))
    with pytest.raises(TypeCheckError) as e:
        check(t, ty)
    assert e.value.rule == "ap-universal"


def test_fix_binds_recursion_at_delayed_type():
    # fix f. \x. x :: ((delay (\r. r x)) <*> f applied via <**> never)
    t = Fix("f", Lam("x", ConsS(Var("x"), Never())))
    out = check(t, TFun(INT, TSig(INT)))
    assert out.ann == TFun(INT, TSig(INT))

    # the recursion variable has the All type, not the unrolled type
    bad = Fix("f", Lam("x", App(Var("f"), Var("x"))))
    with pytest.raises(TypeCheckError):
        check(bad, TFun(INT, TSig(INT)))


def test_wait_needs_channel():
    with pytest.raises(TypeCheckError):
        synth(Wait(Lit("Int", 1)))


def test_loc_typed_by_heap_context():
    hc = HeapContext.empty().extended(1, INT)
    ty, _ = synth(Loc(1), heap_ctx=hc)
    assert ty == TSig(INT)
    with pytest.raises(TypeCheckError):
        synth(Loc(2), heap_ctx=hc)


def test_type_equal_mu_alpha():
    from rizzo.syntax import TMu, TVar
    a = TMu("a", TSum(TUnit(), TSig(TVar("a"))))
    b = TMu("b", TSum(TUnit(), TSig(TVar("b"))))
    assert type_equal(a, b)


def test_check_heap_now_prefix_discipline():
    # a cell may reference cells to its left, not to its right
    good = Heap()
    good.append(HeapCell(1, INT, StoredSignal(Lit("Int", 0), Never(TSig(INT)))))
    good.append(HeapCell(2, INT, StoredSignal(Lit("Int", 1), Tail(Loc(1)))))
    check_heap_now(ChannelContext({}), good)

    bad = Heap()
    bad.append(HeapCell(1, INT, StoredSignal(Lit("Int", 0), Tail(Loc(2)))))
    bad.append(HeapCell(2, INT, StoredSignal(Lit("Int", 1), Never(TSig(INT)))))
    with pytest.raises(TypeCheckError):
        check_heap_now(ChannelContext({}), bad)


closed_terms_and_types = st.sampled_from([
    (Lit("Int", 5), INT),
    (Unit(), TUnit()),
    (Pair(Lit("Int", 1), Unit()), None),
    (Lam("x", Pair(Var("x"), Var("x"))), None),
    (ConsS(Lit("Int", 1), Never(TSig(INT)), INT), TSig(INT)),
])


@given(closed_terms_and_types,
       st.lists(st.tuples(st.integers(1, 5),
                          st.sampled_from([INT, TUnit()])), max_size=4))
def test_heap_context_weakening(pair, extra):
    """A synthesis that succeeds in a heap context still succeeds, with
    the same type, in any extension of it."""
    t, _ = pair
    base = HeapContext.empty()
    try:
        ty, _ = synth(t, heap_ctx=base)
    except TypeCheckError:
        return
    bigger = base
    for loc, lty in extra:
        bigger = bigger.extended(loc, lty)
    ty2, _ = synth(t, heap_ctx=bigger)
    assert type_equal(ty, ty2)
