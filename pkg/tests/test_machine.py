"""Evaluator unit tests: primitive rules, data structures, structural
recursion, guarded fixpoints, and the step budget."""

import pytest

from rizzo.frontend import parse_program
from rizzo.frontend.desugar import desugar_program
from rizzo.machine import Budget, BudgetExceeded, EvalFault, evaluate
from rizzo.store import Environment
from rizzo.syntax import (
    App, ConsS, Delay, INT, Lam, Lit, Loc, Never, Pair, Prim, Proj,
    TSig, Var,
)


def run(t, env=None, limit=100_000):
    return evaluate(t, env or Environment(), Budget(limit))


def run_def(source, name, env=None):
    prog = desugar_program(parse_program(source))
    return run(prog.term_for(name), env)


def test_beta_and_prim():
    t = App(Lam("x", Prim("add", [Var("x"), Lit("Int", 2)])), Lit("Int", 40))
    assert run(t) == Lit("Int", 42)


def test_pairs_and_projections():
    t = Proj(2, Pair(Lit("Int", 1), Lit("Int", 2)))
    assert run(t) == Lit("Int", 2)


def test_cons_allocates_rightmost():
    env = Environment()
    v = run(ConsS(Lit("Int", 5), Never(TSig(INT)), INT), env)
    assert v == Loc(1)
    cell = env.store.now.get(1)
    assert cell.sig.head == Lit("Int", 5)
    assert cell.sig.updated is False


def test_delay_is_lazy():
    # the body of a delay is not evaluated
    t = Delay(App(Lit("Int", 1), Lit("Int", 2)))  # would fault if forced
    assert run(t) == t


def test_budget_exceeded_on_divergence():
    omega = App(Lam("x", App(Var("x"), Var("x"))),
                Lam("x", App(Var("x"), Var("x"))))
    with pytest.raises(BudgetExceeded):
        run(omega, limit=1000)


def test_eval_fault_on_bad_application():
    with pytest.raises(EvalFault):
        run(App(Lit("Int", 1), Lit("Int", 2)))


def test_structural_recursion_over_list():
    src = ("data List = Nil | Cons Int List\n"
           "length : List -> Int\n"
           "length l = case l of { Nil -> 0 ; Cons x r -> 1 + length r }\n"
           "three : Int\n"
           "three = length (Cons 7 (Cons 8 (Cons 9 Nil)))\n")
    assert run_def(src, "three") == Lit("Int", 3)


def test_structural_recursion_sum():
    src = ("data List = Nil | Cons Int List\n"
           "total : List -> Int\n"
           "total l = case l of { Nil -> 0 ; Cons x r -> x + total r }\n"
           "answer : Int\n"
           "answer = total (Cons 40 (Cons 2 Nil))\n")
    assert run_def(src, "answer") == Lit("Int", 42)


def test_if_and_comparison():
    src = ("f : Int -> Int\n"
           "f x = if x > 0 then x else 0 - x\n"
           "a : Int\na = f (0 - 9)\n")
    assert run_def(src, "a") == Lit("Int", 9)


def test_guarded_fix_productive():
    # building a signal cell from a guarded definition terminates
    env = Environment()
    src = ("m : (Int -> Int) -> Sig Int -> Sig Int\n"
           "m f s = f (head s) :: (m f |> tail s)\n"
           "s0 : Sig Int\n"
           "s0 = 1 :: never\n"
           "out : Sig Int\n"
           "out = m (\\x. x + 1) s0\n")
    v = run_def(src, "out", env)
    assert isinstance(v, Loc)
    assert env.store.now.get(v.id).sig.head == Lit("Int", 2)
