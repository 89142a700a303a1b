"""Syntax-level unit and property tests: substitution, alpha
equivalence, free variables, and type formation."""

from hypothesis import given, strategies as st

from rizzo.syntax import (
    App, BOOL, INT, Lam, Lit, Pair, Proj, TFun, TLaterA, TLaterE, TMu,
    TProd, TSig, TSum, TUnit, TVar, Term, Type, Unit, Var,
    alpha_equivalent, check_type_formation, free_vars, substitute_term,
    substitute_type, term_to_str, type_to_str, unfold_mu,
)


def test_free_vars():
    t = Lam("x", App(Var("x"), Var("y")))
    assert free_vars(t) == {"y"}


def test_substitute_shadowing():
    t = Lam("x", Var("x"))
    out = substitute_term(t, "x", Lit("Int", 1))
    assert out == t


def test_substitute_capture_avoiding():
    # substituting y := x under a binder for x must rename the binder
    t = Lam("x", App(Var("y"), Var("x")))
    out = substitute_term(t, "y", Var("x"))
    assert isinstance(out, Lam)
    assert out.param != "x"
    assert alpha_equivalent(out, Lam("z", App(Var("x"), Var("z"))))


def test_alpha_equivalence():
    assert alpha_equivalent(Lam("a", Var("a")), Lam("b", Var("b")))
    assert not alpha_equivalent(Lam("a", Var("a")), Lam("a", Var("b")))


def test_unfold_mu():
    nat = TMu("a", TSum(TUnit(), TVar("a")))
    assert unfold_mu(nat) == TSum(TUnit(), nat)


def test_type_formation_rejects_mu_under_function():
    bad = TMu("a", TFun(TVar("a"), TUnit()))
    assert not check_type_formation(None, bad)


def test_type_formation_accepts_mu_under_sig():
    ok = TMu("a", TSum(TUnit(), TSig(TVar("a"))))
    assert check_type_formation(None, ok)


def test_type_to_str_round_names():
    assert type_to_str(BOOL) == "Bool"
    assert "Sig" in type_to_str(TSig(INT))


types = st.deferred(lambda: st.one_of(
    st.just(TUnit()), st.just(INT),
    st.builds(TProd, types, types),
    st.builds(TSum, types, types),
    st.builds(TFun, types, types),
    st.builds(TSig, types),
    st.builds(TLaterE, types),
    st.builds(TLaterA, types),
))


@given(types)
def test_substitute_type_noop_on_closed(ty: Type):
    assert substitute_type(ty, "a", INT) == ty


@given(types)
def test_formation_terminates_on_closed(ty: Type):
    assert check_type_formation(None, ty)


terms = st.deferred(lambda: st.one_of(
    st.builds(Var, st.sampled_from("xyz")),
    st.just(Unit()),
    st.builds(Lit, st.just("Int"), st.integers(-5, 5)),
    st.builds(Lam, st.sampled_from("xyz"), terms),
    st.builds(App, terms, terms),
    st.builds(Pair, terms, terms),
    st.builds(Proj, st.sampled_from((1, 2)), terms),
))


@given(terms)
def test_substitute_noop_when_not_free(t: Term):
    assert substitute_term(t, "notfree", Unit()) == t


@given(terms)
def test_alpha_equivalence_reflexive(t: Term):
    assert alpha_equivalent(t, t)


@given(terms, st.sampled_from("xyz"))
def test_substitution_removes_free_var(t: Term, v: str):
    out = substitute_term(t, v, Unit())
    assert v not in free_vars(out)


@given(terms)
def test_term_to_str_total(t: Term):
    assert isinstance(term_to_str(t), str)
