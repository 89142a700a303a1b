"""Abstract syntax of types, terms and values, plus substitution.

Terms are immutable; all tree-rewriting operations build new nodes.
Binder names are made globally unique by the frontend, but substitution
is nevertheless fully capture-avoiding so that core terms built by hand
(e.g. in tests) behave correctly too.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass


# ---------------------------------------------------------------------------
# Types
# ---------------------------------------------------------------------------

class Type:
    """Base class for type syntax nodes."""

    __slots__ = ()


@dataclass(frozen=True)
class TVar(Type):
    name: str


@dataclass(frozen=True)
class TUnit(Type):
    pass


@dataclass(frozen=True)
class TBase(Type):
    """Opaque base types (Int, Char, String, ...) with literal values."""

    name: str


@dataclass(frozen=True)
class TProd(Type):
    left: Type
    right: Type


@dataclass(frozen=True)
class TSum(Type):
    left: Type
    right: Type


@dataclass(frozen=True)
class TFun(Type):
    arg: Type
    res: Type


@dataclass(frozen=True)
class TLaterE(Type):
    """Existential later modality: a delayed computation with its own clock."""

    arg: Type


@dataclass(frozen=True)
class TLaterA(Type):
    """Universal later modality: available at the next tick of any clock."""

    arg: Type


@dataclass(frozen=True)
class TSig(Type):
    arg: Type


@dataclass(frozen=True)
class TChan(Type):
    arg: Type


@dataclass(frozen=True)
class TMu(Type):
    var: str
    body: Type


UNIT = TUnit()
INT = TBase("Int")
CHAR = TBase("Char")
STRING = TBase("String")
BOOL = TSum(UNIT, UNIT)


def maybe_type(a: Type) -> Type:
    return TSum(a, UNIT)


def sync_type(a: Type, b: Type) -> Type:
    return TSum(TSum(a, b), TProd(a, b))


def check_type_formation(phi: str | None, ty: Type) -> bool:
    """Decide whether `ty` is well formed under the (at most one) type
    variable `phi`.  Function, later, and channel types require closed
    operands; a recursive type checks its body under exactly its own
    variable."""
    match ty:
        case TVar(name):
            return phi == name
        case TUnit() | TBase():
            return True
        case TProd(a, b) | TSum(a, b):
            return check_type_formation(phi, a) and check_type_formation(phi, b)
        case TSig(a):
            return check_type_formation(phi, a)
        case TFun(a, b):
            return check_type_formation(None, a) and check_type_formation(None, b)
        case TLaterE(a) | TLaterA(a) | TChan(a):
            return check_type_formation(None, a)
        case TMu(var, body):
            return check_type_formation(var, body)
    raise TypeError(f"not a type: {ty!r}")


def type_is_closed(ty: Type) -> bool:
    return check_type_formation(None, ty)


def substitute_type(ty: Type, var: str, repl: Type) -> Type:
    """Replace the type variable `var` by `repl` (assumed closed)."""
    match ty:
        case TVar(name):
            return repl if name == var else ty
        case TUnit() | TBase():
            return ty
        case TProd(a, b):
            return TProd(substitute_type(a, var, repl), substitute_type(b, var, repl))
        case TSum(a, b):
            return TSum(substitute_type(a, var, repl), substitute_type(b, var, repl))
        case TSig(a):
            return TSig(substitute_type(a, var, repl))
        case TFun() | TLaterE() | TLaterA() | TChan():
            return ty  # operands are closed by formation
        case TMu():
            return ty  # a well-formed mu body mentions only its own variable
    raise TypeError(f"not a type: {ty!r}")


def unfold_mu(mu: TMu) -> Type:
    return substitute_type(mu.body, mu.var, mu)


def type_to_str(ty: Type) -> str:
    match ty:
        case TVar(name):
            return name
        case TUnit():
            return "1"
        case TBase(name):
            return name
        case TProd(a, b):
            return f"({type_to_str(a)} * {type_to_str(b)})"
        case TSum(a, b):
            if ty == BOOL:
                return "Bool"
            return f"({type_to_str(a)} + {type_to_str(b)})"
        case TFun(a, b):
            return f"({type_to_str(a)} -> {type_to_str(b)})"
        case TLaterE(a):
            return f"Ex {type_to_str(a)}"
        case TLaterA(a):
            return f"All {type_to_str(a)}"
        case TSig(a):
            return f"Sig {type_to_str(a)}"
        case TChan(a):
            return f"Chan {type_to_str(a)}"
        case TMu(v, b):
            return f"(mu {v}. {type_to_str(b)})"
    raise TypeError(f"not a type: {ty!r}")


# ---------------------------------------------------------------------------
# Terms
# ---------------------------------------------------------------------------

class Term:
    __slots__ = ()


@dataclass(frozen=True)
class Var(Term):
    name: str


@dataclass(frozen=True)
class Unit(Term):
    pass


@dataclass(frozen=True)
class Lit(Term):
    """Base-type literal; `base` names the TBase it inhabits."""

    base: str
    value: object


@dataclass(frozen=True)
class Lam(Term):
    param: str
    body: Term
    param_type: Type | None = None


@dataclass(frozen=True)
class App(Term):
    fn: Term
    arg: Term


@dataclass(frozen=True)
class Pair(Term):
    fst: Term
    snd: Term


@dataclass(frozen=True)
class Proj(Term):
    index: int  # 1 or 2
    tup: Term


@dataclass(frozen=True)
class Inj(Term):
    index: int  # 1 or 2
    val: Term
    ann: Type | None = None  # the full sum type, needed for synthesis


@dataclass(frozen=True)
class Case(Term):
    scrut: Term
    var1: str
    br1: Term
    var2: str
    br2: Term


@dataclass(frozen=True)
class Rec(Term):
    """Primitive recursion over a recursive type.

    `mu_ann`/`res_ann` are filled in by the typechecker during
    elaboration; evaluation needs them when the recursive type nests
    signals (the functorial action then has to build a `map`)."""

    var: str
    body: Term
    scrut: Term
    mu_ann: TMu | None = None
    res_ann: Type | None = None


@dataclass(frozen=True)
class Delay(Term):
    body: Term  # call-by-name: `delay t` is a value for arbitrary t


@dataclass(frozen=True)
class ApA(Term):
    """Applicative action on the universal modality (written <*>)."""

    fn: Term
    arg: Term


@dataclass(frozen=True)
class ApE(Term):
    """Applicative action landing in the existential modality (<**>)."""

    fn: Term
    arg: Term


@dataclass(frozen=True)
class Never(Term):
    # element type A, so `never : Ex A`; filled in by the typechecker
    # when the surface program leaves it off
    ann: Type | None = None


@dataclass(frozen=True)
class ChanAlloc(Term):
    ann: Type  # chan[A]


@dataclass(frozen=True)
class ChanLit(Term):
    id: int


@dataclass(frozen=True)
class Wait(Term):
    chan: Term


@dataclass(frozen=True)
class Watch(Term):
    sig: Term


@dataclass(frozen=True)
class Sync(Term):
    left: Term
    right: Term


@dataclass(frozen=True)
class ConsS(Term):
    """Signal cons `s ::_A t`; the element type travels with the term
    because the allocated heap cell is typed with it.  The annotation is
    optional in raw surface output and filled in by the typechecker."""

    head: Term
    tail: Term
    ann: Type | None = None


@dataclass(frozen=True)
class Head(Term):
    sig: Term


@dataclass(frozen=True)
class Tail(Term):
    sig: Term


@dataclass(frozen=True)
class Fix(Term):
    var: str
    body: Term
    ann: Type | None = None


@dataclass(frozen=True)
class Fold(Term):
    """Introduction for recursive types (cons[mu a.A] t)."""

    ann: TMu
    val: Term


@dataclass(frozen=True)
class Loc(Term):
    id: int


@dataclass(frozen=True)
class Prim(Term):
    """Saturated builtin operator application (add, gt, is_even)."""

    op: str
    args: tuple[Term, ...]


@dataclass(frozen=True)
class Ann(Term):
    term: Term
    ann: Type


TRUE = Inj(1, Unit(), BOOL)
FALSE = Inj(2, Unit(), BOOL)


def is_value(t: Term) -> bool:
    """The value subgrammar.  `delay t` is a value for arbitrary t."""
    match t:
        case Var() | Unit() | Lit() | Lam() | Loc() | ChanLit() | Delay() | Never():
            return True
        case Pair(a, b) | ConsS(a, b) | ApE(a, b) | Sync(a, b):
            return is_value(a) and is_value(b)
        case Inj(_, v) | Wait(v) | Watch(v) | Tail(v) | Fold(_, v):
            return is_value(v)
        case _:
            return False


# ---------------------------------------------------------------------------
# Free variables and substitution
# ---------------------------------------------------------------------------

_fresh_counter = itertools.count(1)


def fresh_name(base: str = "x") -> str:
    """Globally unique variable name derived from `base`."""
    stem = base.split("$", 1)[0]
    return f"{stem}${next(_fresh_counter)}"


def free_vars(t: Term) -> frozenset[str]:
    match t:
        case Var(name):
            return frozenset((name,))
        case Lam(param, body):
            return free_vars(body) - {param}
        case Case(scrut, v1, b1, v2, b2):
            return free_vars(scrut) | (free_vars(b1) - {v1}) | (free_vars(b2) - {v2})
        case Rec(var, body, scrut):
            return (free_vars(body) - {var}) | free_vars(scrut)
        case Fix(var, body):
            return free_vars(body) - {var}
        case App(a, b) | Pair(a, b) | ApA(a, b) | ApE(a, b) | Sync(a, b):
            return free_vars(a) | free_vars(b)
        case ConsS(a, b):
            return free_vars(a) | free_vars(b)
        case Proj(_, a) | Inj(_, a) | Delay(a) | Wait(a) | Watch(a) | Head(a) | Tail(a):
            return free_vars(a)
        case Fold(_, a) | Ann(a, _):
            return free_vars(a)
        case Prim(_, args):
            out: frozenset[str] = frozenset()
            for a in args:
                out |= free_vars(a)
            return out
        case _:
            return frozenset()


def substitute_term(t: Term, var: str, repl: Term) -> Term:
    """Capture-avoiding substitution t[repl/var]."""
    repl_fv = free_vars(repl)

    def go(t: Term) -> Term:
        match t:
            case Var(name):
                return repl if name == var else t
            case Lam(param, body, pty):
                if param == var:
                    return t
                if param in repl_fv and var in free_vars(body):
                    new = fresh_name(param)
                    body = substitute_term(body, param, Var(new))
                    param = new
                return Lam(param, go(body), pty)
            case Case(scrut, v1, b1, v2, b2):
                scrut = go(scrut)
                if v1 != var:
                    if v1 in repl_fv and var in free_vars(b1):
                        new = fresh_name(v1)
                        b1 = substitute_term(b1, v1, Var(new))
                        v1 = new
                    b1 = go(b1)
                if v2 != var:
                    if v2 in repl_fv and var in free_vars(b2):
                        new = fresh_name(v2)
                        b2 = substitute_term(b2, v2, Var(new))
                        v2 = new
                    b2 = go(b2)
                return Case(scrut, v1, b1, v2, b2)
            case Rec(rvar, body, scrut, mu_ann, res_ann):
                scrut = go(scrut)
                if rvar != var:
                    if rvar in repl_fv and var in free_vars(body):
                        new = fresh_name(rvar)
                        body = substitute_term(body, rvar, Var(new))
                        rvar = new
                    body = go(body)
                return Rec(rvar, body, scrut, mu_ann, res_ann)
            case Fix(fvar, body, ann):
                if fvar == var:
                    return t
                if fvar in repl_fv and var in free_vars(body):
                    new = fresh_name(fvar)
                    body = substitute_term(body, fvar, Var(new))
                    fvar = new
                return Fix(fvar, go(body), ann)
            case App(a, b):
                return App(go(a), go(b))
            case Pair(a, b):
                return Pair(go(a), go(b))
            case ApA(a, b):
                return ApA(go(a), go(b))
            case ApE(a, b):
                return ApE(go(a), go(b))
            case Sync(a, b):
                return Sync(go(a), go(b))
            case ConsS(a, b, ann):
                return ConsS(go(a), go(b), ann)
            case Proj(i, a):
                return Proj(i, go(a))
            case Inj(i, a, ann):
                return Inj(i, go(a), ann)
            case Delay(a):
                return Delay(go(a))
            case Wait(a):
                return Wait(go(a))
            case Watch(a):
                return Watch(go(a))
            case Head(a):
                return Head(go(a))
            case Tail(a):
                return Tail(go(a))
            case Fold(ann, a):
                return Fold(ann, go(a))
            case Ann(a, ann):
                return Ann(go(a), ann)
            case Prim(op, args):
                return Prim(op, tuple(go(a) for a in args))
            case _:
                return t

    if var not in free_vars(t):
        return t
    return go(t)


def alpha_equivalent(s: Term, t: Term) -> bool:
    """Structural equality up to consistent renaming of bound variables."""

    def go(s: Term, t: Term, env: dict[str, str]) -> bool:
        if type(s) is not type(t):
            return False
        match s, t:
            case Var(a), Var(b):
                return env.get(a, a) == b
            case Lam(p1, b1, _), Lam(p2, b2, _):
                return go(b1, b2, {**env, p1: p2})
            case Case(sc1, v1, l1, w1, r1), Case(sc2, v2, l2, w2, r2):
                return (
                    go(sc1, sc2, env)
                    and go(l1, l2, {**env, v1: v2})
                    and go(r1, r2, {**env, w1: w2})
                )
            case Rec(v1, b1, s1, _, _), Rec(v2, b2, s2, _, _):
                return go(s1, s2, env) and go(b1, b2, {**env, v1: v2})
            case Fix(v1, b1, _), Fix(v2, b2, _):
                return go(b1, b2, {**env, v1: v2})
            case _:
                fields_s = [getattr(s, f) for f in s.__dataclass_fields__]
                fields_t = [getattr(t, f) for f in t.__dataclass_fields__]
                for a, b in zip(fields_s, fields_t):
                    if isinstance(a, Term):
                        if not go(a, b, env):
                            return False
                    elif isinstance(a, tuple):
                        if len(a) != len(b) or not all(
                            go(x, y, env) for x, y in zip(a, b)
                        ):
                            return False
                    elif a != b:
                        return False
                return True

    return go(s, t, {})


# ---------------------------------------------------------------------------
# Pretty printing (diagnostics and snapshots; deterministic)
# ---------------------------------------------------------------------------

def term_to_str(t: Term) -> str:
    match t:
        case Var(name):
            return name
        case Unit():
            return "()"
        case Lit(base, value):
            if base == "Char":
                return f"'{value}'"
            if base == "String":
                return f'"{value}"'
            return str(value)
        case Lam(param, body):
            return f"(\\{param}. {term_to_str(body)})"
        case App(a, b):
            return f"({term_to_str(a)} {term_to_str(b)})"
        case Pair(a, b):
            return f"({term_to_str(a)}, {term_to_str(b)})"
        case Proj(i, a):
            return f"(pi{i} {term_to_str(a)})"
        case Inj(1, Unit(), ann) if ann == BOOL:
            return "True"
        case Inj(2, Unit(), ann) if ann == BOOL:
            return "False"
        case Inj(i, a, _):
            return f"(in{i} {term_to_str(a)})"
        case Case(s, v1, b1, v2, b2):
            return (
                f"(case {term_to_str(s)} of {{{v1}. {term_to_str(b1)}; "
                f"{v2}. {term_to_str(b2)}}})"
            )
        case Rec(v, b, s):
            return f"(rec {v}. {term_to_str(b)} {term_to_str(s)})"
        case Delay(a):
            return f"(delay {term_to_str(a)})"
        case ApA(a, b):
            return f"({term_to_str(a)} <*> {term_to_str(b)})"
        case ApE(a, b):
            return f"({term_to_str(a)} <**> {term_to_str(b)})"
        case Never():
            return "never"
        case ChanAlloc(ann):
            return f"chan[{type_to_str(ann)}]"
        case ChanLit(i):
            return f"k{i}"
        case Wait(a):
            return f"(wait {term_to_str(a)})"
        case Watch(a):
            return f"(watch {term_to_str(a)})"
        case Sync(a, b):
            return f"(sync {term_to_str(a)} {term_to_str(b)})"
        case ConsS(a, b, _):
            return f"({term_to_str(a)} :: {term_to_str(b)})"
        case Head(a):
            return f"(head {term_to_str(a)})"
        case Tail(a):
            return f"(tail {term_to_str(a)})"
        case Fix(v, b, _):
            return f"(fix {v}. {term_to_str(b)})"
        case Fold(ann, a):
            return f"(fold[{type_to_str(ann)}] {term_to_str(a)})"
        case Loc(i):
            return f"l{i}"
        case Prim(op, args):
            return f"({op} {' '.join(term_to_str(a) for a in args)})"
        case Ann(a, ty):
            return f"({term_to_str(a)} : {type_to_str(ty)})"
    raise TypeError(f"not a term: {t!r}")
