"""Big-step call-by-value evaluator.

Evaluation mutates an Environment (two-zone store plus channel context
plus allocation counters) and is metered: every evaluation step burns one
unit of budget, so divergent programs surface as BudgetExceeded instead
of hanging.  `delay t` is a value for arbitrary t; forcing happens only
when the surrounding reactive machinery advances a delayed computation.
"""

from __future__ import annotations

import sys

from .store import (
    Environment, StoredSignal, alloc_channel, alloc_location,
    insert_now_rightmost, lookup_now,
)
from .syntax import (
    Ann, ApA, ApE, App, Case, ChanAlloc, ChanLit, ConsS, Delay, Fix, Fold,
    Head, Inj, Lam, Lit, Loc, Never, Pair, Prim, Proj, Rec, Sync, Tail, Term,
    TFun, TMu, TProd, TSig, TSum, TVar, Type, Unit, Var, Wait, Watch,
    TRUE, FALSE, fresh_name, substitute_term, substitute_type, term_to_str,
)

sys.setrecursionlimit(100_000)

DEFAULT_BUDGET = 10_000_000


class EvalFault(Exception):
    """The machine got stuck: no evaluation rule applies."""

    def __init__(self, message: str, term: Term | None = None):
        if term is not None:
            message = f"{message}: {term_to_str(term)}"
        super().__init__(message)


class BudgetExceeded(Exception):
    """The step budget ran out before evaluation finished."""


class Budget:
    """Shared fuel counter, threaded through a whole trace run."""

    __slots__ = ("remaining",)

    def __init__(self, limit: int = DEFAULT_BUDGET):
        self.remaining = limit

    def spend(self) -> None:
        self.remaining -= 1
        if self.remaining < 0:
            raise BudgetExceeded("evaluation step budget exceeded")


def evaluate(t: Term, env: Environment, budget: Budget) -> Term:
    """Evaluate t to a value, allocating into env's now-heap."""
    budget.spend()
    match t:
        case Unit() | Lit() | Lam() | Loc() | ChanLit() | Delay() | Never():
            return t
        case Var(name):
            raise EvalFault(f"unbound variable {name} at runtime", t)
        case Ann(inner, _):
            return evaluate(inner, env, budget)
        case App(fn, arg):
            vf = evaluate(fn, env, budget)
            if not isinstance(vf, Lam):
                raise EvalFault("application of a non-function", t)
            va = evaluate(arg, env, budget)
            return evaluate(substitute_term(vf.body, vf.param, va), env, budget)
        case Pair(a, b):
            return Pair(evaluate(a, env, budget), evaluate(b, env, budget))
        case Proj(i, tup):
            vt = evaluate(tup, env, budget)
            if not isinstance(vt, Pair):
                raise EvalFault("projection of a non-pair", t)
            return vt.fst if i == 1 else vt.snd
        case Inj(i, val, ann):
            return Inj(i, evaluate(val, env, budget), ann)
        case Case(scrut, v1, b1, v2, b2):
            vs = evaluate(scrut, env, budget)
            if not isinstance(vs, Inj):
                raise EvalFault("case scrutinee is not an injection", t)
            var, branch = (v1, b1) if vs.index == 1 else (v2, b2)
            return evaluate(substitute_term(branch, var, vs.val), env, budget)
        case Rec(var, body, scrut, mu_ann, res_ann):
            vs = evaluate(scrut, env, budget)
            if not isinstance(vs, Fold):
                raise EvalFault("rec scrutinee is not a recursive-type value", t)
            mu = mu_ann if mu_ann is not None else vs.ann
            if not isinstance(mu, TMu):
                raise EvalFault("rec without a recursive-type annotation", t)
            y = fresh_name("y")
            step = Lam(
                y,
                Pair(Var(y), Rec(var, body, Var(y), mu, res_ann)),
            )
            mapped = apply_fmap(
                mu.body, mu.var, step, vs.val,
                src=mu, tgt=TProd(mu, res_ann) if res_ann is not None else None,
            )
            w = evaluate(mapped, env, budget)
            return evaluate(substitute_term(body, var, w), env, budget)
        case ApA(fn, arg):
            vf = evaluate(fn, env, budget)
            va = evaluate(arg, env, budget)
            if not isinstance(vf, Delay) or not isinstance(va, Delay):
                raise EvalFault("<*> operands must be universal delays", t)
            # the application under the delay stays unevaluated
            return Delay(App(vf.body, va.body))
        case ApE(fn, arg):
            return ApE(evaluate(fn, env, budget), evaluate(arg, env, budget))
        case Wait(chan):
            return Wait(evaluate(chan, env, budget))
        case Watch(sig):
            return Watch(evaluate(sig, env, budget))
        case Sync(a, b):
            return Sync(evaluate(a, env, budget), evaluate(b, env, budget))
        case Tail(sig):
            return Tail(evaluate(sig, env, budget))
        case Head(sig):
            vs = evaluate(sig, env, budget)
            if not isinstance(vs, Loc):
                raise EvalFault("head of a non-signal value", t)
            return lookup_now(env, vs.id).head
        case ConsS(head, tail, ann):
            vh = evaluate(head, env, budget)
            vt = evaluate(tail, env, budget)
            loc = alloc_location(env)
            insert_now_rightmost(
                env, loc, ann, StoredSignal(vh, vt, updated=env.step_flag)
            )
            return Loc(loc)
        case Fix(var, body, ann):
            unrolled = substitute_term(body, var, Delay(Fix(var, body, ann)))
            return evaluate(unrolled, env, budget)
        case Fold(ann, val):
            return Fold(ann, evaluate(val, env, budget))
        case ChanAlloc(ann):
            cid = alloc_channel(env)
            env.channels.add(cid, ann)
            return ChanLit(cid)
        case Prim(op, args):
            vals = tuple(evaluate(a, env, budget) for a in args)
            return apply_prim(op, vals, t)
    raise EvalFault("no evaluation rule applies", t)


def apply_prim(op: str, vals: tuple[Term, ...], src: Term) -> Term:
    def as_int(v: Term) -> int:
        if isinstance(v, Lit) and v.base == "Int":
            return v.value
        raise EvalFault(f"builtin {op} expects Int arguments", src)

    match op:
        case "add":
            return Lit("Int", as_int(vals[0]) + as_int(vals[1]))
        case "sub":
            return Lit("Int", as_int(vals[0]) - as_int(vals[1]))
        case "gt":
            return TRUE if as_int(vals[0]) > as_int(vals[1]) else FALSE
        case "is_even":
            return TRUE if as_int(vals[0]) % 2 == 0 else FALSE
    raise EvalFault(f"unknown builtin {op}", src)


# ---------------------------------------------------------------------------
# Functorial action for recursive types
# ---------------------------------------------------------------------------

def map_core_term(src_elem: Type, tgt_elem: Type) -> Term:
    """The signal map combinator as a closed core term,
    fix r. \\f. \\s. f (head s) :: (delay (\\m. m f) <*> r) <**> tail s."""
    r = fresh_name("r")
    f = fresh_name("f")
    s = fresh_name("s")
    m = fresh_name("m")
    fn_ty = TFun(src_elem, tgt_elem)
    body = Lam(
        f,
        Lam(
            s,
            ConsS(
                App(Var(f), Head(Var(s))),
                ApE(
                    ApA(Delay(Lam(m, App(Var(m), Var(f)))), Var(r)),
                    Tail(Var(s)),
                ),
                tgt_elem,
            ),
            TSig(src_elem),
        ),
        fn_ty,
    )
    return Fix(r, body, TFun(fn_ty, TFun(TSig(src_elem), TSig(tgt_elem))))


def apply_fmap(
    shape: Type,
    var: str,
    f: Term,
    value: Term,
    src: Type | None = None,
    tgt: Type | None = None,
) -> Term:
    """Build the term fmap_shape f value, structural in `shape`.  The
    occurrences of the type variable `var` mark where f applies.  `src`
    and `tgt` (f's domain and codomain) are needed to annotate sums and
    signal elements in the result; tgt may be None when shape has no
    variable occurrences."""
    match shape:
        case TVar(name) if name == var:
            return App(f, value)
        case TProd(a, b):
            return Pair(
                apply_fmap(a, var, f, Proj(1, value), src, tgt),
                apply_fmap(b, var, f, Proj(2, value), src, tgt),
            )
        case TSum(a, b):
            out_ty = None
            if tgt is not None:
                out_ty = substitute_type(shape, var, tgt)
            x = fresh_name("x")
            return Case(
                value,
                x, Inj(1, apply_fmap(a, var, f, Var(x), src, tgt), out_ty),
                x, Inj(2, apply_fmap(b, var, f, Var(x), src, tgt), out_ty),
            )
        case TSig(a):
            if not _mentions(a, var):
                return value
            if src is None or tgt is None:
                raise EvalFault("cannot map over a signal without type annotations")
            src_elem = substitute_type(a, var, src)
            tgt_elem = substitute_type(a, var, tgt)
            y = fresh_name("y")
            inner = Lam(y, apply_fmap(a, var, f, Var(y), src, tgt), src_elem)
            return App(App(map_core_term(src_elem, tgt_elem), inner), value)
        case _:
            # closed shapes (unit, base, functions, delays, nested mu)
            return value


def _mentions(ty: Type, var: str) -> bool:
    match ty:
        case TVar(name):
            return name == var
        case TProd(a, b) | TSum(a, b):
            return _mentions(a, var) or _mentions(b, var)
        case TSig(a):
            return _mentions(a, var)
        case _:
            return False
