"""Bidirectional typechecker for the core calculus.

The checker is a direct transcription of the typing rules, threaded with
three contexts: variable bindings, heap-location typings, and channel
typings.  The surface judgement is the empty-heap special case.  Checking
elaborates: it returns the term with `rec` nodes annotated with the
recursive type and result type, which the evaluator needs to build the
functorial action for signal-nested recursive types.
"""

from __future__ import annotations

from dataclasses import dataclass

from .store import ChannelContext
from .syntax import (
    Ann, ApA, ApE, App, Case, ChanAlloc, ChanLit, ConsS, Delay, Fix, Fold,
    Head, Inj, Lam, Lit, Loc, Never, Pair, Prim, Proj, Rec, Sync, Tail, Term,
    TBase, TChan, TFun, TLaterA, TLaterE, TMu, TProd, TSig, TSum, TUnit, TVar,
    Type, Unit, Var, Wait, Watch,
    BOOL, INT, check_type_formation, substitute_type, term_to_str, type_to_str,
    unfold_mu,
)


class TypeCheckError(Exception):
    """Structured diagnostic: failing rule, offending subterm, and the
    expected/actual types where applicable."""

    def __init__(
        self,
        rule: str,
        term: Term,
        message: str,
        expected: Type | None = None,
        actual: Type | None = None,
    ):
        self.rule = rule
        self.term = term
        self.expected = expected
        self.actual = actual
        self.message = message
        super().__init__(self.render())

    def render(self) -> str:
        parts = [f"[{self.rule}] {self.message}"]
        if self.expected is not None:
            parts.append(f"expected: {type_to_str(self.expected)}")
        if self.actual is not None:
            parts.append(f"actual: {type_to_str(self.actual)}")
        parts.append(f"in: {term_to_str(self.term)}")
        return "; ".join(parts)

    def to_record(self) -> dict:
        return {
            "rule": self.rule,
            "term": term_to_str(self.term),
            "expected": None if self.expected is None else type_to_str(self.expected),
            "actual": None if self.actual is None else type_to_str(self.actual),
            "message": self.message,
        }


@dataclass
class TypingContext:
    """Ordered variable bindings; lookup returns the rightmost one."""

    bindings: list[tuple[str, Type]]

    @staticmethod
    def empty() -> "TypingContext":
        return TypingContext([])

    def extended(self, var: str, ty: Type) -> "TypingContext":
        return TypingContext(self.bindings + [(var, ty)])

    def lookup(self, var: str) -> Type | None:
        for name, ty in reversed(self.bindings):
            if name == var:
                return ty
        return None


class HeapContext:
    """Ordered heap-location typings l :_A."""

    __slots__ = ("entries",)

    def __init__(self, entries: dict[int, Type] | None = None):
        self.entries: dict[int, Type] = dict(entries) if entries else {}

    @staticmethod
    def empty() -> "HeapContext":
        return HeapContext()

    def lookup(self, loc: int) -> Type | None:
        return self.entries.get(loc)

    def extended(self, loc: int, ty: Type) -> "HeapContext":
        out = HeapContext(self.entries)
        out.entries[loc] = ty
        return out

    def is_subset_of(self, other: "HeapContext") -> bool:
        return all(other.entries.get(k) == v for k, v in self.entries.items())

    def __eq__(self, other: object) -> bool:
        return isinstance(other, HeapContext) and self.entries == other.entries

    def __repr__(self) -> str:
        return f"HeapContext({self.entries!r})"


# builtin operator signatures: op -> (arg types, result type)
PRIM_SIGS: dict[str, tuple[tuple[Type, ...], Type]] = {
    "add": ((INT, INT), INT),
    "sub": ((INT, INT), INT),
    "gt": ((INT, INT), BOOL),
    "is_even": ((INT,), BOOL),
}


def type_equal(a: Type, b: Type) -> bool:
    """Structural equality up to renaming of mu-bound type variables."""
    if isinstance(a, TMu) and isinstance(b, TMu):
        return type_equal(a.body, substitute_type_var(b.body, b.var, a.var))
    if type(a) is not type(b):
        return False
    match a:
        case TVar(n):
            return n == b.name
        case TUnit():
            return True
        case TBase(n):
            return n == b.name
        case TProd(x, y) | TSum(x, y):
            return type_equal(x, b.left) and type_equal(y, b.right)
        case TFun(x, y):
            return type_equal(x, b.arg) and type_equal(y, b.res)
        case TSig(x) | TChan(x) | TLaterE(x) | TLaterA(x):
            return type_equal(x, b.arg)
    return False


def substitute_type_var(ty: Type, old: str, new: str) -> Type:
    return substitute_type(ty, old, TVar(new))


class Checker:
    def __init__(self, heap_ctx: HeapContext | None = None, chan_ctx: ChannelContext | None = None):
        self.heap_ctx = heap_ctx or HeapContext.empty()
        self.chan_ctx = chan_ctx or ChannelContext()

    # -- synthesis ---------------------------------------------------------

    def synth(self, gamma: TypingContext, t: Term) -> tuple[Type, Term]:
        match t:
            case Var(name):
                ty = gamma.lookup(name)
                if ty is None:
                    raise TypeCheckError("var", t, f"unbound variable {name}")
                return ty, t
            case Unit():
                return TUnit(), t
            case Lit(base, _):
                return TBase(base), t
            case Ann(inner, ty):
                if not check_type_formation(None, ty):
                    raise TypeCheckError("annotation", t, "annotation is not a closed type")
                return ty, self.check(gamma, inner, ty)
            case Lam(param, body, pty):
                if pty is None:
                    raise TypeCheckError(
                        "lambda", t, "cannot synthesise type of unannotated lambda"
                    )
                bty, body2 = self.synth(gamma.extended(param, pty), body)
                return TFun(pty, bty), Lam(param, body2, pty)
            case App(fn, arg):
                return self._synth_app(gamma, t, fn, arg)
            case Pair(a, b):
                ta, a2 = self.synth(gamma, a)
                tb, b2 = self.synth(gamma, b)
                return TProd(ta, tb), Pair(a2, b2)
            case Proj(i, tup):
                tt, tup2 = self.synth(gamma, tup)
                if not isinstance(tt, TProd):
                    raise TypeCheckError(
                        "projection", t, "projection of a non-product", actual=tt
                    )
                return (tt.left if i == 1 else tt.right), Proj(i, tup2)
            case Inj(i, val, ann):
                if ann is None:
                    raise TypeCheckError(
                        "injection", t, "unannotated injection cannot be synthesised"
                    )
                if not isinstance(ann, TSum):
                    raise TypeCheckError("injection", t, "injection annotation must be a sum")
                comp = ann.left if i == 1 else ann.right
                return ann, Inj(i, self.check(gamma, val, comp), ann)
            case Case(scrut, v1, b1, v2, b2):
                ts, scrut2 = self.synth(gamma, scrut)
                if not isinstance(ts, TSum):
                    raise TypeCheckError("case", t, "case scrutinee is not a sum", actual=ts)
                tb, b1_2 = self.synth(gamma.extended(v1, ts.left), b1)
                b2_2 = self.check(gamma.extended(v2, ts.right), b2, tb)
                return tb, Case(scrut2, v1, b1_2, v2, b2_2)
            case Delay(body):
                tb, body2 = self.synth(gamma, body)
                return TLaterA(tb), Delay(body2)
            case ApA(fn, arg):
                return self._synth_apa(gamma, t, fn, arg)
            case ApE(fn, arg):
                return self._synth_ape(gamma, t, fn, arg)
            case Never(ann):
                if ann is None:
                    raise TypeCheckError(
                        "never", t, "never needs a checking context or annotation"
                    )
                return TLaterE(ann), t
            case ChanAlloc(ann):
                return TChan(ann), t
            case ChanLit(cid):
                ty = self.chan_ctx.lookup(cid)
                if ty is None:
                    raise TypeCheckError("channel", t, f"channel k{cid} not in context")
                return TChan(ty), t
            case Wait(chan):
                tc, chan2 = self.synth(gamma, chan)
                if not isinstance(tc, TChan):
                    raise TypeCheckError("wait", t, "wait expects a channel", actual=tc)
                return TLaterE(tc.arg), Wait(chan2)
            case Watch(sig):
                ts, sig2 = self.synth(gamma, sig)
                if not (
                    isinstance(ts, TSig)
                    and isinstance(ts.arg, TSum)
                    and type_equal(ts.arg.right, TUnit())
                ):
                    raise TypeCheckError(
                        "watch", t, "watch expects a partial signal Sig (A + 1)", actual=ts
                    )
                return TLaterE(ts.arg.left), Watch(sig2)
            case Sync(a, b):
                ta, a2 = self.synth(gamma, a)
                tb, b2 = self.synth(gamma, b)
                if not isinstance(ta, TLaterE):
                    raise TypeCheckError("sync", t, "sync operand must be existentially delayed", actual=ta)
                if not isinstance(tb, TLaterE):
                    raise TypeCheckError("sync", t, "sync operand must be existentially delayed", actual=tb)
                a1, b1 = ta.arg, tb.arg
                return TLaterE(TSum(TSum(a1, b1), TProd(a1, b1))), Sync(a2, b2)
            case ConsS(head, tail, ann):
                if ann is None:
                    th, head2 = self.synth(gamma, head)
                    tail2 = self.check(gamma, tail, TLaterE(TSig(th)))
                    return TSig(th), ConsS(head2, tail2, th)
                if not check_type_formation(None, ann):
                    raise TypeCheckError("cons", t, "cons annotation is not a closed type")
                head2 = self.check(gamma, head, ann)
                tail2 = self.check(gamma, tail, TLaterE(TSig(ann)))
                return TSig(ann), ConsS(head2, tail2, ann)
            case Head(sig):
                ts, sig2 = self.synth(gamma, sig)
                if not isinstance(ts, TSig):
                    raise TypeCheckError("head", t, "head expects a signal", actual=ts)
                return ts.arg, Head(sig2)
            case Tail(sig):
                ts, sig2 = self.synth(gamma, sig)
                if not isinstance(ts, TSig):
                    raise TypeCheckError("tail", t, "tail expects a signal", actual=ts)
                return TLaterE(TSig(ts.arg)), Tail(sig2)
            case Fix(var, body, ann):
                if ann is None:
                    raise TypeCheckError("fix", t, "unannotated fix cannot be synthesised")
                body2 = self.check(gamma.extended(var, TLaterA(ann)), body, ann)
                return ann, Fix(var, body2, ann)
            case Fold(ann, val):
                if not check_type_formation(None, ann):
                    raise TypeCheckError("fold", t, "recursive-type annotation not well formed")
                val2 = self.check(gamma, val, unfold_mu(ann))
                return ann, Fold(ann, val2)
            case Loc(lid):
                ty = self.heap_ctx.lookup(lid)
                if ty is None:
                    raise TypeCheckError("location", t, f"location l{lid} not in heap context")
                return TSig(ty), t
            case Prim(op, args):
                sig = PRIM_SIGS.get(op)
                if sig is None:
                    raise TypeCheckError("builtin", t, f"unknown builtin {op}")
                arg_tys, res = sig
                if len(args) != len(arg_tys):
                    raise TypeCheckError("builtin", t, f"builtin {op} arity mismatch")
                args2 = tuple(
                    self.check(gamma, a, ty) for a, ty in zip(args, arg_tys)
                )
                return res, Prim(op, args2)
            case Rec():
                raise TypeCheckError(
                    "rec", t, "rec is check-only; annotate the expected type"
                )
        raise TypeCheckError("synth", t, "term form cannot be synthesised")

    def _synth_app(self, gamma: TypingContext, t: Term, fn: Term, arg: Term) -> tuple[Type, Term]:
        # let-style application: infer the argument first for an
        # unannotated lambda in function position
        if isinstance(fn, Lam) and fn.param_type is None:
            ta, arg2 = self.synth(gamma, arg)
            tb, body2 = self.synth(gamma.extended(fn.param, ta), fn.body)
            return tb, App(Lam(fn.param, body2, ta), arg2)
        tf, fn2 = self.synth(gamma, fn)
        if not isinstance(tf, TFun):
            raise TypeCheckError("app", t, "application of a non-function", actual=tf)
        arg2 = self.check(gamma, arg, tf.arg)
        return tf.res, App(fn2, arg2)

    def _synth_apa(self, gamma: TypingContext, t: Term, fn: Term, arg: Term) -> tuple[Type, Term]:
        try:
            tf, fn2 = self.synth(gamma, fn)
        except TypeCheckError:
            ta, arg2 = self.synth(gamma, arg)
            if not isinstance(ta, TLaterA):
                raise TypeCheckError(
                    "ap-universal", t,
                    "<*> expects a universally delayed second operand", actual=ta,
                )
            raise TypeCheckError(
                "ap-universal", t,
                "<*> with unsynthesisable first operand needs a checking context",
            )
        if not (isinstance(tf, TLaterA) and isinstance(tf.arg, TFun)):
            raise TypeCheckError(
                "ap-universal", t,
                "<*> expects first operand of type All (A -> B)", actual=tf,
            )
        arg2 = self.check(gamma, arg, TLaterA(tf.arg.arg))
        return TLaterA(tf.arg.res), ApA(fn2, arg2)

    def _synth_ape(self, gamma: TypingContext, t: Term, fn: Term, arg: Term) -> tuple[Type, Term]:
        try:
            tf, fn2 = self.synth(gamma, fn)
        except TypeCheckError:
            tf = None
        if tf is not None:
            if not (isinstance(tf, TLaterA) and isinstance(tf.arg, TFun)):
                raise TypeCheckError(
                    "ap-existential", t,
                    "<**> expects first operand of type All (A -> B)", actual=tf,
                )
            arg2 = self.check(gamma, arg, TLaterE(tf.arg.arg))
            return TLaterE(tf.arg.res), ApE(fn2, arg2)
        ta, arg2 = self.synth(gamma, arg)
        if not isinstance(ta, TLaterE):
            raise TypeCheckError(
                "ap-existential", t,
                "<**> expects second operand of type Ex A", actual=ta,
            )
        raise TypeCheckError(
            "ap-existential", t,
            "<**> with unsynthesisable first operand needs a checking context",
        )

    # -- checking ----------------------------------------------------------

    def check(self, gamma: TypingContext, t: Term, expected: Type) -> Term:
        match t:
            case Lam(param, body, pty):
                if not isinstance(expected, TFun):
                    raise TypeCheckError(
                        "lambda", t, "lambda checked against non-function type",
                        expected=expected,
                    )
                if pty is not None and not type_equal(pty, expected.arg):
                    raise TypeCheckError(
                        "lambda", t, "parameter annotation disagrees with expected type",
                        expected=expected.arg, actual=pty,
                    )
                body2 = self.check(gamma.extended(param, expected.arg), body, expected.res)
                return Lam(param, body2, expected.arg)
            case Fix(var, body, ann):
                if ann is not None and not type_equal(ann, expected):
                    raise TypeCheckError(
                        "fix", t, "fix annotation disagrees with expected type",
                        expected=expected, actual=ann,
                    )
                body2 = self.check(gamma.extended(var, TLaterA(expected)), body, expected)
                return Fix(var, body2, expected)
            case Rec(var, body, scrut, _, _):
                ts, scrut2 = self.synth(gamma, scrut)
                if not isinstance(ts, TMu):
                    raise TypeCheckError(
                        "rec", t, "rec scrutinee must have a recursive type", actual=ts
                    )
                xty = substitute_type(ts.body, ts.var, TProd(ts, expected))
                body2 = self.check(gamma.extended(var, xty), body, expected)
                return Rec(var, body2, scrut2, mu_ann=ts, res_ann=expected)
            case Inj(i, val, ann):
                if not isinstance(expected, TSum):
                    raise TypeCheckError(
                        "injection", t, "injection checked against non-sum type",
                        expected=expected,
                    )
                if ann is not None and not type_equal(ann, expected):
                    raise TypeCheckError(
                        "injection", t, "injection annotation disagrees with expected type",
                        expected=expected, actual=ann,
                    )
                comp = expected.left if i == 1 else expected.right
                return Inj(i, self.check(gamma, val, comp), expected)
            case Pair(a, b):
                if not isinstance(expected, TProd):
                    raise TypeCheckError(
                        "pair", t, "pair checked against non-product type", expected=expected
                    )
                return Pair(
                    self.check(gamma, a, expected.left),
                    self.check(gamma, b, expected.right),
                )
            case Case(scrut, v1, b1, v2, b2):
                ts, scrut2 = self.synth(gamma, scrut)
                if not isinstance(ts, TSum):
                    raise TypeCheckError("case", t, "case scrutinee is not a sum", actual=ts)
                b1_2 = self.check(gamma.extended(v1, ts.left), b1, expected)
                b2_2 = self.check(gamma.extended(v2, ts.right), b2, expected)
                return Case(scrut2, v1, b1_2, v2, b2_2)
            case Delay(body):
                if not isinstance(expected, TLaterA):
                    raise TypeCheckError(
                        "delay", t, "delay checked against a non-All type", expected=expected
                    )
                return Delay(self.check(gamma, body, expected.arg))
            case ApA(fn, arg):
                if not isinstance(expected, TLaterA):
                    raise TypeCheckError(
                        "ap-universal", t, "<*> produces an All type", expected=expected
                    )
                return self._check_ap(gamma, t, fn, arg, expected.arg, TLaterA, ApA)
            case ApE(fn, arg):
                if not isinstance(expected, TLaterE):
                    raise TypeCheckError(
                        "ap-existential", t, "<**> produces an Ex type", expected=expected
                    )
                return self._check_ap(gamma, t, fn, arg, expected.arg, TLaterE, ApE)
            case Never(ann):
                if not isinstance(expected, TLaterE):
                    raise TypeCheckError(
                        "never", t, "never inhabits the existential modality",
                        expected=expected,
                    )
                if ann is not None and not type_equal(ann, expected.arg):
                    raise TypeCheckError(
                        "never", t, "never annotation disagrees with expected type",
                        expected=expected.arg, actual=ann,
                    )
                return Never(expected.arg)
            case ConsS(head, tail, ann):
                if not isinstance(expected, TSig):
                    raise TypeCheckError(
                        "cons", t, "cons checked against a non-signal type",
                        expected=expected,
                    )
                if ann is not None and not type_equal(ann, expected.arg):
                    raise TypeCheckError(
                        "cons", t, "cons annotation disagrees with expected type",
                        expected=expected.arg, actual=ann,
                    )
                return ConsS(
                    self.check(gamma, head, expected.arg),
                    self.check(gamma, tail, TLaterE(TSig(expected.arg))),
                    expected.arg,
                )
            case Head(sig):
                return Head(self.check(gamma, sig, TSig(expected)))
            case Watch(sig):
                if not isinstance(expected, TLaterE):
                    raise TypeCheckError(
                        "watch", t, "watch produces an Ex type", expected=expected
                    )
                sig2 = self.check(gamma, sig, TSig(TSum(expected.arg, TUnit())))
                return Watch(sig2)
            case Wait(chan):
                if not isinstance(expected, TLaterE):
                    raise TypeCheckError(
                        "wait", t, "wait produces an Ex type", expected=expected
                    )
                chan2 = self.check(gamma, chan, TChan(expected.arg))
                return Wait(chan2)
            case App(fn, arg) if isinstance(fn, Lam) and fn.param_type is None:
                ta, arg2 = self.synth(gamma, arg)
                body2 = self.check(gamma.extended(fn.param, ta), fn.body, expected)
                return App(Lam(fn.param, body2, ta), arg2)
            case _:
                actual, t2 = self.synth(gamma, t)
                if not type_equal(actual, expected):
                    raise TypeCheckError(
                        "mismatch", t, "type mismatch", expected=expected, actual=actual
                    )
                return t2

    def _check_ap(self, gamma, t, fn, arg, res_ty, later, ctor):
        """Shared checking logic for <*> and <**>: infer one operand,
        push the resulting function type into the other."""
        rule = "ap-universal" if ctor is ApA else "ap-existential"
        try:
            ta, arg2 = self.synth(gamma, arg)
        except TypeCheckError:
            ta = None
        if ta is not None:
            if not isinstance(ta, later):
                raise TypeCheckError(
                    rule, t,
                    f"{'<*>' if ctor is ApA else '<**>'} expects a delayed second operand",
                    actual=ta,
                )
            fn2 = self.check(gamma, fn, TLaterA(TFun(ta.arg, res_ty)))
            return ctor(fn2, arg2)
        tf, fn2 = self.synth(gamma, fn)
        if not (isinstance(tf, TLaterA) and isinstance(tf.arg, TFun)):
            raise TypeCheckError(
                rule, t, "expects first operand of type All (A -> B)", actual=tf
            )
        if not type_equal(tf.arg.res, res_ty):
            raise TypeCheckError(
                rule, t, "delayed result type mismatch", expected=res_ty, actual=tf.arg.res
            )
        arg2 = self.check(gamma, arg, later(tf.arg.arg))
        return ctor(fn2, arg2)


def typecheck(
    gamma: TypingContext,
    heap_ctx: HeapContext,
    chan_ctx: ChannelContext,
    t: Term,
    ty: Type,
) -> Term:
    """Check t against the closed type ty; returns the elaborated term."""
    if not check_type_formation(None, ty):
        raise TypeCheckError("formation", t, f"not a closed type: {type_to_str(ty)}")
    return Checker(heap_ctx, chan_ctx).check(gamma, t, ty)


def synthesize(
    gamma: TypingContext, heap_ctx: HeapContext, chan_ctx: ChannelContext, t: Term
) -> tuple[Type, Term]:
    return Checker(heap_ctx, chan_ctx).synth(gamma, t)


# ---------------------------------------------------------------------------
# Heap typing
# ---------------------------------------------------------------------------

def heaptype(heap) -> HeapContext:
    """Ordered location typings of a heap."""
    ctx = HeapContext.empty()
    for cell in heap:
        ctx = ctx.extended(cell.loc, cell.ann)
    return ctx


def check_heap_now(chan_ctx: ChannelContext, heap) -> None:
    """Well-typedness of a now-heap: walking left to right, each cell's
    head and tail typecheck under the typings of the strict prefix."""
    ctx = HeapContext.empty()
    gamma = TypingContext.empty()
    for cell in heap:
        checker = Checker(ctx, chan_ctx)
        try:
            checker.check(gamma, cell.sig.head, cell.ann)
        except TypeCheckError as e:
            raise TypeCheckError(
                "heap-now", cell.sig.head,
                f"head of cell l{cell.loc} ill-typed: {e.message}",
                expected=cell.ann, actual=e.actual,
            ) from e
        try:
            checker.check(gamma, cell.sig.tail, TLaterE(TSig(cell.ann)))
        except TypeCheckError as e:
            raise TypeCheckError(
                "heap-now", cell.sig.tail,
                f"tail of cell l{cell.loc} ill-typed: {e.message}",
                expected=TLaterE(TSig(cell.ann)), actual=e.actual,
            ) from e
        ctx = ctx.extended(cell.loc, cell.ann)


def check_heap_earlier(heap_ctx: HeapContext, chan_ctx: ChannelContext, heap) -> None:
    """Well-typedness of an earlier heap under an ambient heap context:
    the leftmost cell is checked under the given context alone and each
    following cell additionally sees the typings of the cells before it."""
    ctx = heap_ctx
    gamma = TypingContext.empty()
    for cell in heap:
        checker = Checker(ctx, chan_ctx)
        try:
            checker.check(gamma, cell.sig.head, cell.ann)
            checker.check(gamma, cell.sig.tail, TLaterE(TSig(cell.ann)))
        except TypeCheckError as e:
            raise TypeCheckError(
                "heap-earlier", cell.sig.head,
                f"cell l{cell.loc} ill-typed in earlier heap: {e.message}",
            ) from e
        ctx = ctx.extended(cell.loc, cell.ann)


def check_environment(store, chan_ctx: ChannelContext) -> None:
    """Full store well-typedness: now-heap well typed, earlier heap well
    typed under the now-heap's typings."""
    check_heap_now(chan_ctx, store.now)
    check_heap_earlier(heaptype(store.now), chan_ctx, store.earlier)
