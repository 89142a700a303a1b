"""Desugaring from the surface language to core terms.

The pipeline per definition:
  1. merge multiple clauses into one body with a case split,
  2. inline where-definitions at their use sites,
  3. convert expressions to core (shorthands, pattern compilation,
     constructor encoding, structural recursion via rec),
  4. check guardedness of the remaining self-references and close the
     definition with a guarded fixed point.

A definition name is in scope for all later definitions; the whole
program becomes a chain of let-bindings.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..syntax import (
    Ann, ApA, ApE, App, Case, ChanAlloc, ChanLit, ConsS, Delay, Fix, Fold,
    Head, Inj, Lam, Lit, Never, Pair, Prim, Proj, Rec, Sync, Tail, Term,
    TMu, TVar, Type, Unit, Var, Wait, Watch,
    TRUE, FALSE, free_vars, fresh_name, substitute_term, substitute_type,
)
from .surface import (
    DataDecl, EAnn, EApp, ECase, EChanAlloc, ECon, EDelay, EHead,
    EIf, EIsEven, ELam, ELet, ELit, ENever, EOp, EPair, EProj, ETail, EUnit,
    EVar, EWait, EWatch, ESync, PCon, PCons, PPair, PUnit, PVar, PWild,
    SDef, SExpr, SPattern, SProgram,
)

MAYBE_CONS = {"Just": 1, "Nothing": 2}
SYNC_CONS = {"Fst": 1, "Left": 1, "Snd": 2, "Right": 2, "Both": 3}
BOOL_CONS = {"True": 1, "False": 2}


class DesugarError(Exception):
    def __init__(self, message: str, name: str | None = None):
        self.name = name
        if name:
            message = f"in definition {name}: {message}"
        super().__init__(message)


@dataclass
class ConstructorInfo:
    data_name: str
    data_type: Type          # the elaborated declared type
    index: int               # 0-based position in the declaration
    total: int
    arg_types: list[Type]    # self-references appear as TVar(data_name)


@dataclass
class CoreDef:
    name: str
    signature: Type | None
    term: Term


@dataclass
class CoreProgram:
    defs: list[CoreDef]
    channels: list[tuple[int, str, Type]]  # (id, name, type) in decl order
    datas: dict[str, DataDecl]

    def channel_id(self, name: str) -> int | None:
        for cid, n, _ in self.channels:
            if n == name:
                return cid
        return None

    def lookup_def(self, name: str) -> CoreDef | None:
        for d in self.defs:
            if d.name == name:
                return d
        return None

    def term_for(self, name: str) -> Term:
        """The named definition with all earlier definitions let-bound
        around it (annotated where signatures exist)."""
        target = self.lookup_def(name)
        if target is None:
            raise DesugarError(f"no definition named {name}")
        term = target.term
        for d in reversed(self.defs[: self.defs.index(target)]):
            if d.name not in free_vars(term):
                continue
            bound = Ann(d.term, d.signature) if d.signature is not None else d.term
            term = App(Lam(d.name, term), bound)
        return term


@dataclass
class _DefContext:
    """What pattern compilation needs to know about the enclosing
    definition to recognise structural recursion."""

    name: str | None
    params: list[str]


def desugar_program(prog: SProgram) -> CoreProgram:
    datas = {d.name: d for d in prog.datas}
    cons_table: dict[str, ConstructorInfo] = {}
    for d in prog.datas:
        for i, (cname, args) in enumerate(d.constructors):
            if cname in cons_table:
                raise DesugarError(f"duplicate constructor {cname}")
            cons_table[cname] = ConstructorInfo(
                d.name, d.elaborated, i, len(d.constructors), args
            )
    channels = [(i + 1, c.name, c.ann) for i, c in enumerate(prog.chans)]
    chan_ids = {name: cid for cid, name, _ in channels}
    ds = _Desugarer(cons_table, chan_ids, datas)
    core_defs = [
        CoreDef(d.name, d.signature, ds.desugar_def(d)) for d in prog.defs
    ]
    return CoreProgram(core_defs, channels, datas)


class _Desugarer:
    def __init__(
        self,
        cons_table: dict[str, ConstructorInfo],
        chan_ids: dict[str, int],
        datas: dict[str, DataDecl],
    ):
        self.cons = cons_table
        self.chan_ids = chan_ids
        self.datas = datas

    # -- definitions ---------------------------------------------------

    def desugar_def(self, d: SDef) -> Term:
        params, body = merge_clauses(d)
        body = inline_wheres(body, list(d.clauses[0].wheres), self)
        param_names: list[str] = []
        bindings: list[tuple[SPattern, str]] = []
        for p in params:
            if isinstance(p, PVar):
                param_names.append(p.name)
            else:
                s = fresh_name("s")
                param_names.append(s)
                bindings.append((p, s))
        ctx = _DefContext(d.name, param_names)
        core = self.convert(body, ctx)
        for pat, s in reversed(bindings):
            core = self.bind_pattern(pat, Var(s), core, ctx)
        for name in reversed(param_names):
            core = Lam(name, core)
        if d.name in free_vars(core):
            core = close_fix(core, d.name)
        return core

    # -- expressions -----------------------------------------------------

    def convert(self, e: SExpr, ctx: _DefContext) -> Term:
        match e:
            case EVar(name):
                if name in self.chan_ids:
                    return ChanLit(self.chan_ids[name])
                return Var(name)
            case EUnit():
                return Unit()
            case ELit(base, value):
                return Lit(base, value)
            case ECon(name):
                return self.constructor(name, [], e)
            case EApp():
                head, args = spine(e)
                if isinstance(head, ECon):
                    return self.constructor(
                        head.name, [self.convert(a, ctx) for a in args], e
                    )
                out = self.convert(head, ctx)
                for a in args:
                    out = App(out, self.convert(a, ctx))
                return out
            case ELam(params, body):
                core = self.convert(body, ctx)
                names: list[tuple[str, SPattern | None]] = []
                for p in params:
                    if isinstance(p, PVar):
                        names.append((p.name, None))
                    elif isinstance(p, PWild):
                        names.append((fresh_name("w"), None))
                    else:
                        names.append((fresh_name("s"), p))
                for name, pat in reversed(names):
                    if pat is not None:
                        core = self.bind_pattern(pat, Var(name), core, ctx)
                    core = Lam(name, core)
                return core
            case EPair(a, b):
                return Pair(self.convert(a, ctx), self.convert(b, ctx))
            case EOp(op, a, b):
                ca, cb = self.convert(a, ctx), self.convert(b, ctx)
                match op:
                    case "::":
                        return ConsS(ca, cb)
                    case "|>":
                        return ApE(Delay(ca), cb)
                    case "<*>":
                        return ApA(ca, cb)
                    case "<**>":
                        return ApE(ca, cb)
                    case "+":
                        return Prim("add", (ca, cb))
                    case "-":
                        return Prim("sub", (ca, cb))
                    case ">":
                        return Prim("gt", (ca, cb))
                raise DesugarError(f"unknown operator {op}")
            case ELet(pat, value, body):
                cv = self.convert(value, ctx)
                cb = self.convert(body, ctx)
                return self.bind_pattern(pat, cv, cb, ctx)
            case EIf(c, t, o):
                u1, u2 = fresh_name("u"), fresh_name("u")
                return Case(self.convert(c, ctx), u1, self.convert(t, ctx),
                            u2, self.convert(o, ctx))
            case ECase(scrut, alts):
                return self.compile_case(self.convert(scrut, ctx), list(alts), ctx)
            case EDelay(body):
                return Delay(self.convert(body, ctx))
            case ENever():
                return Never()
            case EWait(c):
                return Wait(self.convert(c, ctx))
            case EWatch(s):
                return Watch(self.convert(s, ctx))
            case ESync(a, b):
                return Sync(self.convert(a, ctx), self.convert(b, ctx))
            case EHead(s):
                return Head(self.convert(s, ctx))
            case ETail(s):
                return Tail(self.convert(s, ctx))
            case EProj(i, s):
                return Proj(i, self.convert(s, ctx))
            case EIsEven(a):
                return Prim("is_even", (self.convert(a, ctx),))
            case EChanAlloc(ann):
                return ChanAlloc(ann)
            case EAnn(inner, ann):
                return Ann(self.convert(inner, ctx), ann)
        raise DesugarError(f"cannot desugar {e!r}")

    # -- constructors ----------------------------------------------------

    def constructor(self, name: str, args: list[Term], src: SExpr) -> Term:
        if name in MAYBE_CONS:
            if name == "Just":
                _expect_arity(name, args, 1)
                return Inj(1, args[0])
            _expect_arity(name, args, 0)
            return Inj(2, Unit())
        if name in BOOL_CONS:
            _expect_arity(name, args, 0)
            return TRUE if name == "True" else FALSE
        if name in SYNC_CONS:
            if name == "Both":
                _expect_arity(name, args, 2)
                return Inj(2, Pair(args[0], args[1]))
            _expect_arity(name, args, 1)
            return Inj(1, Inj(SYNC_CONS[name], args[0]))
        info = self.cons.get(name)
        if info is None:
            raise DesugarError(f"unknown constructor {name}")
        _expect_arity(name, args, len(info.arg_types))
        payload: Term = Unit()
        if args:
            payload = args[-1]
            for a in reversed(args[:-1]):
                payload = Pair(a, payload)
        term = payload
        data_ty = info.data_type
        if isinstance(data_ty, TMu):
            sum_ty = substitute_type(data_ty.body, data_ty.var, data_ty)
        else:
            sum_ty = data_ty
        # walk down the right-nested sum to this constructor's slot,
        # annotating each injection with its sum type
        path: list[tuple[int, Type]] = []
        ty = sum_ty
        for _ in range(info.index):
            path.append((2, ty))
            ty = ty.right
        if info.index < info.total - 1:
            path.append((1, ty))
        for idx, ann in reversed(path):
            term = Inj(idx, term, ann)
        if isinstance(data_ty, TMu):
            term = Fold(data_ty, term)
        return term

    # -- patterns ----------------------------------------------------------

    def bind_pattern(self, pat: SPattern, scrut: Term, body: Term,
                     ctx: _DefContext) -> Term:
        match pat:
            case PVar(name):
                return App(Lam(name, body), scrut)
            case PWild():
                return App(Lam(fresh_name("w"), body), scrut)
            case PUnit():
                return App(Lam(fresh_name("u"), body), scrut)
            case PPair(a, b):
                p = fresh_name("p")
                inner = self.bind_pattern(a, Proj(1, Var(p)),
                                          self.bind_pattern(b, Proj(2, Var(p)), body, ctx),
                                          ctx)
                return App(Lam(p, inner), scrut)
            case PCons(h, tl):
                s = fresh_name("s")
                inner = self.bind_pattern(h, Head(Var(s)),
                                          self.bind_pattern(tl, Tail(Var(s)), body, ctx),
                                          ctx)
                return App(Lam(s, inner), scrut)
            case PCon():
                return self.compile_case(scrut, [(pat, _Raw(body))], ctx)
        raise DesugarError(f"cannot bind pattern {pat!r}")

    def compile_case(self, scrut: Term, alts: list[tuple[SPattern, object]],
                     ctx: _DefContext) -> Term:
        """Alternatives carry either surface expressions or already
        converted core terms (wrapped in _Raw)."""
        def rhs(x: object) -> Term:
            return x.term if isinstance(x, _Raw) else self.convert(x, ctx)

        if len(alts) == 1 and not isinstance(alts[0][0], PCon):
            pat, b = alts[0]
            return self.bind_pattern(pat, scrut, rhs(b), ctx)
        heads = [p for p, _ in alts]
        if not all(isinstance(p, PCon) for p in heads):
            raise DesugarError("mixed pattern forms in a case expression")
        names = {p.name for p in heads}
        if names <= set(MAYBE_CONS):
            return self._case_maybe(scrut, alts, rhs, ctx)
        if names <= set(BOOL_CONS):
            return self._case_bool(scrut, alts, rhs)
        if names <= set(SYNC_CONS):
            return self._case_sync(scrut, alts, rhs, ctx)
        return self._case_data(scrut, alts, rhs, ctx)

    def _find(self, alts, names):
        for p, b in alts:
            if p.name in names:
                return p, b
        return None

    def _case_maybe(self, scrut, alts, rhs, ctx):
        just = self._find(alts, ("Just",))
        nothing = self._find(alts, ("Nothing",))
        if just is None or nothing is None:
            raise DesugarError("case over Maybe must handle Just and Nothing")
        x = fresh_name("x")
        jbody = self.bind_pattern(just[0].args[0], Var(x), rhs(just[1]), ctx) \
            if just[0].args else rhs(just[1])
        return Case(scrut, x, jbody, fresh_name("u"), rhs(nothing[1]))

    def _case_bool(self, scrut, alts, rhs):
        t = self._find(alts, ("True",))
        f = self._find(alts, ("False",))
        if t is None or f is None:
            raise DesugarError("case over Bool must handle True and False")
        return Case(scrut, fresh_name("u"), rhs(t[1]), fresh_name("u"), rhs(f[1]))

    def _case_sync(self, scrut, alts, rhs, ctx):
        first = self._find(alts, ("Fst", "Left"))
        second = self._find(alts, ("Snd", "Right"))
        both = self._find(alts, ("Both",))
        if first is None or second is None or both is None:
            raise DesugarError(
                "case over a synchronisation must handle Fst/Left, Snd/Right and Both"
            )
        u = fresh_name("u")
        a = fresh_name("a")
        b = fresh_name("b")
        fb = self.bind_pattern(first[0].args[0], Var(a), rhs(first[1]), ctx)
        sb = self.bind_pattern(second[0].args[0], Var(b), rhs(second[1]), ctx)
        w = fresh_name("w")
        bb = self.bind_pattern(
            both[0].args[0], Proj(1, Var(w)),
            self.bind_pattern(both[0].args[1], Proj(2, Var(w)), rhs(both[1]), ctx),
            ctx,
        )
        return Case(scrut, u, Case(Var(u), a, fb, b, sb), w, bb)

    def _case_data(self, scrut, alts, rhs, ctx):
        info = self.cons.get(alts[0][0].name)
        if info is None:
            raise DesugarError(f"unknown constructor {alts[0][0].name} in pattern")
        decl = self.datas[info.data_name]
        by_con: dict[str, tuple[PCon, object]] = {}
        for p, b in alts:
            ci = self.cons.get(p.name)
            if ci is None or ci.data_name != info.data_name:
                raise DesugarError(
                    f"pattern {p.name} does not belong to data {info.data_name}"
                )
            by_con[p.name] = (p, b)
        missing = [c for c, _ in decl.constructors if c not in by_con]
        if missing:
            raise DesugarError(
                f"non-exhaustive case over {info.data_name}: missing {', '.join(missing)}"
            )
        recursive = isinstance(info.data_type, TMu)
        if recursive:
            return self._case_data_rec(scrut, decl, by_con, rhs, ctx)
        # plain (non-recursive) data: nested case over the sum encoding
        def build(idx: int, val: Term) -> Term:
            cname, arg_tys = decl.constructors[idx]
            pat, b = by_con[cname]
            if idx == len(decl.constructors) - 1:
                return self._bind_con_args(pat, arg_tys, val, rhs(b), ctx, None)
            x = fresh_name("x")
            y = fresh_name("y")
            leaf = self._bind_con_args(pat, arg_tys, Var(x), rhs(b), ctx, None)
            return Case(val, x, leaf, y, build(idx + 1, Var(y)))

        return build(0, scrut)

    def _case_data_rec(self, scrut, decl, by_con, rhs, ctx):
        """Case over a recursive data type: compile to primitive
        recursion.  Pattern variables in recursive positions bind a pair
        of (subterm, recursive result); a direct recursive call on such a
        variable becomes the second projection, other uses the first."""
        r = fresh_name("r")
        data_name = decl.name

        def build(idx: int, val: Term) -> Term:
            cname, arg_tys = decl.constructors[idx]
            pat, b = by_con[cname]
            leaf_body = rhs(b)
            if idx == len(decl.constructors) - 1:
                return self._bind_con_args(pat, arg_tys, val, leaf_body, ctx, data_name)
            x = fresh_name("x")
            y = fresh_name("y")
            leaf = self._bind_con_args(pat, arg_tys, Var(x), leaf_body, ctx, data_name)
            return Case(val, x, leaf, y, build(idx + 1, Var(y)))

        return Rec(r, build(0, Var(r)), scrut)

    def _bind_con_args(self, pat: PCon, arg_tys: list[Type], payload: Term,
                       body: Term, ctx: _DefContext, rec_data: str | None) -> Term:
        """Bind a constructor pattern's argument patterns against the
        right-nested payload.  In the recursive compilation (rec_data
        set), arguments in recursive positions are pairs; rewrite the
        body accordingly before binding."""
        if not pat.args:
            return body
        if len(pat.args) != len(arg_tys):
            raise DesugarError(f"constructor {pat.name} arity mismatch in pattern")
        comps: list[Term] = []
        cur = payload
        for i in range(len(arg_tys)):
            if i == len(arg_tys) - 1:
                comps.append(cur)
            else:
                comps.append(Proj(1, cur))
                cur = Proj(2, cur)
        for p, ty, comp in reversed(list(zip(pat.args, arg_tys, comps))):
            is_rec = rec_data is not None and ty == TVar(rec_data)
            if is_rec:
                if not isinstance(p, (PVar, PWild)):
                    raise DesugarError(
                        "recursive constructor arguments must be plain variables"
                    )
                name = p.name if isinstance(p, PVar) else fresh_name("w")
                body = rewrite_structural(body, ctx, name)
                body = App(Lam(name, body), comp)
            else:
                body = self.bind_pattern(p, comp, body, ctx)
        return body


@dataclass
class _Raw:
    term: Term


def _expect_arity(name: str, args: list, n: int) -> None:
    if len(args) != n:
        raise DesugarError(f"constructor {name} expects {n} argument(s)")


def spine(e: SExpr) -> tuple[SExpr, list[SExpr]]:
    args: list[SExpr] = []
    while isinstance(e, EApp):
        args.append(e.arg)
        e = e.fn
    return e, list(reversed(args))


# ---------------------------------------------------------------------------
# Clause merging and where-inlining
# ---------------------------------------------------------------------------

def merge_clauses(d: SDef) -> tuple[list[SPattern], SExpr]:
    clauses = d.clauses
    if len(clauses) == 1:
        return list(clauses[0].params), clauses[0].body
    arity = len(clauses[0].params)
    if any(len(c.params) != arity for c in clauses):
        raise DesugarError("clauses disagree on arity", d.name)
    if any(c.wheres for c in clauses):
        raise DesugarError("where-blocks on multi-clause definitions are unsupported",
                           d.name)
    split = None
    for i in range(arity):
        col = [c.params[i] for c in clauses]
        if all(isinstance(p, PVar) for p in col):
            names = {p.name for p in col}
            if len(names) > 1:
                raise DesugarError(
                    "variable parameters must be named consistently across clauses",
                    d.name,
                )
            continue
        if split is not None:
            raise DesugarError("clauses may split on at most one parameter", d.name)
        split = i
    if split is None:
        raise DesugarError("duplicate clauses", d.name)
    s = fresh_name("s")
    params: list[SPattern] = list(clauses[0].params)
    params[split] = PVar(s)
    alts = tuple((c.params[split], c.body) for c in clauses)
    return params, ECase(EVar(s), alts)


def inline_wheres(body: SExpr, wheres: list[SDef], ds: "_Desugarer") -> SExpr:
    """Replace references to where-bound helpers by their definitions.
    Later helpers may refer to earlier ones; substitution runs from the
    last helper backwards, updating pending helper bodies as it goes."""
    exprs: list[tuple[str, SExpr]] = []
    for w in wheres:
        params, wbody = merge_clauses(w)
        wbody = inline_wheres(wbody, list(w.clauses[0].wheres), ds) \
            if len(w.clauses) == 1 else wbody
        expr: SExpr = ELam(tuple(params), wbody) if params else wbody
        exprs.append((w.name, expr))
    for i in range(len(exprs) - 1, -1, -1):
        name, expr = exprs[i]
        if name in (n for n, _ in exprs[:i]):
            raise DesugarError(f"where-helper {name} defined twice")
        body = subst_expr(body, name, expr)
        for j in range(i):
            exprs[j] = (exprs[j][0], subst_expr(exprs[j][1], name, expr))
    return body


def pattern_binds(p: SPattern) -> set[str]:
    match p:
        case PVar(name):
            return {name}
        case PPair(a, b) | PCons(a, b):
            return pattern_binds(a) | pattern_binds(b)
        case PCon(_, args):
            out: set[str] = set()
            for a in args:
                out |= pattern_binds(a)
            return out
        case _:
            return set()


def subst_expr(e: SExpr, name: str, repl: SExpr) -> SExpr:
    """Substitution on surface expressions; stops at shadowing binders.
    Replacement expressions are closed except for top-level names, so no
    capture renaming is needed."""
    def go(e: SExpr) -> SExpr:
        match e:
            case EVar(n):
                return repl if n == name else e
            case ELam(params, body):
                if any(name in pattern_binds(p) for p in params):
                    return e
                return ELam(params, go(body))
            case ELet(pat, value, body):
                nb = body if name in pattern_binds(pat) else go(body)
                return ELet(pat, go(value), nb)
            case ECase(scrut, alts):
                new_alts = tuple(
                    (p, b if name in pattern_binds(p) else go(b)) for p, b in alts
                )
                return ECase(go(scrut), new_alts)
            case EApp(f, a):
                return EApp(go(f), go(a))
            case EPair(a, b):
                return EPair(go(a), go(b))
            case EOp(op, a, b):
                return EOp(op, go(a), go(b))
            case EIf(c, t, o):
                return EIf(go(c), go(t), go(o))
            case EDelay(b):
                return EDelay(go(b))
            case EWait(c):
                return EWait(go(c))
            case EWatch(s):
                return EWatch(go(s))
            case ESync(a, b):
                return ESync(go(a), go(b))
            case EHead(s):
                return EHead(go(s))
            case ETail(s):
                return ETail(go(s))
            case EProj(i, s):
                return EProj(i, go(s))
            case EIsEven(a):
                return EIsEven(go(a))
            case EAnn(inner, ann):
                return EAnn(go(inner), ann)
            case _:
                return e

    return go(e)


# ---------------------------------------------------------------------------
# Structural recursion rewriting
# ---------------------------------------------------------------------------

def rewrite_structural(body: Term, ctx: _DefContext, y: str) -> Term:
    """In a rec-compiled branch, y is bound to the (subterm, result)
    pair.  Recursive calls of the enclosing definition on y become the
    second projection; all other uses of y become the first."""

    def is_rec_call(t: Term) -> bool:
        args: list[Term] = []
        while isinstance(t, App):
            args.append(t.arg)
            t = t.fn
        if not (isinstance(t, Var) and ctx.name is not None and t.name == ctx.name):
            return False
        args.reverse()
        if len(args) != len(ctx.params):
            return False
        seen_y = False
        for a, p in zip(args, ctx.params):
            if isinstance(a, Var) and a.name == y:
                seen_y = True
            elif not (isinstance(a, Var) and a.name == p):
                return False
        return seen_y

    def go(t: Term) -> Term:
        if is_rec_call(t):
            return Proj(2, Var(y))
        match t:
            case Var(n):
                return Proj(1, Var(y)) if n == y else t
            case Lam(p, b, ty):
                return t if p == y else Lam(p, go(b), ty)
            case App(a, b):
                return App(go(a), go(b))
            case Pair(a, b):
                return Pair(go(a), go(b))
            case Proj(i, a):
                return Proj(i, go(a))
            case Inj(i, a, ann):
                return Inj(i, go(a), ann)
            case Case(s, v1, b1, v2, b2):
                return Case(go(s), v1, b1 if v1 == y else go(b1),
                            v2, b2 if v2 == y else go(b2))
            case Rec(v, b, s, m, res):
                return Rec(v, b if v == y else go(b), go(s), m, res)
            case Fix(v, b, ann):
                return t if v == y else Fix(v, go(b), ann)
            case Delay(b):
                return Delay(go(b))
            case ApA(a, b):
                return ApA(go(a), go(b))
            case ApE(a, b):
                return ApE(go(a), go(b))
            case Sync(a, b):
                return Sync(go(a), go(b))
            case ConsS(a, b, ann):
                return ConsS(go(a), go(b), ann)
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

    return go(body)


# ---------------------------------------------------------------------------
# Guarded fixed points
# ---------------------------------------------------------------------------

def close_fix(term: Term, fname: str) -> Term:
    """Turn a recursive definition body into a guarded fixed point.
    Every free occurrence of the definition's name must sit under a
    delay; each such delay t becomes delay (\\r'. t[r'/f]) <*> r."""
    check_guarded(term, fname, under_delay=False)
    r = fresh_name("r")

    def go(t: Term) -> Term:
        if fname not in free_vars(t):
            return t
        match t:
            case Delay(body):
                rp = fresh_name("rp")
                return ApA(Delay(Lam(rp, substitute_term(body, fname, Var(rp)))),
                           Var(r))
            case Lam(p, b, ty):
                return Lam(p, go(b), ty)
            case App(a, b):
                return App(go(a), go(b))
            case Pair(a, b):
                return Pair(go(a), go(b))
            case Proj(i, a):
                return Proj(i, go(a))
            case Inj(i, a, ann):
                return Inj(i, go(a), ann)
            case Case(s, v1, b1, v2, b2):
                return Case(go(s), v1, go(b1), v2, go(b2))
            case Rec(v, b, s, m, res):
                return Rec(v, go(b), go(s), m, res)
            case Fix(v, b, ann):
                return Fix(v, go(b), ann)
            case ApA(a, b):
                return ApA(go(a), go(b))
            case ApE(a, b):
                return ApE(go(a), go(b))
            case Sync(a, b):
                return Sync(go(a), go(b))
            case ConsS(a, b, ann):
                return ConsS(go(a), go(b), ann)
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
                raise DesugarError(
                    f"unguarded recursive reference to {fname}", fname
                )

    return Fix(r, go(term))


def check_guarded(t: Term, fname: str, under_delay: bool) -> None:
    match t:
        case Var(n):
            if n == fname and not under_delay:
                raise DesugarError(
                    f"recursive call to {fname} is not guarded by a delay", fname
                )
        case Delay(body):
            check_guarded(body, fname, True)
        case Lam(p, b, _):
            if p != fname:
                check_guarded(b, fname, under_delay)
        case Case(s, v1, b1, v2, b2):
            check_guarded(s, fname, under_delay)
            if v1 != fname:
                check_guarded(b1, fname, under_delay)
            if v2 != fname:
                check_guarded(b2, fname, under_delay)
        case Rec(v, b, s, _, _):
            check_guarded(s, fname, under_delay)
            if v != fname:
                check_guarded(b, fname, under_delay)
        case Fix(v, b, _):
            if v != fname:
                check_guarded(b, fname, under_delay)
        case App(a, b) | Pair(a, b) | ApA(a, b) | ApE(a, b) | Sync(a, b):
            check_guarded(a, fname, under_delay)
            check_guarded(b, fname, under_delay)
        case ConsS(a, b, _):
            check_guarded(a, fname, under_delay)
            check_guarded(b, fname, under_delay)
        case (Proj(_, a) | Inj(_, a) | Wait(a) | Watch(a) | Head(a)
              | Tail(a) | Fold(_, a) | Ann(a, _)):
            check_guarded(a, fname, under_delay)
        case Prim(_, args):
            for a in args:
                check_guarded(a, fname, under_delay)
        case _:
            pass
