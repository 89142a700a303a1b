"""Surface-language abstract syntax and pretty printer.

The surface AST mirrors what the parser sees: shorthands, patterns,
multi-clause definitions and where-blocks are still present.  The
pretty printer emits fully parenthesised source that re-parses to an
alpha-equivalent tree.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..syntax import Type, type_to_str


# -- patterns ----------------------------------------------------------------

class SPattern:
    __slots__ = ()


@dataclass(frozen=True)
class PVar(SPattern):
    name: str


@dataclass(frozen=True)
class PWild(SPattern):
    pass


@dataclass(frozen=True)
class PUnit(SPattern):
    pass


@dataclass(frozen=True)
class PPair(SPattern):
    fst: SPattern
    snd: SPattern


@dataclass(frozen=True)
class PCons(SPattern):
    """Signal pattern x :: xs."""

    head: SPattern
    tail: SPattern


@dataclass(frozen=True)
class PCon(SPattern):
    """Constructor pattern, either a declared-data constructor or one of
    the builtin shorthands (Just/Nothing, Left/Right/Fst/Snd/Both,
    True/False)."""

    name: str
    args: tuple[SPattern, ...] = ()


# -- expressions -------------------------------------------------------------

class SExpr:
    __slots__ = ()


@dataclass(frozen=True)
class EVar(SExpr):
    name: str


@dataclass(frozen=True)
class EUnit(SExpr):
    pass


@dataclass(frozen=True)
class ELit(SExpr):
    base: str
    value: object


@dataclass(frozen=True)
class ECon(SExpr):
    """Constructor used as an expression head."""

    name: str


@dataclass(frozen=True)
class ELam(SExpr):
    params: tuple[SPattern, ...]
    body: SExpr


@dataclass(frozen=True)
class EApp(SExpr):
    fn: SExpr
    arg: SExpr


@dataclass(frozen=True)
class EPair(SExpr):
    fst: SExpr
    snd: SExpr


@dataclass(frozen=True)
class EOp(SExpr):
    """Binary operator: ::, |>, <*>, <**>, +, -, >."""

    op: str
    left: SExpr
    right: SExpr


@dataclass(frozen=True)
class ELet(SExpr):
    pat: SPattern
    value: SExpr
    body: SExpr


@dataclass(frozen=True)
class EIf(SExpr):
    cond: SExpr
    then: SExpr
    other: SExpr


@dataclass(frozen=True)
class ECase(SExpr):
    scrut: SExpr
    alts: tuple[tuple[SPattern, SExpr], ...]


@dataclass(frozen=True)
class EDelay(SExpr):
    body: SExpr


@dataclass(frozen=True)
class ENever(SExpr):
    pass


@dataclass(frozen=True)
class EWait(SExpr):
    chan: SExpr


@dataclass(frozen=True)
class EWatch(SExpr):
    sig: SExpr


@dataclass(frozen=True)
class ESync(SExpr):
    left: SExpr
    right: SExpr


@dataclass(frozen=True)
class EHead(SExpr):
    sig: SExpr


@dataclass(frozen=True)
class ETail(SExpr):
    sig: SExpr


@dataclass(frozen=True)
class EProj(SExpr):
    index: int
    tup: SExpr


@dataclass(frozen=True)
class EIsEven(SExpr):
    arg: SExpr


@dataclass(frozen=True)
class EChanAlloc(SExpr):
    ann: Type


@dataclass(frozen=True)
class EAnn(SExpr):
    expr: SExpr
    ann: Type


# -- top level ---------------------------------------------------------------

@dataclass(frozen=True)
class SClause:
    params: tuple[SPattern, ...]
    body: SExpr
    wheres: tuple["SDef", ...] = ()


@dataclass
class SDef:
    name: str
    signature: Type | None
    clauses: list[SClause]
    line: int = 0


@dataclass(frozen=True)
class ConDecl:
    name: str
    arg_names: tuple[str, ...]  # type names / structural types as parsed


@dataclass
class DataDecl:
    name: str
    constructors: list[tuple[str, list[Type]]]
    elaborated: Type | None = None  # filled by the desugarer
    line: int = 0


@dataclass
class ChanDecl:
    name: str
    ann: Type
    line: int = 0


@dataclass
class SProgram:
    datas: list[DataDecl]
    chans: list[ChanDecl]
    defs: list[SDef]


# ---------------------------------------------------------------------------
# Pretty printer (fully parenthesised, re-parseable)
# ---------------------------------------------------------------------------

def pattern_to_str(p: SPattern) -> str:
    match p:
        case PVar(name):
            return name
        case PWild():
            return "_"
        case PUnit():
            return "()"
        case PPair(a, b):
            return f"({pattern_to_str(a)}, {pattern_to_str(b)})"
        case PCons(a, b):
            return f"({pattern_to_str(a)} :: {pattern_to_str(b)})"
        case PCon(name, args):
            if not args:
                return name
            inner = " ".join(pattern_to_str(a) for a in args)
            return f"({name} {inner})"
    raise TypeError(f"not a pattern: {p!r}")


def expr_to_str(e: SExpr) -> str:
    match e:
        case EVar(name):
            return name
        case EUnit():
            return "()"
        case ELit(base, value):
            if base == "Char":
                return f"'{value}'"
            if base == "String":
                return f'"{value}"'
            return str(value)
        case ECon(name):
            return name
        case ELam(params, body):
            ps = " ".join(pattern_to_str(p) for p in params)
            return f"(\\{ps}. {expr_to_str(body)})"
        case EApp(fn, arg):
            return f"({expr_to_str(fn)} {expr_to_str(arg)})"
        case EPair(a, b):
            return f"({expr_to_str(a)}, {expr_to_str(b)})"
        case EOp(op, a, b):
            return f"({expr_to_str(a)} {op} {expr_to_str(b)})"
        case ELet(pat, value, body):
            return (
                f"(let {pattern_to_str(pat)} = {expr_to_str(value)} "
                f"in {expr_to_str(body)})"
            )
        case EIf(c, t, o):
            return f"(if {expr_to_str(c)} then {expr_to_str(t)} else {expr_to_str(o)})"
        case ECase(scrut, alts):
            branches = "; ".join(
                f"{pattern_to_str(p)} -> {expr_to_str(b)}" for p, b in alts
            )
            return f"(case {expr_to_str(scrut)} of {{ {branches} }})"
        case EDelay(body):
            return f"(delay {expr_to_str(body)})"
        case ENever():
            return "never"
        case EWait(c):
            return f"(wait {expr_to_str(c)})"
        case EWatch(s):
            return f"(watch {expr_to_str(s)})"
        case ESync(a, b):
            return f"(sync {expr_to_str(a)} {expr_to_str(b)})"
        case EHead(s):
            return f"(head {expr_to_str(s)})"
        case ETail(s):
            return f"(tail {expr_to_str(s)})"
        case EProj(i, s):
            kw = "fst" if i == 1 else "snd"
            return f"({kw} {expr_to_str(s)})"
        case EIsEven(a):
            return f"(isEven {expr_to_str(a)})"
        case EChanAlloc(ann):
            return f"chan[{type_to_str(ann)}]"
        case EAnn(inner, ann):
            return f"({expr_to_str(inner)} : {type_to_str(ann)})"
    raise TypeError(f"not a surface expression: {e!r}")


def program_to_str(prog: SProgram) -> str:
    lines: list[str] = []
    for d in prog.datas:
        cons = " | ".join(
            c if not tys else c + " " + " ".join(_type_atom(t) for t in tys)
            for c, tys in d.constructors
        )
        lines.append(f"data {d.name} = {cons}")
    for c in prog.chans:
        lines.append(f"chan {c.name} : {type_to_str(c.ann)}")
    for d in prog.defs:
        if d.signature is not None:
            lines.append(f"{d.name} : {type_to_str(d.signature)}")
        for cl in d.clauses:
            ps = "".join(" " + pattern_to_str(p) for p in cl.params)
            line = f"{d.name}{ps} = {expr_to_str(cl.body)}"
            if cl.wheres:
                wparts = []
                for w in cl.wheres:
                    for wcl in w.clauses:
                        wps = "".join(" " + pattern_to_str(p) for p in wcl.params)
                        wparts.append(f"{w.name}{wps} = {expr_to_str(wcl.body)}")
                line += " where { " + "; ".join(wparts) + " }"
            lines.append(line)
    return "\n".join(lines) + "\n"


def _type_atom(t: Type) -> str:
    s = type_to_str(t)
    if s.startswith("(") or " " not in s:
        return s
    return f"({s})"
