"""Recursive-descent parser for the surface language.

Top-level items (data declarations, channel declarations, type
signatures, definition clauses) start in column 1; continuation lines
are indented.  The parser first splits the token stream at column-1
tokens and then parses each item independently.

Operator precedence, loosest to tightest:
    lambda / let / if / case   (extend to the right)
    ::                          (right associative)
    |>  <*>  <**>               (left associative)
    >                           (non associative)
    +  -                        (left associative)
    application                 (left associative)
"""

from __future__ import annotations

from ..syntax import (
    TBase, TChan, TFun, TLaterA, TLaterE, TMu, TProd, TSig, TSum, TUnit,
    TVar, Type, BOOL, maybe_type, sync_type, check_type_formation,
)
from .lexer import ParseError, Token, tokenize
from .surface import (
    ChanDecl, DataDecl, EAnn, EApp, ECase, EChanAlloc, ECon, EDelay, EHead,
    EIf, EIsEven, ELam, ELet, ELit, ENever, EOp, EPair, EProj, ETail, EUnit,
    EVar, EWait, EWatch, ESync, PCon, PCons, PPair, PUnit, PVar, PWild,
    SClause, SDef, SExpr, SPattern, SProgram,
)

BASE_TYPES = {"Int": TBase("Int"), "Char": TBase("Char"), "String": TBase("String")}
AP_OPS = {"|>", "<*>", "<**>"}
SHORTHAND_CONS = {"Just", "Nothing", "Fst", "Snd", "Left", "Right", "Both", "True", "False"}


class _Item:
    """One top-level item: the token slice starting at a column-1 token."""

    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.pos = 0

    def peek(self, ahead: int = 0) -> Token:
        i = min(self.pos + ahead, len(self.tokens) - 1)
        return self.tokens[i]

    def next(self) -> Token:
        tok = self.peek()
        if tok.kind != "eof":
            self.pos += 1
        return tok

    def expect(self, kind: str, value: str | None = None) -> Token:
        tok = self.peek()
        if tok.kind != kind or (value is not None and tok.value != value):
            want = value if value is not None else kind
            raise ParseError(f"expected {want}, found {tok.value or tok.kind!r}",
                             tok.line, tok.col)
        return self.next()

    def at(self, kind: str, value: str | None = None) -> bool:
        tok = self.peek()
        return tok.kind == kind and (value is None or tok.value == value)

    def at_end(self) -> bool:
        return self.peek().kind == "eof"


def _split_items(tokens: list[Token]) -> list[list[Token]]:
    eof = tokens[-1]
    items: list[list[Token]] = []
    current: list[Token] = []
    for tok in tokens[:-1]:
        if tok.col == 1 and current:
            items.append(current + [eof])
            current = []
        current.append(tok)
    if current:
        items.append(current + [eof])
    return items


class Parser:
    def __init__(self) -> None:
        # data name -> elaborated type, populated in file order
        self.data_types: dict[str, Type] = {}
        self.current_data: str | None = None

    # -- programs ------------------------------------------------------

    def parse_program(self, source: str) -> SProgram:
        groups = _split_items(tokenize(source))
        if not groups:
            raise ParseError("empty program", 1, 1)
        datas: list[DataDecl] = []
        chans: list[ChanDecl] = []
        defs: list[SDef] = []
        sigs: dict[str, Type] = {}
        by_name: dict[str, SDef] = {}
        for group in groups:
            item = _Item(group)
            tok = item.peek()
            if tok.kind == "keyword" and tok.value == "data":
                decl = self.parse_data(item)
                datas.append(decl)
            elif tok.kind == "keyword" and tok.value == "chan":
                item.next()
                name = item.expect("ident").value
                item.expect("punct", ":")
                chans.append(ChanDecl(name, self.parse_type(item), tok.line))
            elif tok.kind == "ident":
                name = item.next().value
                if item.at("punct", ":"):
                    item.next()
                    sigs[name] = self.parse_type(item)
                    self._finish(item)
                    continue
                clause = self.parse_clause(item)
                if name in by_name:
                    by_name[name].clauses.append(clause)
                else:
                    d = SDef(name, sigs.get(name), [clause], tok.line)
                    by_name[name] = d
                    defs.append(d)
            else:
                raise ParseError(
                    f"expected a top-level item, found {tok.value!r}",
                    tok.line, tok.col,
                )
        for d in defs:
            if d.signature is None:
                d.signature = sigs.get(d.name)
        return SProgram(datas, chans, defs)

    def _finish(self, item: _Item) -> None:
        tok = item.peek()
        if tok.kind != "eof":
            raise ParseError(f"unexpected {tok.value!r}", tok.line, tok.col)

    def parse_data(self, item: _Item) -> DataDecl:
        start = item.expect("keyword", "data")
        name = item.expect("conid").value
        if name in self.data_types or name in BASE_TYPES:
            raise ParseError(f"type {name} already declared", start.line, start.col)
        item.expect("punct", "=")
        self.current_data = name
        constructors: list[tuple[str, list[Type]]] = []
        while True:
            cname = item.expect("conid").value
            args: list[Type] = []
            while not item.at("punct", "|") and not item.at_end():
                args.append(self.parse_type_atom(item))
            constructors.append((cname, args))
            if item.at("punct", "|"):
                item.next()
                continue
            break
        self._finish(item)
        self.current_data = None
        decl = DataDecl(name, constructors, line=start.line)
        decl.elaborated = elaborate_data(decl)
        if not check_type_formation(None, decl.elaborated):
            raise ParseError(
                f"data declaration {name} is not a well-formed recursive type "
                "(recursive positions may only sit under sums, products and Sig)",
                start.line, start.col,
            )
        self.data_types[name] = decl.elaborated
        return decl

    def parse_clause(self, item: _Item) -> SClause:
        params: list[SPattern] = []
        while not item.at("punct", "="):
            params.append(self.parse_pattern_atom(item))
        item.expect("punct", "=")
        body = self.parse_expr(item)
        wheres: list[SDef] = []
        if item.at("keyword", "where"):
            item.next()
            item.expect("punct", "{")
            by_name: dict[str, SDef] = {}
            while not item.at("punct", "}"):
                wname = item.expect("ident").value
                wclause = self._parse_where_clause(item)
                if wname in by_name:
                    by_name[wname].clauses.append(wclause)
                else:
                    d = SDef(wname, None, [wclause])
                    by_name[wname] = d
                    wheres.append(d)
                if item.at("punct", ";"):
                    item.next()
            item.expect("punct", "}")
        self._finish(item)
        return SClause(tuple(params), body, tuple(wheres))

    def _parse_where_clause(self, item: _Item) -> SClause:
        params: list[SPattern] = []
        while not item.at("punct", "="):
            params.append(self.parse_pattern_atom(item))
        item.expect("punct", "=")
        body = self.parse_expr(item, stop_at=(";", "}"))
        return SClause(tuple(params), body)

    # -- types -----------------------------------------------------------

    def parse_type(self, item: _Item) -> Type:
        left = self.parse_type_sum(item)
        if item.at("punct", "->"):
            item.next()
            return TFun(left, self.parse_type(item))
        return left

    def parse_type_sum(self, item: _Item) -> Type:
        left = self.parse_type_prod(item)
        while item.at("punct", "+"):
            item.next()
            left = TSum(left, self.parse_type_prod(item))
        return left

    def parse_type_prod(self, item: _Item) -> Type:
        left = self.parse_type_app(item)
        while item.at("punct", "*"):
            item.next()
            left = TProd(left, self.parse_type_app(item))
        return left

    def parse_type_app(self, item: _Item) -> Type:
        tok = item.peek()
        if tok.kind == "conid":
            if tok.value == "Sig":
                item.next()
                return TSig(self.parse_type_atom(item))
            if tok.value == "Ex":
                item.next()
                return TLaterE(self.parse_type_atom(item))
            if tok.value == "All":
                item.next()
                return TLaterA(self.parse_type_atom(item))
            if tok.value == "Chan":
                item.next()
                return TChan(self.parse_type_atom(item))
            if tok.value == "Maybe":
                item.next()
                return maybe_type(self.parse_type_atom(item))
            if tok.value == "Sync":
                item.next()
                a = self.parse_type_atom(item)
                return sync_type(a, self.parse_type_atom(item))
        return self.parse_type_atom(item)

    def parse_type_atom(self, item: _Item) -> Type:
        tok = item.peek()
        if tok.kind == "conid":
            if tok.value in BASE_TYPES:
                item.next()
                return BASE_TYPES[tok.value]
            if tok.value == "Bool":
                item.next()
                return BOOL
            if tok.value in ("Sig", "Ex", "All", "Chan", "Maybe", "Sync"):
                return self.parse_type_app(item)
            if tok.value == self.current_data:
                item.next()
                return TVar(tok.value)
            if tok.value in self.data_types:
                item.next()
                return self.data_types[tok.value]
            raise ParseError(f"unknown type {tok.value}", tok.line, tok.col)
        if tok.kind == "int" and tok.value == "1":
            item.next()
            return TUnit()
        if tok.kind == "ident":
            item.next()
            return TVar(tok.value)
        if tok.kind == "keyword" and tok.value == "mu":
            item.next()
            var = item.next()
            if var.kind not in ("ident", "conid"):
                raise ParseError("expected a type variable after mu", var.line, var.col)
            item.expect("punct", ".")
            return TMu(var.value, self.parse_type(item))
        if tok.kind == "punct" and tok.value == "(":
            item.next()
            if item.at("punct", ")"):
                item.next()
                return TUnit()
            inner = self.parse_type(item)
            item.expect("punct", ")")
            return inner
        raise ParseError(f"expected a type, found {tok.value or tok.kind!r}",
                         tok.line, tok.col)

    # -- patterns ----------------------------------------------------------

    def parse_pattern_atom(self, item: _Item) -> SPattern:
        tok = item.peek()
        if tok.kind == "ident":
            item.next()
            return PVar(tok.value)
        if tok.kind == "punct" and tok.value == "_":
            item.next()
            return PWild()
        if tok.kind == "conid":
            item.next()
            return PCon(tok.value)
        if tok.kind == "punct" and tok.value == "(":
            item.next()
            if item.at("punct", ")"):
                item.next()
                return PUnit()
            pat = self.parse_pattern(item)
            item.expect("punct", ")")
            return pat
        raise ParseError(f"expected a pattern, found {tok.value or tok.kind!r}",
                         tok.line, tok.col)

    def parse_pattern(self, item: _Item) -> SPattern:
        tok = item.peek()
        if tok.kind == "conid" and not (
            item.peek(1).kind == "punct" and item.peek(1).value in (")", ",", "::", "->")
        ):
            item.next()
            args: list[SPattern] = []
            while not (item.peek().kind == "punct"
                       and item.peek().value in (")", ",", "->", ";", "}")):
                args.append(self.parse_pattern_atom(item))
            return PCon(tok.value, tuple(args))
        left = self.parse_pattern_atom(item)
        if item.at("punct", "::"):
            item.next()
            return PCons(left, self.parse_pattern_atom(item))
        if item.at("punct", ","):
            item.next()
            return PPair(left, self.parse_pattern(item))
        return left

    # -- expressions ---------------------------------------------------------

    def parse_expr(self, item: _Item, stop_at: tuple[str, ...] = ()) -> SExpr:
        tok = item.peek()
        if tok.kind == "punct" and tok.value == "\\":
            item.next()
            params: list[SPattern] = []
            while not item.at("punct", "."):
                params.append(self.parse_pattern_atom(item))
            item.expect("punct", ".")
            return ELam(tuple(params), self.parse_expr(item, stop_at))
        if tok.kind == "keyword" and tok.value == "let":
            item.next()
            pat = self.parse_pattern(item)
            item.expect("punct", "=")
            value = self.parse_expr(item, stop_at + ("in",))
            item.expect("keyword", "in")
            return ELet(pat, value, self.parse_expr(item, stop_at))
        if tok.kind == "keyword" and tok.value == "if":
            item.next()
            cond = self.parse_expr(item, stop_at + ("then",))
            item.expect("keyword", "then")
            then = self.parse_expr(item, stop_at + ("else",))
            item.expect("keyword", "else")
            return EIf(cond, then, self.parse_expr(item, stop_at))
        if tok.kind == "keyword" and tok.value == "case":
            item.next()
            scrut = self.parse_expr(item, stop_at + ("of",))
            item.expect("keyword", "of")
            item.expect("punct", "{")
            alts: list[tuple[SPattern, SExpr]] = []
            while not item.at("punct", "}"):
                pat = self.parse_pattern(item)
                item.expect("punct", "->")
                alts.append((pat, self.parse_expr(item, (";", "}"))))
                if item.at("punct", ";"):
                    item.next()
            item.expect("punct", "}")
            return ECase(scrut, tuple(alts))
        return self.parse_cons(item, stop_at)

    def _stopped(self, item: _Item, stop_at: tuple[str, ...]) -> bool:
        tok = item.peek()
        return tok.kind in ("punct", "keyword") and tok.value in stop_at

    def parse_cons(self, item: _Item, stop_at: tuple[str, ...]) -> SExpr:
        left = self.parse_apops(item, stop_at)
        if item.at("punct", "::") and "::" not in stop_at:
            item.next()
            return EOp("::", left, self.parse_expr(item, stop_at))
        return left

    def parse_apops(self, item: _Item, stop_at: tuple[str, ...]) -> SExpr:
        left = self.parse_cmp(item, stop_at)
        while item.peek().kind == "punct" and item.peek().value in AP_OPS:
            op = item.next().value
            left = EOp(op, left, self.parse_cmp(item, stop_at))
        return left

    def parse_cmp(self, item: _Item, stop_at: tuple[str, ...]) -> SExpr:
        left = self.parse_add(item, stop_at)
        if item.at("punct", ">"):
            item.next()
            return EOp(">", left, self.parse_add(item, stop_at))
        return left

    def parse_add(self, item: _Item, stop_at: tuple[str, ...]) -> SExpr:
        left = self.parse_app(item, stop_at)
        while item.peek().kind == "punct" and item.peek().value in ("+", "-"):
            op = item.next().value
            left = EOp(op, left, self.parse_app(item, stop_at))
        return left

    def parse_app(self, item: _Item, stop_at: tuple[str, ...]) -> SExpr:
        expr = self.parse_atom(item, stop_at)
        while self._at_atom_start(item, stop_at):
            expr = EApp(expr, self.parse_atom(item, stop_at))
        return expr

    def _at_atom_start(self, item: _Item, stop_at: tuple[str, ...]) -> bool:
        tok = item.peek()
        if self._stopped(item, stop_at):
            return False
        if tok.kind in ("ident", "conid", "int", "char", "string"):
            return True
        if tok.kind == "punct" and tok.value == "(":
            return True
        if tok.kind == "keyword" and tok.value in (
            "delay", "never", "wait", "watch", "sync", "head", "tail",
            "fst", "snd", "isEven", "chan", "let", "if", "case",
        ):
            return True
        if tok.kind == "punct" and tok.value == "\\":
            return True
        return False

    def parse_atom(self, item: _Item, stop_at: tuple[str, ...]) -> SExpr:
        tok = item.peek()
        if tok.kind == "ident":
            item.next()
            return EVar(tok.value)
        if tok.kind == "conid":
            item.next()
            return ECon(tok.value)
        if tok.kind == "int":
            item.next()
            return ELit("Int", int(tok.value))
        if tok.kind == "char":
            item.next()
            return ELit("Char", tok.value)
        if tok.kind == "string":
            item.next()
            return ELit("String", tok.value)
        if tok.kind == "keyword":
            kw = tok.value
            if kw == "never":
                item.next()
                return ENever()
            if kw == "delay":
                item.next()
                return EDelay(self.parse_atom(item, stop_at))
            if kw == "wait":
                item.next()
                return EWait(self.parse_atom(item, stop_at))
            if kw == "watch":
                item.next()
                return EWatch(self.parse_atom(item, stop_at))
            if kw == "sync":
                item.next()
                a = self.parse_atom(item, stop_at)
                return ESync(a, self.parse_atom(item, stop_at))
            if kw == "head":
                item.next()
                return EHead(self.parse_atom(item, stop_at))
            if kw == "tail":
                item.next()
                return ETail(self.parse_atom(item, stop_at))
            if kw == "fst":
                item.next()
                return EProj(1, self.parse_atom(item, stop_at))
            if kw == "snd":
                item.next()
                return EProj(2, self.parse_atom(item, stop_at))
            if kw == "isEven":
                item.next()
                return EIsEven(self.parse_atom(item, stop_at))
            if kw == "chan":
                item.next()
                item.expect("punct", "[")
                ann = self.parse_type(item)
                item.expect("punct", "]")
                return EChanAlloc(ann)
            if kw in ("let", "if", "case"):
                return self.parse_expr(item, stop_at)
        if tok.kind == "punct" and tok.value == "\\":
            return self.parse_expr(item, stop_at)
        if tok.kind == "punct" and tok.value == "(":
            item.next()
            if item.at("punct", ")"):
                item.next()
                return EUnit()
            inner = self.parse_expr(item, (",", ":", ")"))
            if item.at("punct", ","):
                item.next()
                second = self.parse_expr(item, (")",))
                item.expect("punct", ")")
                return EPair(inner, second)
            if item.at("punct", ":"):
                item.next()
                ann = self.parse_type(item)
                item.expect("punct", ")")
                return EAnn(inner, ann)
            item.expect("punct", ")")
            return inner
        raise ParseError(f"expected an expression, found {tok.value or tok.kind!r}",
                         tok.line, tok.col)


def elaborate_data(decl: DataDecl) -> Type:
    """Encode a data declaration: each constructor's arguments become a
    right-nested product, constructors a right-nested sum, and recursive
    occurrences (the declaration's own name, parsed as a type variable)
    are closed over with mu when present."""
    def payload(args: list[Type]) -> Type:
        if not args:
            return TUnit()
        out = args[-1]
        for a in reversed(args[:-1]):
            out = TProd(a, out)
        return out

    summands = [payload(args) for _, args in decl.constructors]
    body = summands[-1]
    for s in reversed(summands[:-1]):
        body = TSum(s, body)
    if _mentions_var(body, decl.name):
        return TMu(decl.name, body)
    return body


def _mentions_var(ty: Type, name: str) -> bool:
    match ty:
        case TVar(n):
            return n == name
        case TProd(a, b) | TSum(a, b):
            return _mentions_var(a, name) or _mentions_var(b, name)
        case TSig(a):
            return _mentions_var(a, name)
        case TFun(a, b):
            return _mentions_var(a, name) or _mentions_var(b, name)
        case TLaterE(a) | TLaterA(a) | TChan(a):
            return _mentions_var(a, name)
        case TMu(_, b):
            return _mentions_var(b, name)
        case _:
            return False


def parse_program(source: str) -> SProgram:
    return Parser().parse_program(source)
