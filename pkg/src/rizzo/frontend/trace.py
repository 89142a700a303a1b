"""Trace files: channel declarations plus a sequence of input events.

Format, one item per line (blank lines and -- comments ignored):

    chan k1 : Int
    chan k2 : Char
    k1 1
    k2 'b'

Payload literals support ints, chars, strings, True/False, () and pairs
of literals.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..syntax import Lit, Pair, Term, Type, Unit, TRUE, FALSE
from .lexer import ParseError, tokenize
from .parser import Parser, _Item


@dataclass
class TraceFile:
    channels: list[tuple[str, Type]]
    events: list[tuple[str, Term]]  # (channel name, payload value)


def parse_trace(source: str) -> TraceFile:
    channels: list[tuple[str, Type]] = []
    events: list[tuple[str, Term]] = []
    parser = Parser()
    for lineno, raw in enumerate(source.splitlines(), start=1):
        line = raw.split("--", 1)[0].strip()
        if not line:
            continue
        tokens = tokenize(line)
        item = _Item(tokens)
        tok = item.peek()
        if tok.kind == "keyword" and tok.value == "chan":
            item.next()
            name = item.expect("ident").value
            item.expect("punct", ":")
            ty = parser.parse_type(item)
            if any(n == name for n, _ in channels):
                raise ParseError(f"channel {name} declared twice", lineno, 1)
            channels.append((name, ty))
            continue
        if tok.kind == "ident":
            # the channel may be declared in the program instead of the
            # trace; name resolution happens when the two are combined
            item.next()
            events.append((tok.value, parse_literal(item, lineno)))
            continue
        raise ParseError(f"unexpected {tok.value!r} in trace", lineno, tok.col)
    return TraceFile(channels, events)


def parse_literal(item: _Item, lineno: int) -> Term:
    tok = item.next()
    if tok.kind == "punct" and tok.value == "-":
        tok = item.next()
        if tok.kind != "int":
            raise ParseError("expected a number after '-'", lineno, tok.col)
        return Lit("Int", -int(tok.value))
    if tok.kind == "int":
        return Lit("Int", int(tok.value))
    if tok.kind == "char":
        return Lit("Char", tok.value)
    if tok.kind == "string":
        return Lit("String", tok.value)
    if tok.kind == "conid" and tok.value == "True":
        return TRUE
    if tok.kind == "conid" and tok.value == "False":
        return FALSE
    if tok.kind == "punct" and tok.value == "(":
        if item.at("punct", ")"):
            item.next()
            return Unit()
        first = parse_literal(item, lineno)
        item.expect("punct", ",")
        second = parse_literal(item, lineno)
        item.expect("punct", ")")
        return Pair(first, second)
    raise ParseError(f"bad payload literal {tok.value!r}", lineno, tok.col)
