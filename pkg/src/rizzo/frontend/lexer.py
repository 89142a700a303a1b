"""Tokenizer for the surface language.

Hand-rolled single-pass scanner.  Tracks line and column (both
1-based); column 1 starts of lines matter to the parser, which treats
them as top-level item boundaries.
"""

from __future__ import annotations

from dataclasses import dataclass


class ParseError(Exception):
    def __init__(self, message: str, line: int, col: int):
        self.line = line
        self.col = col
        super().__init__(f"{line}:{col}: {message}")


@dataclass(frozen=True)
class Token:
    kind: str   # ident, conid, int, char, string, punct, keyword, eof
    value: str
    line: int
    col: int


KEYWORDS = {
    "data", "chan", "let", "in", "if", "then", "else", "case", "of",
    "where", "delay", "never", "wait", "watch", "sync", "head", "tail",
    "fst", "snd", "isEven", "mu",
}

# multi-char punctuation, longest first
PUNCTS = [
    "<**>", "<*>", "|>", "::", "->", "--",
    "(", ")", "[", "]", "{", "}", ",", ";", ":", "=", "\\", ".",
    "+", "-", ">", "*", "|", "_",
]


def tokenize(source: str) -> list[Token]:
    tokens: list[Token] = []
    line, col = 1, 1
    i = 0
    n = len(source)

    def error(msg: str) -> ParseError:
        return ParseError(msg, line, col)

    while i < n:
        ch = source[i]
        if ch == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if source.startswith("--", i):
            while i < n and source[i] != "\n":
                i += 1
            continue
        start_line, start_col = line, col
        if ch.isdigit():
            j = i
            while j < n and source[j].isdigit():
                j += 1
            tokens.append(Token("int", source[i:j], start_line, start_col))
            col += j - i
            i = j
            continue
        if ch.isalpha() or ch == "_" and i + 1 < n and (source[i + 1].isalnum() or source[i + 1] == "_"):
            j = i
            while j < n and (source[j].isalnum() or source[j] in "_'"):
                j += 1
            word = source[i:j]
            if word == "_":
                tokens.append(Token("punct", "_", start_line, start_col))
            elif word in KEYWORDS:
                tokens.append(Token("keyword", word, start_line, start_col))
            elif word[0].isupper():
                tokens.append(Token("conid", word, start_line, start_col))
            else:
                tokens.append(Token("ident", word, start_line, start_col))
            col += j - i
            i = j
            continue
        if ch == "'":
            if i + 2 < n and source[i + 2] == "'":
                tokens.append(Token("char", source[i + 1], start_line, start_col))
                i += 3
                col += 3
                continue
            raise error("malformed character literal")
        if ch == '"':
            j = i + 1
            while j < n and source[j] != '"':
                if source[j] == "\n":
                    raise error("unterminated string literal")
                j += 1
            if j >= n:
                raise error("unterminated string literal")
            tokens.append(Token("string", source[i + 1:j], start_line, start_col))
            col += j + 1 - i
            i = j + 1
            continue
        for p in PUNCTS:
            if source.startswith(p, i):
                tokens.append(Token("punct", p, start_line, start_col))
                i += len(p)
                col += len(p)
                break
        else:
            raise error(f"unexpected character {ch!r}")
    tokens.append(Token("eof", "", line, col))
    return tokens
