"""Recursive-descent parser for the function input language.

Grammar (whitespace insensitive)::

    expr    := term (('+' | '-') term)*
    term    := unary (('*' | '/') unary)*
    unary   := '-' unary | power
    power   := primary ('^' unary)?          # right associative
    primary := NUMBER | 'x' | FUNC '(' expr ')' | '(' expr ')'
    FUNC    := exp | log | sin | cos

Unary minus binds looser than ``^``, so ``-x^2`` is ``-(x^2)`` while
``2^-x`` is ``2^(-x)``.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction

from .errors import ParseError
from .expr import FUNCTIONS, Add, Const, Div, Expr, Mul, Neg, Pow, Sub, Var, to_source

_TOKEN = re.compile(
    r"\s*(?:"
    r"(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()])"
    r")"
)


@dataclass(frozen=True)
class Token:
    kind: str  # "num", "name", "op", "end"
    text: str
    column: int  # 1-based


@dataclass(frozen=True)
class ParsedExpr:
    tree: Expr
    source: str

    def __str__(self):
        return to_source(self.tree)


def tokenize(src: str) -> list[Token]:
    tokens = []
    pos = 0
    n = len(src)
    while True:
        while pos < n and src[pos].isspace():
            pos += 1
        if pos >= n:
            break
        m = _TOKEN.match(src, pos)
        if not m or m.end() == pos:
            raise ParseError(f"unexpected character {src[pos]!r}", pos + 1, src)
        kind = m.lastgroup
        text = m.group(kind)
        tokens.append(Token(kind, text, m.start(kind) + 1))
        pos = m.end()
    tokens.append(Token("end", "", n + 1))
    return tokens


class _Parser:
    def __init__(self, src: str):
        self.src = src
        self.tokens = tokenize(src)
        self.i = 0

    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def fail(self, expected: str):
        t = self.tok
        found = "end of input" if t.kind == "end" else repr(t.text)
        raise ParseError(f"expected {expected}, found {found}", t.column, self.src)

    def accept(self, text: str) -> bool:
        if self.tok.kind == "op" and self.tok.text == text:
            self.i += 1
            return True
        return False

    def expect(self, text: str):
        if not self.accept(text):
            self.fail(repr(text))

    def parse(self) -> Expr:
        e = self.expr()
        if self.tok.kind != "end":
            self.fail("operator or end of input")
        return e

    def expr(self) -> Expr:
        e = self.term()
        while True:
            if self.accept("+"):
                e = Add(e, self.term())
            elif self.accept("-"):
                e = Sub(e, self.term())
            else:
                return e

    def term(self) -> Expr:
        e = self.unary()
        while True:
            if self.accept("*"):
                e = Mul(e, self.unary())
            elif self.accept("/"):
                e = Div(e, self.unary())
            else:
                return e

    def unary(self) -> Expr:
        if self.accept("-"):
            return Neg(self.unary())
        return self.power()

    def power(self) -> Expr:
        base = self.primary()
        if self.accept("^"):
            return Pow(base, self.unary())
        return base

    def primary(self) -> Expr:
        t = self.tok
        if t.kind == "num":
            self.i += 1
            return Const(Fraction(t.text))
        if t.kind == "name":
            self.i += 1
            if t.text == "x":
                return Var()
            if t.text in FUNCTIONS:
                if not self.accept("("):
                    self.fail(f"'(' after {t.text}")
                arg = self.expr()
                self.expect(")")
                return FUNCTIONS[t.text](arg)
            raise ParseError(
                f"unknown identifier {t.text!r} (only 'x' and exp/log/sin/cos are allowed)",
                t.column, self.src)
        if self.accept("("):
            e = self.expr()
            self.expect(")")
            return e
        self.fail("number, 'x', function or '('")


def parse_expr(src: str) -> ParsedExpr:
    """Parse ``src`` into a :class:`ParsedExpr`; raises :class:`ParseError`."""
    return ParsedExpr(_Parser(src).parse(), src)
