"""Recursive-descent parser for the integrand DSL.

Grammar, loosest binding first::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := '-' unary | power
    power  := atom ['^' ['-'] INTEGER]
    atom   := NUMBER | IDENT | '(' expr ')'

so ``-m^2`` is ``-(m^2)``. A negative exponent ``x^-n`` becomes ``1/x^n``.
Unary minus on a literal folds into the constant; on anything else it
becomes ``Mul(Const(-1), operand)``.
"""

from __future__ import annotations

import re
from typing import NamedTuple

from ..errors import ExpressionSyntaxError, NonIntegerExponent
from .nodes import Add, Const, Div, Expression, Mul, Pow, Sub, Symbol, neg

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[a-zA-Z][a-zA-Z0-9]*)
  | (?P<op>[-+*/^()])
    """,
    re.VERBOSE,
)


class Token(NamedTuple):
    kind: str
    text: str
    offset: int


def tokenize(text: str) -> list[Token]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ExpressionSyntaxError(f"unexpected character {text[pos]!r}", pos)
        kind = m.lastgroup
        if kind != "ws":
            tokens.append(Token(kind, m.group(), pos))
        pos = m.end()
    tokens.append(Token("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = tokenize(text)
        self.i = 0

    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def advance(self) -> Token:
        t = self.tokens[self.i]
        self.i += 1
        return t

    def at(self, text: str) -> bool:
        return self.tok.kind == "op" and self.tok.text == text

    def fail(self, what: str):
        t = self.tok
        found = "end of input" if t.kind == "end" else repr(t.text)
        raise ExpressionSyntaxError(f"expected {what}, found {found}", t.offset)

    def parse(self) -> Expression:
        e = self.expr()
        if self.tok.kind != "end":
            self.fail("operator or end of input")
        return e

    def expr(self) -> Expression:
        left = self.term()
        while self.at("+") or self.at("-"):
            op = self.advance().text
            right = self.term()
            left = Add(left, right) if op == "+" else Sub(left, right)
        return left

    def term(self) -> Expression:
        left = self.unary()
        while self.at("*") or self.at("/"):
            op = self.advance().text
            right = self.unary()
            left = Mul(left, right) if op == "*" else Div(left, right)
        return left

    def unary(self) -> Expression:
        if self.at("-"):
            self.advance()
            return neg(self.unary())
        return self.power()

    def power(self) -> Expression:
        base = self.atom()
        if not self.at("^"):
            return base
        self.advance()
        negative = False
        if self.at("-"):
            self.advance()
            negative = True
        t = self.tok
        if t.kind == "ident" or t.text == "(":
            raise NonIntegerExponent("exponent must be an integer literal", t.offset)
        if t.kind != "number":
            self.fail("integer exponent")
        if not t.text.isdigit():
            raise NonIntegerExponent(f"exponent {t.text!r} is not an integer literal", t.offset)
        self.advance()
        n = int(t.text)
        if negative:
            return Div(Const(1.0), Pow(base, n))
        return Pow(base, n)

    def atom(self) -> Expression:
        t = self.tok
        if t.kind == "number":
            self.advance()
            return Const(float(t.text))
        if t.kind == "ident":
            self.advance()
            return Symbol(t.text)
        if self.at("("):
            self.advance()
            e = self.expr()
            if not self.at(")"):
                self.fail("')'")
            self.advance()
            return e
        self.fail("number, identifier or '('")


def parse(text: str) -> Expression:
    """Parse integrand text into an expression tree.

    Raises :class:`ExpressionSyntaxError` (with ``offset``, 0-based) for
    malformed input and :class:`NonIntegerExponent` for ``x^0.5``.
    """
    return _Parser(text).parse()
