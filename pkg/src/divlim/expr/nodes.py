"""Expression trees for integrands in ``p``, ``q`` and named parameters.

Nodes are frozen dataclasses, so ``==`` is structural equality and trees
can be shared freely. The ``add``/``sub``/``mul``/``div``/``power``
helpers fold constants; the node constructors themselves never rewrite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Union

from ..errors import DivisionByZero, UnboundSymbol

INTEGRATION_VAR = "p"
EXTERNAL_VAR = "q"
RESERVED = (INTEGRATION_VAR, EXTERNAL_VAR)


class Expression:
    """Base class of all nodes."""

    __slots__ = ()

    def __str__(self):
        return to_text(self)

    # operator sugar, mostly for tests and library users
    def __add__(self, other):
        return Add(self, _wrap(other))

    def __radd__(self, other):
        return Add(_wrap(other), self)

    def __sub__(self, other):
        return Sub(self, _wrap(other))

    def __rsub__(self, other):
        return Sub(_wrap(other), self)

    def __mul__(self, other):
        return Mul(self, _wrap(other))

    def __rmul__(self, other):
        return Mul(_wrap(other), self)

    def __truediv__(self, other):
        return Div(self, _wrap(other))

    def __rtruediv__(self, other):
        return Div(_wrap(other), self)

    def __pow__(self, n):
        return Pow(self, int(n))


@dataclass(frozen=True, slots=True)
class Const(Expression):
    value: float

    def __post_init__(self):
        object.__setattr__(self, "value", float(self.value))


@dataclass(frozen=True, slots=True)
class Symbol(Expression):
    name: str


@dataclass(frozen=True, slots=True)
class Add(Expression):
    left: Expression
    right: Expression


@dataclass(frozen=True, slots=True)
class Sub(Expression):
    left: Expression
    right: Expression


@dataclass(frozen=True, slots=True)
class Mul(Expression):
    left: Expression
    right: Expression


@dataclass(frozen=True, slots=True)
class Div(Expression):
    left: Expression
    right: Expression


@dataclass(frozen=True, slots=True)
class Pow(Expression):
    base: Expression
    exponent: int

    def __post_init__(self):
        if not isinstance(self.exponent, int) or self.exponent < 0:
            raise ValueError(f"exponent must be a non-negative int, got {self.exponent!r}")


Binary = (Add, Sub, Mul, Div)
Number = Union[float, Fraction]

ZERO = Const(0.0)
ONE = Const(1.0)
p = Symbol(INTEGRATION_VAR)
q = Symbol(EXTERNAL_VAR)


def _wrap(x) -> Expression:
    if isinstance(x, Expression):
        return x
    if isinstance(x, str):
        return Symbol(x)
    return Const(x)


def is_const(e: Expression, value: float | None = None) -> bool:
    return isinstance(e, Const) and (value is None or e.value == value)


# -- folding constructors ---------------------------------------------------

def add(a: Expression, b: Expression) -> Expression:
    if is_const(a) and is_const(b):
        return Const(a.value + b.value)
    if is_const(a, 0.0):
        return b
    if is_const(b, 0.0):
        return a
    return Add(a, b)


def sub(a: Expression, b: Expression) -> Expression:
    if is_const(a) and is_const(b):
        return Const(a.value - b.value)
    if is_const(b, 0.0):
        return a
    if is_const(a, 0.0):
        return neg(b)
    return Sub(a, b)


def neg(a: Expression) -> Expression:
    if is_const(a):
        return Const(-a.value)
    return Mul(Const(-1.0), a)


def mul(a: Expression, b: Expression) -> Expression:
    if is_const(a) and is_const(b):
        return Const(a.value * b.value)
    if is_const(a, 0.0) or is_const(b, 0.0):
        return ZERO
    if is_const(a, 1.0):
        return b
    if is_const(b, 1.0):
        return a
    return Mul(a, b)


def div(a: Expression, b: Expression) -> Expression:
    if is_const(b, 0.0):
        raise DivisionByZero("division by the constant 0")
    if is_const(a) and is_const(b):
        return Const(a.value / b.value)
    if is_const(a, 0.0):
        return ZERO
    if is_const(b, 1.0):
        return a
    return Div(a, b)


def power(a: Expression, n: int) -> Expression:
    if n == 0:
        return ONE
    if n == 1:
        return a
    if is_const(a):
        return Const(a.value ** n)
    return Pow(a, n)


# -- printing ---------------------------------------------------------------

_PREC = {Add: 1, Sub: 1, Mul: 2, Div: 2}
_OPS = {Add: "+", Sub: "-", Mul: "*", Div: "/"}


def _format_number(x: float) -> str:
    if not math.isfinite(x):
        raise ValueError(f"cannot print non-finite constant {x!r}")
    return repr(x)


def _needs_parens(child: Expression, parent_prec: int, right: bool) -> bool:
    if isinstance(child, Binary):
        cp = _PREC[type(child)]
        # left-associative: an equal-precedence right operand needs parentheses
        return cp < parent_prec or (right and cp == parent_prec)
    return False


def to_text(e: Expression) -> str:
    """Render ``e`` so that ``parse(to_text(e)) == e``."""
    if isinstance(e, Const):
        return _format_number(e.value)
    if isinstance(e, Symbol):
        return e.name
    if isinstance(e, Pow):
        b = e.base
        inner = to_text(b)
        if isinstance(b, (Binary, Pow)) or (isinstance(b, Const) and (b.value < 0 or math.copysign(1.0, b.value) < 0)):
            inner = f"({inner})"
        return f"{inner}^{e.exponent}"
    prec = _PREC[type(e)]
    left = to_text(e.left)
    if _needs_parens(e.left, prec, right=False):
        left = f"({left})"
    right = to_text(e.right)
    if _needs_parens(e.right, prec, right=True):
        right = f"({right})"
    return f"{left} {_OPS[type(e)]} {right}"


# -- structural queries -----------------------------------------------------

def free_symbols(e: Expression) -> frozenset[str]:
    if isinstance(e, Symbol):
        return frozenset((e.name,))
    if isinstance(e, Const):
        return frozenset()
    if isinstance(e, Pow):
        return free_symbols(e.base)
    return free_symbols(e.left) | free_symbols(e.right)


def parameters(e: Expression) -> frozenset[str]:
    """Free symbols other than ``p`` and ``q``."""
    return free_symbols(e) - set(RESERVED)


def substitute(e: Expression, name: str, value: Expression) -> Expression:
    """Replace every occurrence of symbol ``name``; folds constants on the way up."""
    if isinstance(e, Symbol):
        return value if e.name == name else e
    if isinstance(e, Const):
        return e
    if isinstance(e, Pow):
        return power(substitute(e.base, name, value), e.exponent)
    build = {Add: add, Sub: sub, Mul: mul, Div: div}[type(e)]
    return build(substitute(e.left, name, value), substitute(e.right, name, value))


# -- evaluation -------------------------------------------------------------

def evaluate(
    e: Expression,
    p: Number | None = None,
    q: Number | None = None,
    bindings: Mapping[str, Number] | None = None,
    *,
    exact: bool = False,
):
    """Numerically evaluate ``e``.

    With ``exact=True`` every constant and binding is converted to
    :class:`fractions.Fraction` and the arithmetic is exact; the result
    is a Fraction.
    """
    env: dict[str, Number] = dict(bindings or {})
    if p is not None:
        env[INTEGRATION_VAR] = p
    if q is not None:
        env[EXTERNAL_VAR] = q
    if exact:
        env = {k: Fraction(v) for k, v in env.items()}
    return _eval(e, env, exact)


def _eval(e, env, exact):
    if isinstance(e, Const):
        return Fraction(e.value) if exact else e.value
    if isinstance(e, Symbol):
        try:
            return env[e.name]
        except KeyError:
            raise UnboundSymbol(e.name) from None
    if isinstance(e, Pow):
        return _eval(e.base, env, exact) ** e.exponent
    a = _eval(e.left, env, exact)
    b = _eval(e.right, env, exact)
    if isinstance(e, Add):
        return a + b
    if isinstance(e, Sub):
        return a - b
    if isinstance(e, Mul):
        return a * b
    if b == 0:
        raise DivisionByZero(f"denominator {to_text(e.right)} vanishes")
    return a / b


# -- differentiation --------------------------------------------------------

def derivative(e: Expression, wrt: str) -> Expression:
    """First derivative by the usual recursive rules, with constant folding only."""
    if isinstance(e, Const):
        return ZERO
    if isinstance(e, Symbol):
        return ONE if e.name == wrt else ZERO
    if isinstance(e, Add):
        return add(derivative(e.left, wrt), derivative(e.right, wrt))
    if isinstance(e, Sub):
        return sub(derivative(e.left, wrt), derivative(e.right, wrt))
    if isinstance(e, Mul):
        return add(
            mul(derivative(e.left, wrt), e.right),
            mul(e.left, derivative(e.right, wrt)),
        )
    if isinstance(e, Div):
        da = derivative(e.left, wrt)
        db = derivative(e.right, wrt)
        if is_const(db, 0.0):
            return div(da, e.right)
        return div(sub(mul(da, e.right), mul(e.left, db)), power(e.right, 2))
    # Pow with integer exponent n >= 2 (0 and 1 fold away in practice)
    n = e.exponent
    if n == 0:
        return ZERO
    db = derivative(e.base, wrt)
    return mul(mul(Const(n), power(e.base, n - 1)), db)


def differentiate(e: Expression, wrt: str = EXTERNAL_VAR, order: int = 1) -> Expression:
    """``order``-th derivative of ``e`` with respect to ``wrt``."""
    if order < 1:
        raise ValueError(f"order must be >= 1, got {order}")
    for _ in range(order):
        e = derivative(e, wrt)
    return e
