"""Normalization of an expression into a ratio of polynomials in ``p``.

Coefficients stay expression trees in ``q`` and the parameters; only the
``p``-structure is made explicit. No gcd is taken, but leading
coefficients that vanish identically are dropped so degrees are exact.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from ..errors import DivisionByZero, ZeroDenominator
from .nodes import (
    EXTERNAL_VAR,
    INTEGRATION_VAR,
    ONE,
    ZERO,
    Add,
    Const,
    Div,
    Expression,
    Mul,
    Pow,
    Sub,
    Symbol,
    add,
    evaluate,
    free_symbols,
    mul,
    sub,
)

Poly = tuple[Expression, ...]

ZERO_TEST_POINTS = 8
ZERO_TEST_THRESHOLD = 1e-10
_ZERO_TEST_SEED = 20100427


def _poly_add(a: Poly, b: Poly) -> Poly:
    n = max(len(a), len(b))
    return tuple(
        add(a[i] if i < len(a) else ZERO, b[i] if i < len(b) else ZERO) for i in range(n)
    )


def _poly_sub(a: Poly, b: Poly) -> Poly:
    n = max(len(a), len(b))
    return tuple(
        sub(a[i] if i < len(a) else ZERO, b[i] if i < len(b) else ZERO) for i in range(n)
    )


def _poly_mul(a: Poly, b: Poly) -> Poly:
    if not a or not b:
        return ()
    out = [ZERO] * (len(a) + len(b) - 1)
    for i, ai in enumerate(a):
        for j, bj in enumerate(b):
            out[i + j] = add(out[i + j], mul(ai, bj))
    return tuple(out)


def _magnitude(e: Expression, env: Mapping[str, float]) -> float:
    """Value of ``e`` with every sign made positive; a scale for cancellation tests."""
    if isinstance(e, Const):
        return abs(e.value)
    if isinstance(e, Symbol):
        return abs(env[e.name])
    if isinstance(e, Pow):
        return _magnitude(e.base, env) ** e.exponent
    a = _magnitude(e.left, env)
    b = _magnitude(e.right, env)
    if isinstance(e, (Add, Sub)):
        return a + b
    if isinstance(e, Mul):
        return a * b
    # coefficients never contain Div, but stay total anyway
    return a / b if b else float("inf")


def _sample_points(names: Sequence[str]) -> list[dict[str, float]]:
    rng = np.random.default_rng(_ZERO_TEST_SEED)
    pts = []
    for _ in range(ZERO_TEST_POINTS):
        vals = rng.uniform(0.5, 2.0, size=len(names)) * rng.choice([-1.0, 1.0], size=len(names))
        pts.append(dict(zip(names, vals.tolist())))
    return pts


def is_identically_zero(c: Expression) -> bool:
    """Probabilistic zero test for a coefficient (polynomial in q and parameters).

    A coefficient counts as zero when, at every one of 8 random points,
    its value is within 1e-10 of zero relative to the size of its terms.
    """
    if isinstance(c, Const):
        return c.value == 0.0
    names = sorted(free_symbols(c))
    for env in _sample_points(names):
        try:
            v = evaluate(c, bindings=env)
        except DivisionByZero:
            return False
        scale = max(_magnitude(c, env), 1e-300)
        if abs(v) > ZERO_TEST_THRESHOLD * scale:
            return False
    return True


def _trim(a: Poly) -> Poly:
    a = list(a)
    while a and is_identically_zero(a[-1]):
        a.pop()
    return tuple(a)


@dataclass(frozen=True)
class RationalForm:
    """``num(p)/den(p)``, coefficient lists in ascending powers of ``p``."""

    num: Poly
    den: Poly

    def __post_init__(self):
        if not self.den:
            raise ZeroDenominator("denominator polynomial is identically zero")

    @property
    def num_degree(self) -> int:
        """Degree of the numerator; -1 for the zero polynomial."""
        return len(self.num) - 1

    @property
    def den_degree(self) -> int:
        return len(self.den) - 1

    @property
    def is_zero(self) -> bool:
        return not self.num

    def bind(self, q: float, bindings: Mapping[str, float]) -> BoundIntegrand:
        """Evaluate all coefficients, giving a numeric integrand of ``p``."""
        num = np.array([float(evaluate(c, q=q, bindings=bindings)) for c in self.num])
        den = np.array([float(evaluate(c, q=q, bindings=bindings)) for c in self.den])
        return BoundIntegrand(num, den)


class BoundIntegrand:
    """Numeric rational function of ``p`` with all parameters fixed.

    Calling it evaluates ``num(p)/den(p)`` elementwise; an exact zero of
    the denominator raises :class:`DivisionByZero`.
    """

    def __init__(self, num, den):
        self.num = np.asarray(num, dtype=float)
        self.den = np.asarray(den, dtype=float)
        # numpy.polyval wants descending powers
        self._num_desc = self.num[::-1].copy()
        self._den_desc = self.den[::-1].copy()

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if not len(self.num):
            return np.zeros_like(x)
        d = np.polyval(self._den_desc, x)
        if np.any(d == 0.0):
            raise DivisionByZero("integrand denominator vanishes at an evaluation point")
        return np.polyval(self._num_desc, x) / d

    def real_poles(self, imag_tol: float = 1e-9) -> list[float]:
        """Real roots of the denominator, ascending."""
        coeffs = np.trim_zeros(self._den_desc, "f")
        if len(coeffs) <= 1:
            return []
        roots = np.roots(coeffs)
        real = [
            float(r.real) for r in roots if abs(r.imag) <= imag_tol * max(1.0, abs(r.real))
        ]
        return sorted(real)

    def poles_in(self, a: float, b: float = float("inf"), tol: float = 1e-9) -> list[float]:
        """Real denominator roots in ``[a - tol, b + tol]``."""
        return [r for r in self.real_poles() if a - tol <= r <= b + tol]


def _to_rat(e: Expression) -> tuple[Poly, Poly]:
    if isinstance(e, Const):
        return ((e,) if e.value != 0.0 else ()), (ONE,)
    if isinstance(e, Symbol):
        if e.name == INTEGRATION_VAR:
            return (ZERO, ONE), (ONE,)
        return (e,), (ONE,)
    if isinstance(e, Pow):
        n, d = _to_rat(e.base)
        rn, rd = (ONE,), (ONE,)
        for _ in range(e.exponent):
            rn, rd = _poly_mul(rn, n), _poly_mul(rd, d)
        return rn, rd
    n1, d1 = _to_rat(e.left)
    n2, d2 = _to_rat(e.right)
    if isinstance(e, (Add, Sub)):
        combine = _poly_add if isinstance(e, Add) else _poly_sub
        if d1 == d2:
            return _trim(combine(n1, n2)), d1
        return _trim(combine(_poly_mul(n1, d2), _poly_mul(n2, d1))), _poly_mul(d1, d2)
    if isinstance(e, Mul):
        return _trim(_poly_mul(n1, n2)), _poly_mul(d1, d2)
    assert isinstance(e, Div)
    n2 = _trim(n2)
    if not n2:
        raise ZeroDenominator(f"division by an identically zero expression")
    return _poly_mul(n1, d2), _poly_mul(d1, n2)


def to_rational(e: Expression) -> RationalForm:
    """Rewrite ``e`` as ``num(p)/den(p)`` over a common denominator."""
    n, d = _to_rat(e)
    return RationalForm(_trim(n), _trim(d))


def bind(e: Expression, q: float, bindings: Mapping[str, float]) -> BoundIntegrand:
    return to_rational(e).bind(q, bindings)


__all__ = [
    "RationalForm",
    "BoundIntegrand",
    "to_rational",
    "bind",
    "is_identically_zero",
    "EXTERNAL_VAR",
]
