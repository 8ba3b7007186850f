"""Superficial degree of divergence and convergence verdicts for half-line integrals."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .errors import DegenerateScaling, DivisionByZero
from .expr import Expression, RationalForm, evaluate, to_rational

# a root counts as "in the domain" from this far below zero
ROOT_TOLERANCE = 1e-9


class Verdict(str, enum.Enum):
    CONVERGENT = "Convergent"
    DIVERGENT = "Divergent"
    SINGULAR_ON_DOMAIN = "SingularOnDomain"


@dataclass(frozen=True)
class DivergenceReport:
    omega: int | float
    pole_free: bool
    verdict: Verdict
    poles: tuple[float, ...] = field(default=())


def sdd(r: RationalForm | Expression) -> int | float:
    """Superficial degree of divergence ``1 + deg num - deg den``.

    This is the exponent of ``lambda`` in ``lambda * F(lambda * p)`` for
    large ``lambda``; the leading 1 is the Jacobian of ``dp``. The
    identically-zero integrand gets ``-inf``.
    """
    if isinstance(r, Expression):
        r = to_rational(r)
    if r.is_zero:
        return -math.inf
    return 1 + r.num_degree - r.den_degree


def verify_sdd_numeric(
    e: Expression,
    bindings: Mapping[str, float],
    q: float,
    p0: float = 1.0,
    lambdas=None,
) -> float:
    """Least-squares slope of ``log|lambda F(lambda p0, q)|`` against ``log lambda``.

    The integrand is evaluated in exact rational arithmetic straight from
    the tree, so cancellations in subtracted integrands do not pollute
    the slope and the check stays independent of :func:`to_rational`.
    """
    if lambdas is None:
        lambdas = np.logspace(2, 6, 9)
    xs, ys = [], []
    for lam in lambdas:
        try:
            v = evaluate(e, p=lam * p0, q=q, bindings=bindings, exact=True)
        except DivisionByZero:
            continue
        v = abs(float(v * lam)) if v else 0.0
        if v == 0.0:
            continue
        xs.append(math.log(lam))
        ys.append(math.log(v))
    if len(xs) < 2:
        raise DegenerateScaling("scaled integrand vanishes on the lambda grid")
    slope, _ = np.polyfit(xs, ys, 1)
    return float(slope)


def domain_poles(
    r: RationalForm,
    bindings: Mapping[str, float],
    q: float,
    lower: float = 0.0,
    upper: float = math.inf,
) -> list[float]:
    """Real roots of the bound denominator lying in ``[lower, upper]``."""
    return r.bind(q, bindings).poles_in(lower, upper, ROOT_TOLERANCE)


def pole_scan(r: RationalForm, bindings: Mapping[str, float], q: float) -> bool:
    """True iff the bound denominator has no real root in ``[0, inf)``."""
    return not domain_poles(r, bindings, q)


def analyze(e: Expression, bindings: Mapping[str, float], q: float) -> DivergenceReport:
    r = to_rational(e)
    omega = sdd(r)
    poles = domain_poles(r, bindings, q)
    if poles:
        verdict = Verdict.SINGULAR_ON_DOMAIN
    elif omega < 0:
        verdict = Verdict.CONVERGENT
    else:
        verdict = Verdict.DIVERGENT
    return DivergenceReport(omega, not poles, verdict, tuple(poles))
