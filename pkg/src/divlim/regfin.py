"""Regularization schemes, Taylor subtraction and finite-part extraction.

Three routes to the finite part of a divergent integral are provided:

* ``finite_part_direct`` subtracts the Taylor polynomial in ``q`` from the
  integrand and integrates the (convergent) remainder over ``[0, inf)``;
  no regulator is involved.
* ``finite_part_cutoff_limit`` with a :class:`HardCutoff` integrates up to
  ``p = Lambda``, subtracts the Taylor polynomial of the *regularized*
  integral and lets ``Lambda -> inf``.
* the same function with a :class:`Partner` regulator subtracts a partner
  integrand of scale ``M`` and lets ``M -> inf``.

All three must agree; :func:`cross_regulator_check` asserts it.
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Union

from .divergence import ROOT_TOLERANCE, sdd
from .errors import (
    InsufficientOrder,
    InvalidRegulator,
    NonConvergent,
    PoleOnInterval,
    RegulatorDisagreement,
    SingularOnDomain,
    SlowConvergence,
)
from .expr import EXTERNAL_VAR, Const, Expression, RationalForm, differentiate, parse, to_rational
from .expr.nodes import div, mul, power, sub, substitute
from .expr.nodes import q as q_symbol
from .quad import DEFAULT_TOL, QuadResult, integrate_finite, integrate_semi_infinite

DEFAULT_INTEGRAND = "1/(p+q+m^2)"
DEFAULT_PARTNER = "1/(p+q+m*M)"

SCHEDULE_CAP_DOUBLINGS = 40
# quadratures inside a limit run tighter than the limit itself; the pieces
# grow with the regulator scale, so a relative floor keeps them attainable
_INNER_TOL_FACTOR = 1e-2
_INNER_REL_TOL = 1e-14


# -- regulators -------------------------------------------------------------

@dataclass(frozen=True)
class HardCutoff:
    """Integrate over ``[0, cutoff]`` only."""

    cutoff: float

    def __post_init__(self):
        if not (math.isfinite(self.cutoff) and self.cutoff > 0):
            raise InvalidRegulator(f"cutoff must be finite and positive, got {self.cutoff}")

    @property
    def scale(self) -> float:
        return self.cutoff

    def with_scale(self, c: float) -> HardCutoff:
        return HardCutoff(c)


@dataclass(frozen=True)
class Partner:
    """Subtract ``partner`` (an integrand depending on the scale symbol) before integrating."""

    partner: Expression
    scale: float
    scale_name: str = "M"

    def __post_init__(self):
        if not (math.isfinite(self.scale) and self.scale > 0):
            raise InvalidRegulator(f"partner scale must be finite and positive, got {self.scale}")

    @classmethod
    def for_integrand(cls, integrand: Expression, partner: Expression | str, scale: float,
                      scale_name: str = "M") -> Partner:
        """Build a partner regulator, checking that it makes ``integrand`` convergent."""
        if isinstance(partner, str):
            partner = parse(partner)
        reg = cls(partner, scale, scale_name)
        check_partner(integrand, reg)
        return reg

    def with_scale(self, c: float) -> Partner:
        return replace(self, scale=c)

    def bindings(self, b: Mapping[str, float]) -> dict[str, float]:
        return {**b, self.scale_name: self.scale}


@dataclass(frozen=True)
class NoRegulator:
    """Pure Taylor subtraction on the integrand; only valid for ``finite_part_direct``."""


Regulator = Union[HardCutoff, Partner, NoRegulator]


def check_partner(e: Expression, reg: Partner) -> None:
    omega = sdd(sub(e, reg.partner))
    if omega >= 0:
        raise InvalidRegulator(
            f"integrand minus partner still has omega={omega}; the partner must "
            f"cancel the large-p behaviour so that omega < 0"
        )


def regulated_integrand(e: Expression, reg: Regulator) -> Expression:
    if isinstance(reg, Partner):
        return sub(e, reg.partner)
    if isinstance(reg, HardCutoff):
        return e
    raise InvalidRegulator("NoRegulator has no regularized integral; use finite_part_direct")


def _bindings(reg: Regulator, b: Mapping[str, float]) -> dict[str, float]:
    return reg.bindings(b) if isinstance(reg, Partner) else dict(b)


def _upper(reg: Regulator) -> float:
    return reg.cutoff if isinstance(reg, HardCutoff) else math.inf


def _integrate_bound(r: RationalForm, reg: Regulator, q: float, b: Mapping[str, float],
                     tol: float, lower: float = 0.0, upper: float | None = None,
                     rel_tol: float = 0.0) -> QuadResult:
    f = r.bind(q, _bindings(reg, b))
    hi = _upper(reg) if upper is None else upper
    poles = f.poles_in(0.0, hi, ROOT_TOLERANCE)
    if poles:
        raise SingularOnDomain(f"integrand has a pole at p={poles[0]:.17g} on the domain", poles)
    try:
        if math.isinf(hi):
            return integrate_semi_infinite(f, lower, tol, rel_tol=rel_tol)
        return integrate_finite(f, lower, hi, tol, rel_tol=rel_tol)
    except PoleOnInterval as exc:
        raise SingularOnDomain(str(exc)) from exc


def regularized_value(e: Expression, reg: Regulator, q: float, b: Mapping[str, float],
                      tol: float = DEFAULT_TOL) -> QuadResult:
    """The regularized integral: ``int_0^cutoff e dp`` or ``int_0^inf (e - partner) dp``."""
    if isinstance(reg, NoRegulator):
        raise InvalidRegulator("NoRegulator has no regularized integral; use finite_part_direct")
    r = to_rational(regulated_integrand(e, reg))
    if isinstance(reg, Partner) and sdd(r) >= 0:
        raise NonConvergent(f"integrand minus partner has omega={sdd(r)} >= 0")
    return _integrate_bound(r, reg, q, b, tol)


# -- subtraction ------------------------------------------------------------

@dataclass(frozen=True)
class SubtractionSpec:
    order: int = 0
    point: float = 0.0

    def __post_init__(self):
        if self.order < 0:
            raise ValueError(f"subtraction order must be >= 0, got {self.order}")
        if self.point < 0:
            raise ValueError(f"subtraction point must be >= 0, got {self.point}")


def taylor_coefficient_integrands(e: Expression, spec: SubtractionSpec) -> list[Expression]:
    """``d^n e / dq^n`` at ``q = point`` for ``n = 0..order`` (no ``1/n!``)."""
    at = Const(spec.point)
    out = [substitute(e, EXTERNAL_VAR, at)]
    d = e
    for _ in range(spec.order):
        d = differentiate(d, EXTERNAL_VAR)
        out.append(substitute(d, EXTERNAL_VAR, at))
    return out


def taylor_subtracted_integrand(e: Expression, spec: SubtractionSpec) -> Expression:
    """``e - sum_n (1/n!) [d^n e/dq^n]_{q=point} (q - point)^n`` for ``n <= order``."""
    shift = sub(q_symbol, Const(spec.point))
    out = e
    for n, dn in enumerate(taylor_coefficient_integrands(e, spec)):
        term = mul(div(dn, Const(math.factorial(n))), power(shift, n))
        out = sub(out, term)
    return out


class Method(str, enum.Enum):
    DIRECT = "DirectSubtracted"
    CUTOFF = "CutoffLimit"
    PARTNER = "PartnerLimit"


@dataclass(frozen=True)
class FinitePartResult:
    value: float
    abs_error_estimate: float
    method: Method
    # (n, (1/n!) d^n I^Reg/dq^n at the subtraction point), regulator methods only
    subtraction_terms: tuple[tuple[int, float], ...] = ()
    regulator_scale: float | None = None


def _require_order(e: Expression, spec: SubtractionSpec) -> int:
    omega = sdd(e)
    if spec.order < omega:
        raise InsufficientOrder(omega, spec.order)
    return omega


def finite_part_direct(e: Expression, spec: SubtractionSpec, q: float, b: Mapping[str, float],
                       tol: float = DEFAULT_TOL) -> FinitePartResult:
    """Finite part by integrating the Taylor-subtracted integrand over ``[0, inf)``."""
    _require_order(e, spec)
    r = to_rational(taylor_subtracted_integrand(e, spec))
    if r.is_zero:
        return FinitePartResult(0.0, 0.0, Method.DIRECT)
    if sdd(r) >= 0:
        raise NonConvergent(f"subtracted integrand still has omega={sdd(r)}")
    res = _integrate_bound(r, NoRegulator(), q, b, tol, upper=math.inf)
    return FinitePartResult(res.value, res.abs_error_estimate, Method.DIRECT)


def schedule_start(q: float, spec: SubtractionSpec, b: Mapping[str, float],
                   exclude: Iterable[str] = ()) -> float:
    """First regulator scale ``10 (|q| + |q_s| + m^2 + 1)``; ``m^2`` is the largest squared parameter."""
    skip = set(exclude)
    m2 = max((v * v for k, v in b.items() if k not in skip), default=0.0)
    return 10.0 * (abs(q) + abs(spec.point) + m2 + 1.0)


class _CutoffSequence:
    """G(c) for a hard cutoff, accumulating integrals over ``[c_prev, c]``."""

    def __init__(self, main: RationalForm, coeffs: list[RationalForm], q, spec, b, tol):
        self.fq = main.bind(q, b)
        self.fn = [c.bind(spec.point, b) for c in coeffs]
        for f in [self.fq, *self.fn]:
            poles = f.poles_in(0.0, math.inf, ROOT_TOLERANCE)
            if poles:
                raise SingularOnDomain(f"integrand has a pole at p={poles[0]:.17g}", poles)
        self.weights = [(q - spec.point) ** n / math.factorial(n) for n in range(len(coeffs))]
        self.tol = tol
        self.c = 0.0
        self.iq = 0.0
        self.jn = [0.0] * len(coeffs)
        self.noise = 0.0

    def advance(self, c: float) -> float:
        r = integrate_finite(self.fq, self.c, c, self.tol, rel_tol=_INNER_REL_TOL)
        self.iq += r.value
        self.noise += r.abs_error_estimate
        for n, f in enumerate(self.fn):
            r = integrate_finite(f, self.c, c, self.tol, rel_tol=_INNER_REL_TOL)
            self.jn[n] += r.value
            self.noise += abs(self.weights[n]) * r.abs_error_estimate
        self.c = c
        return self.iq - math.fsum(w * j for w, j in zip(self.weights, self.jn))


class _PartnerSequence:
    """G(M) for a partner regulator; every scale needs fresh integrals over ``[0, inf)``."""

    def __init__(self, reg: Partner, main: RationalForm, coeffs: list[RationalForm], q, spec, b, tol):
        self.reg, self.main, self.coeffs = reg, main, coeffs
        self.q, self.spec, self.b, self.tol = q, spec, b, tol
        self.weights = [(q - spec.point) ** n / math.factorial(n) for n in range(len(coeffs))]
        self.jn = []
        self.noise = 0.0

    def advance(self, c: float) -> float:
        reg = self.reg.with_scale(c)
        r = _integrate_bound(self.main, reg, self.q, self.b, self.tol, rel_tol=_INNER_REL_TOL)
        noise = r.abs_error_estimate
        jn = []
        for n, coeff in enumerate(self.coeffs):
            rn = _integrate_bound(coeff, reg, self.spec.point, self.b, self.tol,
                                  rel_tol=_INNER_REL_TOL)
            jn.append(rn.value)
            noise += abs(self.weights[n]) * rn.abs_error_estimate
        self.jn = jn
        self.noise = noise
        return r.value - math.fsum(w * j for w, j in zip(self.weights, jn))


def finite_part_cutoff_limit(e: Expression, reg: Regulator, spec: SubtractionSpec, q: float,
                             b: Mapping[str, float], tol: float = DEFAULT_TOL) -> FinitePartResult:
    """Finite part as the regulator-removal limit of the subtracted regularized integral.

    ``G(c) = I_c(q) - sum_n (1/n!) I_c^(n)(q_s) (q - q_s)^n`` is evaluated at
    ``c = c0, 2 c0, 4 c0, ...``; the Taylor coefficients ``I_c^(n)`` come from
    integrating the symbolic q-derivatives of the (regularized) integrand.
    Successive Richardson values ``2 G(2c) - G(c)`` are compared against
    ``tol``.
    """
    if isinstance(reg, NoRegulator):
        raise InvalidRegulator("a regulator-removal limit needs HardCutoff or Partner")
    _require_order(e, spec)
    if isinstance(reg, Partner):
        check_partner(e, reg)
    integrand = regulated_integrand(e, reg)
    main = to_rational(integrand)
    coeffs = [to_rational(d) for d in taylor_coefficient_integrands(integrand, spec)]
    inner_tol = tol * _INNER_TOL_FACTOR
    if isinstance(reg, HardCutoff):
        seq = _CutoffSequence(main, coeffs, q, spec, b, inner_tol)
        method = Method.CUTOFF
        c0 = schedule_start(q, spec, b)
    else:
        seq = _PartnerSequence(reg, main, coeffs, q, spec, b, inner_tol)
        method = Method.PARTNER
        c0 = schedule_start(q, spec, b, exclude=[reg.scale_name])

    cap = c0 * 2.0 ** SCHEDULE_CAP_DOUBLINGS
    c = c0
    g_prev = seq.advance(c)
    noise_prev = seq.noise
    r_prev = None
    while True:
        c *= 2.0
        if c > cap:
            raise SlowConvergence(
                f"no convergence to tol={tol:.1e} by regulator scale {cap:.3e}"
            )
        g = seq.advance(c)
        r = 2.0 * g - g_prev
        # quadrature noise in 2 G(2c) - G(c), for both Richardson values compared
        noise = 3.0 * (seq.noise + noise_prev)
        if r_prev is not None:
            diff = abs(r - r_prev)
            if diff < max(tol, noise):
                terms = tuple(
                    (n, j / math.factorial(n)) for n, j in enumerate(seq.jn)
                )
                return FinitePartResult(r, diff + noise, method, terms, c)
        g_prev, r_prev, noise_prev = g, r, seq.noise


# -- consistency checks -----------------------------------------------------

@dataclass(frozen=True)
class CrossCheckRow:
    q: float
    values: dict[Method, float]
    max_discrepancy: float


@dataclass(frozen=True)
class CrossCheckReport:
    rows: tuple[CrossCheckRow, ...]
    max_discrepancy: float
    worst_q: float | None
    worst_pair: tuple[Method, Method] | None


def cross_regulator_check(e: Expression, spec: SubtractionSpec, q_grid: Iterable[float],
                          b: Mapping[str, float], tol: float = DEFAULT_TOL,
                          partner: Expression | str = DEFAULT_PARTNER,
                          scale_name: str = "M") -> CrossCheckReport:
    """All three finite-part methods at every ``q``; they must agree within ``10 tol``."""
    if isinstance(partner, str):
        partner = parse(partner)
    partner_reg = Partner.for_integrand(e, partner, 1.0, scale_name)
    rows = []
    worst = (0.0, None, None)
    for qv in q_grid:
        values = {
            Method.DIRECT: finite_part_direct(e, spec, qv, b, tol).value,
            Method.CUTOFF: finite_part_cutoff_limit(e, HardCutoff(1.0), spec, qv, b, tol).value,
            Method.PARTNER: finite_part_cutoff_limit(e, partner_reg, spec, qv, b, tol).value,
        }
        row_max = 0.0
        for m1, m2 in itertools.combinations(values, 2):
            d = abs(values[m1] - values[m2])
            row_max = max(row_max, d)
            if d > worst[0]:
                worst = (d, qv, (m1, m2))
        rows.append(CrossCheckRow(qv, values, row_max))
    report = CrossCheckReport(tuple(rows), worst[0], worst[1], worst[2])
    if worst[0] > 10.0 * tol:
        raise RegulatorDisagreement(worst[1], tuple(m.value for m in worst[2]), worst[0])
    return report


def scheme_translation(i_reg_q: float, i_reg_0: float, i_regprime_0: float) -> float:
    """Regularized value in scheme Reg' from the full value in Reg and both subtraction constants."""
    return i_reg_q - i_reg_0 + i_regprime_0


@dataclass(frozen=True)
class SubtractionPolynomial:
    """``sum_n coefficients[n] (q - point)^n`` with regulator-dependent coefficients."""

    point: float
    coefficients: tuple[float, ...]

    def __call__(self, q: float) -> float:
        return math.fsum(c * (q - self.point) ** n for n, c in enumerate(self.coefficients))


def subtraction(e: Expression, reg: Regulator, spec: SubtractionSpec, b: Mapping[str, float],
                tol: float = DEFAULT_TOL) -> SubtractionPolynomial:
    """Taylor polynomial of the regularized integral at a fixed regulator scale."""
    integrand = regulated_integrand(e, reg)
    coeffs = []
    for n, dn in enumerate(taylor_coefficient_integrands(integrand, spec)):
        r = _integrate_bound(to_rational(dn), reg, spec.point, b, tol)
        coeffs.append(r.value / math.factorial(n))
    return SubtractionPolynomial(spec.point, tuple(coeffs))


# -- symmetry ---------------------------------------------------------------

class Symmetry(str, enum.Enum):
    INVARIANT = "Invariant"
    NON_INVARIANT = "NonInvariant"
    ILL_DEFINED = "IllDefined"


@dataclass(frozen=True)
class SymmetryReport:
    param: str
    classification: Symmetry
    subtraction_classification: Symmetry
    value: float
    flipped_value: float | None
    subtraction_values: tuple[float, ...]
    flipped_subtraction_values: tuple[float, ...] | None
    # denominator roots on the domain in the flipped configuration
    flipped_poles: tuple[float, ...] = field(default=())
    flipped_subtraction_poles: tuple[float, ...] = field(default=())


def _poles(r: RationalForm, reg: Regulator, q: float, b: Mapping[str, float]) -> list[float]:
    return r.bind(q, _bindings(reg, b)).poles_in(0.0, _upper(reg), ROOT_TOLERANCE)


def symmetry_check(e: Expression, param: str, reg: Regulator, q: float, b: Mapping[str, float],
                   tol: float = DEFAULT_TOL, spec: SubtractionSpec | None = None) -> SymmetryReport:
    """Compare the regularized integral, and its subtraction terms, at ``param`` and ``-param``.

    ``IllDefined`` means the flipped configuration has a pole on the
    integration domain, so there is no flipped value to compare.
    """
    if param not in b:
        raise KeyError(f"parameter {param!r} is not bound")
    if spec is None:
        spec = SubtractionSpec(max(int(sdd(e)), 0), 0.0) if sdd(e) > -math.inf else SubtractionSpec()
    flipped = {**b, param: -b[param]}
    quad_tol = tol * 0.1
    integrand = regulated_integrand(e, reg)
    main = to_rational(integrand)
    coeffs = [to_rational(d) for d in taylor_coefficient_integrands(integrand, spec)]

    value = _integrate_bound(main, reg, q, b, quad_tol).value
    sub_values = tuple(
        _integrate_bound(c, reg, spec.point, b, quad_tol).value / math.factorial(n)
        for n, c in enumerate(coeffs)
    )

    poles = _poles(main, reg, q, flipped)
    if poles:
        cls, flipped_value = Symmetry.ILL_DEFINED, None
    else:
        flipped_value = _integrate_bound(main, reg, q, flipped, quad_tol).value
        cls = Symmetry.INVARIANT if abs(flipped_value - value) <= tol else Symmetry.NON_INVARIANT

    sub_poles = sorted({x for c in coeffs for x in _poles(c, reg, spec.point, flipped)})
    if sub_poles:
        sub_cls, flipped_subs = Symmetry.ILL_DEFINED, None
    else:
        flipped_subs = tuple(
            _integrate_bound(c, reg, spec.point, flipped, quad_tol).value / math.factorial(n)
            for n, c in enumerate(coeffs)
        )
        same = all(abs(a - b_) <= tol for a, b_ in zip(sub_values, flipped_subs))
        sub_cls = Symmetry.INVARIANT if same else Symmetry.NON_INVARIANT
    return SymmetryReport(param, cls, sub_cls, value, flipped_value, sub_values, flipped_subs,
                          tuple(poles), tuple(sub_poles))

