import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from divlim.errors import (
    InsufficientOrder,
    InvalidRegulator,
    NonConvergent,
    RegulatorDisagreement,
    SingularOnDomain,
)
from divlim.expr import parse
from divlim.regfin import (
    DEFAULT_INTEGRAND,
    DEFAULT_PARTNER,
    HardCutoff,
    Method,
    NoRegulator,
    Partner,
    SubtractionSpec,
    Symmetry,
    cross_regulator_check,
    finite_part_cutoff_limit,
    finite_part_direct,
    regularized_value,
    scheme_translation,
    subtraction,
    symmetry_check,
    taylor_subtracted_integrand,
)

F = parse(DEFAULT_INTEGRAND)
LINEAR = parse("p/(p+q+m^2)")
# second-order partner for the linearly divergent integrand: its difference
# from LINEAR falls off like 1/p^2
LINEAR_PARTNER = "p/(p+q+m*M) + (m*M - m^2)*p/(p+q+m*M)^2"


def linear_oracle(q, m):
    """k=1 finite part of p/(p+q+m^2) at q_s=0 (checked against sympy below)."""
    a = q + m * m
    return a * math.log(a / (m * m)) - q


def test_linear_oracle_against_sympy():
    sp = pytest.importorskip("sympy")
    p, q, m = sp.symbols("p q m", positive=True)
    f = p / (p + q + m**2)
    g = f - f.subs(q, 0) - q * sp.diff(f, q).subs(q, 0)
    value = sp.integrate(sp.simplify(g), (p, 0, sp.oo))
    for qv, mv in [(1, 1), (2.5, 0.5), (0.1, 2)]:
        assert float(value.subs({q: qv, m: mv})) == pytest.approx(linear_oracle(qv, mv), abs=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.floats(0.01, 10.0), st.floats(0.5, 2.0), st.floats(10.0, 1e4))
def test_cutoff_closed_form(q, m, cutoff):
    v = regularized_value(F, HardCutoff(cutoff), q, {"m": m}).value
    assert abs(v - math.log((cutoff + q + m * m) / (q + m * m))) < 1e-9


@settings(max_examples=25, deadline=None)
@given(st.floats(0.01, 10.0), st.floats(0.5, 2.0), st.floats(10.0, 1e4))
def test_partner_closed_form(q, m, scale):
    reg = Partner.for_integrand(F, DEFAULT_PARTNER, scale)
    v = regularized_value(F, reg, q, {"m": m}).value
    assert abs(v - math.log((q + m * scale) / (q + m * m))) < 1e-8


def test_bad_regulators():
    with pytest.raises(InvalidRegulator):
        Partner.for_integrand(LINEAR, DEFAULT_PARTNER, 10.0)
    with pytest.raises(InvalidRegulator):
        regularized_value(F, NoRegulator(), 1.0, {"m": 1.0})
    with pytest.raises(InvalidRegulator):
        Partner(parse(DEFAULT_PARTNER), -1.0)
    with pytest.raises(NonConvergent):
        regularized_value(LINEAR, Partner(parse(DEFAULT_PARTNER), 10.0), 1.0, {"m": 1.0})


def test_pole_on_domain_is_reported():
    with pytest.raises(SingularOnDomain):
        regularized_value(parse("1/(p-q)"), HardCutoff(10.0), 2.0, {})


def test_taylor_subtraction_uses_factorials():
    e = parse("q^3")
    sub = taylor_subtracted_integrand(e, SubtractionSpec(2, 1.0))
    from divlim.expr import evaluate
    # q^3 minus its quadratic Taylor polynomial at 1 is (q-1)^3
    for q in (0.0, 0.5, 2.0, 3.0):
        assert evaluate(sub, p=1.0, q=q) == pytest.approx((q - 1.0) ** 3)


@pytest.mark.parametrize("q", [0.1, 1.0, 10.0])
@pytest.mark.parametrize("m", [0.5, 1.0, 2.0])
def test_three_methods_agree_with_closed_form(q, m):
    b = {"m": m}
    spec = SubtractionSpec(0, 0.0)
    expected = math.log(m * m / (q + m * m))
    direct = finite_part_direct(F, spec, q, b)
    cutoff = finite_part_cutoff_limit(F, HardCutoff(1.0), spec, q, b)
    partner = finite_part_cutoff_limit(F, Partner.for_integrand(F, DEFAULT_PARTNER, 1.0), spec, q, b)
    assert direct.method is Method.DIRECT
    assert cutoff.method is Method.CUTOFF and partner.method is Method.PARTNER
    for r in (direct, cutoff, partner):
        assert abs(r.value - expected) < 1e-8


def test_subtraction_point_shift():
    # moving q_s from 0 to 1 changes the finite part by ln((1+m^2)/m^2)
    b = {"m": 1.0}
    v0 = finite_part_direct(F, SubtractionSpec(0, 0.0), 3.0, b).value
    v1 = finite_part_direct(F, SubtractionSpec(0, 1.0), 3.0, b).value
    assert v0 - v1 == pytest.approx(-math.log(2.0), abs=1e-10)


def test_finite_part_vanishes_at_subtraction_point():
    r = finite_part_direct(F, SubtractionSpec(0, 2.0), 2.0, {"m": 1.0})
    assert r.value == 0.0


def test_linear_divergence_needs_first_order():
    with pytest.raises(InsufficientOrder) as info:
        finite_part_direct(LINEAR, SubtractionSpec(0, 0.0), 1.0, {"m": 1.0})
    assert info.value.omega == 1
    with pytest.raises(InsufficientOrder):
        finite_part_cutoff_limit(LINEAR, HardCutoff(1.0), SubtractionSpec(0), 1.0, {"m": 1.0})


def test_linear_divergence_all_methods():
    b = {"m": 1.0}
    spec = SubtractionSpec(1, 0.0)
    expected = linear_oracle(1.0, 1.0)
    assert abs(finite_part_direct(LINEAR, spec, 1.0, b).value - expected) < 1e-7
    assert abs(finite_part_cutoff_limit(LINEAR, HardCutoff(1.0), spec, 1.0, b, 1e-8).value - expected) < 1e-7
    reg = Partner.for_integrand(LINEAR, LINEAR_PARTNER, 1.0)
    assert abs(finite_part_cutoff_limit(LINEAR, reg, spec, 1.0, b, 1e-8).value - expected) < 1e-7


def test_cutoff_limit_reports_subtraction_terms():
    r = finite_part_cutoff_limit(F, HardCutoff(1.0), SubtractionSpec(0), 1.0, {"m": 1.0})
    (n, c0), = r.subtraction_terms
    assert n == 0
    # the subtraction constant is the regularized integral at q_s=0
    assert c0 == pytest.approx(math.log(r.regulator_scale + 1.0), abs=1e-9)


def test_cross_regulator_check():
    rep = cross_regulator_check(F, SubtractionSpec(0), [0.1, 1.0, 10.0], {"m": 1.0})
    assert rep.max_discrepancy < 1e-9
    assert len(rep.rows) == 3
    assert set(rep.rows[0].values) == set(Method)


def test_cross_regulator_check_raises_on_impossible_tolerance():
    with pytest.raises(RegulatorDisagreement):
        cross_regulator_check(F, SubtractionSpec(0), [10.0], {"m": 1.0}, tol=1e-20)


def test_scheme_translation():
    b = {"m": 1.0}
    scale = 1e8
    cut = HardCutoff(scale)
    part = Partner.for_integrand(F, DEFAULT_PARTNER, scale)
    q = 2.0
    translated = scheme_translation(
        regularized_value(F, cut, q, b).value,
        regularized_value(F, cut, 0.0, b).value,
        regularized_value(F, part, 0.0, b).value,
    )
    assert abs(translated - regularized_value(F, part, q, b).value) < 1e-6


def test_subtraction_polynomial():
    poly = subtraction(F, HardCutoff(100.0), SubtractionSpec(1, 0.0), {"m": 1.0})
    assert poly.coefficients[0] == pytest.approx(math.log(101.0), abs=1e-10)
    assert poly.coefficients[1] == pytest.approx(1.0 / 101.0 - 1.0, abs=1e-10)
    assert poly(0.0) == poly.coefficients[0]


def test_symmetry_hard_cutoff_invariant():
    rep = symmetry_check(F, "m", HardCutoff(1e4), 1.0, {"m": 1.0})
    assert rep.classification is Symmetry.INVARIANT
    assert rep.subtraction_classification is Symmetry.INVARIANT
    assert abs(rep.value - rep.flipped_value) < 1e-10


def test_symmetry_partner_ill_defined():
    reg = Partner.for_integrand(F, DEFAULT_PARTNER, 100.0)
    rep = symmetry_check(F, "m", reg, 1.0, {"m": 1.0})
    assert rep.classification is Symmetry.ILL_DEFINED
    assert rep.flipped_value is None
    assert rep.flipped_poles == pytest.approx((99.0,))
    assert rep.subtraction_classification is Symmetry.ILL_DEFINED


def test_symmetry_even_partner_invariant():
    reg = Partner.for_integrand(F, "1/(p+q+m^2*M)", 100.0)
    rep = symmetry_check(F, "m", reg, 1.0, {"m": 1.0})
    assert rep.classification is Symmetry.INVARIANT


def test_symmetry_non_invariant():
    rep = symmetry_check(parse("1/(p+q+m^2+m)"), "m", HardCutoff(100.0), 1.0, {"m": 1.0})
    assert rep.classification is Symmetry.NON_INVARIANT


def test_symmetry_requires_bound_parameter():
    with pytest.raises(KeyError):
        symmetry_check(F, "k", HardCutoff(10.0), 1.0, {"m": 1.0})
