"""Certification ladder and precedence order for generating pairs."""

from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from mpmath import mp, mpc, mpf

from hyperorbit.errors import UnitModulusDenominator, ZeroModulus
from hyperorbit.pairs import (
    Certificate,
    CertifyOptions,
    GeneratingPair,
    Ordering,
    certify_generating,
    empirical_density,
    log_ratio,
    prec_compare,
)
from hyperorbit.scalars import Field, FieldElement

R = Field.REAL
C = Field.COMPLEX


def fe(value, field=R):
    return FieldElement.from_rational(Fraction(value), field)


# Independent 20-digit references for the two log-ratio examples, from
# ln 2 = 0.69314718055994530942 and ln 3 = 1.09861228866810969140.
LOG3_OF_2 = "0.63092975357145743710"


def test_log_ratio_trivial_minus_one():
    assert log_ratio(fe("1/2"), fe(2)) == -1


def test_log_ratio_reference_values():
    r = log_ratio(fe("-1/2"), fe(3))
    assert abs(r + mpf(LOG3_OF_2)) < mpf(10) ** -19
    r2 = log_ratio(fe("-1/8"), fe(3))
    assert abs(r2 + 3 * mpf(LOG3_OF_2)) < mpf(10) ** -19


def test_log_ratio_errors():
    with pytest.raises(ZeroModulus):
        log_ratio(FieldElement.zero(R), fe(2))
    with pytest.raises(UnitModulusDenominator):
        log_ratio(fe("1/2"), fe(-1))


def test_refuted_rational_ratio():
    pair = certify_generating(fe("1/2"), fe(2))
    assert pair.certificate is Certificate.REFUTED_RATIONAL_RATIO
    assert "lattice" in pair.witness


def test_refuted_sign_coverage():
    pair = certify_generating(fe("1/2"), fe(3))
    assert pair.certificate is Certificate.REFUTED_SIGN_COVERAGE


def test_certified_heuristic_real():
    pair = certify_generating(fe("-1/2"), fe(3))
    assert pair.certificate is Certificate.CERTIFIED_HEURISTIC
    assert pair.is_certified
    assert abs(pair.log_ratio + mpf(LOG3_OF_2)) < mpf(10) ** -19
    assert pair.empirical is not None
    assert pair.empirical.samples == 512
    assert pair.empirical.coverage > Fraction(1, 2)


def test_certified_heuristic_complex_phase():
    a = FieldElement.complex_polar(Fraction(1, 2), rad=Fraction(1))
    b = fe(3, C)
    pair = certify_generating(a, b)
    assert pair.certificate is Certificate.CERTIFIED_HEURISTIC


def test_refuted_magnitude():
    assert (
        certify_generating(fe("3/2"), fe(3)).certificate
        is Certificate.REFUTED_MAGNITUDE
    )
    pair = certify_generating(fe("-1/2"), fe(-1))
    assert pair.certificate is Certificate.REFUTED_MAGNITUDE
    assert mpmath.isnan(pair.log_ratio)


def test_refuted_phase_both_rational_turns():
    a = FieldElement.complex_polar(Fraction(1, 2), turns=Fraction(1, 8))
    b = FieldElement.complex_polar(Fraction(3), turns=Fraction(1, 3))
    pair = certify_generating(a, b)
    assert pair.certificate is Certificate.REFUTED_PHASE
    assert "rays" in pair.witness


def test_unknown_on_near_rational_ratio():
    # ln|a|/ln|b| == -2/5 numerically but the moduli carry no exact form,
    # so the ladder cannot refute exactly and must stay agnostic.
    b = fe(3)
    mag = mpmath.exp(b.log_mag * mpf(-2) / 5)
    a = FieldElement.from_rect(-mag, R)
    pair = certify_generating(a, b)
    assert pair.certificate is Certificate.UNKNOWN
    assert "-2/5" in pair.witness
    assert pair.empirical is not None


def test_unknown_on_suspected_commensurate_phases():
    theta = 2 * mpmath.pi / 7
    a = FieldElement.from_rect(mpf("0.5") * mpc(mpmath.cos(theta), mpmath.sin(theta)), C)
    b = fe(3, C)
    pair = certify_generating(a, b)
    assert pair.certificate is Certificate.UNKNOWN
    assert "commensurate" in pair.witness


def test_empirical_survey_deterministic_and_opt_out():
    a, b = fe("-1/2"), fe(3)
    r1 = empirical_density(a, b, 256)
    r2 = empirical_density(a, b, 256)
    assert r1 == r2
    bare = certify_generating(a, b, CertifyOptions(empirical="never"))
    assert bare.empirical is None


def test_prec_compare_chain():
    p1 = certify_generating(fe("-1/2"), fe(3))
    p2 = certify_generating(fe("-1/8"), fe(3))
    p3 = certify_generating(fe("-1/256"), fe(9))
    assert prec_compare(p2, p1).outcome is Ordering.LESS
    assert prec_compare(p3, p2).outcome is Ordering.LESS
    assert prec_compare(p3, p1).outcome is Ordering.LESS  # transitive closure
    assert prec_compare(p1, p2).outcome is Ordering.NOT_LESS
    assert prec_compare(p1, p1).outcome is Ordering.NOT_LESS  # irreflexive


def test_prec_compare_uncertified_incomparable():
    p = certify_generating(fe("-1/2"), fe(3))
    u = GeneratingPair(fe("-1/2"), fe(3), mpf("-0.63"), Certificate.UNKNOWN)
    assert prec_compare(p, u).outcome is Ordering.INCOMPARABLE
    assert prec_compare(u, p).outcome is Ordering.INCOMPARABLE


def test_prec_compare_strictness_margin():
    a, b = fe("-1/2"), fe(3)
    base = mpf("-0.5")
    mk = lambda r: GeneratingPair(a, b, r, Certificate.CERTIFIED_HEURISTIC)
    inside = prec_compare(mk(base), mk(base + mpf(10) ** -31))
    assert inside.outcome is Ordering.NOT_LESS
    outside = prec_compare(mk(base), mk(base + mpf(10) ** -29))
    assert outside.outcome is Ordering.LESS


def test_dependence_witness_is_exact():
    # 8^2 == 4^3: dependence must be found and refuted.
    pair = certify_generating(fe("-1/8"), fe(4))
    assert pair.certificate is Certificate.REFUTED_RATIONAL_RATIO


nonzero_fractions = st.fractions(
    min_value=Fraction(-4), max_value=Fraction(4), max_denominator=16
).filter(lambda f: f != 0)


@settings(max_examples=80, deadline=None)
@given(nonzero_fractions, nonzero_fractions)
def test_never_certifies_bad_magnitudes(fa, fb):
    pair = certify_generating(fe(fa), fe(fb))
    if abs(fa) >= 1 or abs(fb) <= 1:
        assert not pair.is_certified
    if pair.is_certified:
        assert pair.log_ratio < 0


def test_cone_decay_bound():
    # For ratio(a,b) < ratio(c,d): on the cone |c^m d^n| <= M the competing
    # product collapses, with the explicit linear bound in m.
    a, b = fe("-1/8"), fe(3)
    c, d = fe("-1/2"), fe(3)
    r1 = log_ratio(a, b)
    r2 = log_ratio(c, d)
    assert r1 < r2
    big_m = mpf(10)
    ln_m = mpmath.ln(big_m)
    checked = 0
    for m in range(0, 400):
        for n in range(0, 400):
            if m * c.log_mag + n * d.log_mag <= ln_m:
                lhs = m * a.log_mag + n * b.log_mag
                rhs = m * b.log_mag * (r1 - r2) + ln_m * b.log_mag / d.log_mag
                assert lhs <= rhs + mpf(10) ** -100
                checked += 1
    assert checked > 1000
