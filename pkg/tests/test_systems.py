"""System construction, validation ladders, the affine lift, and strict IO."""

import json
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from mpmath import mp, mpf

from hyperorbit.errors import (
    DimensionMismatch,
    FieldMismatch,
    MalformedInput,
    PrecViolation,
    SingularAminusI,
    ZeroFirstCoordinate,
)
from hyperorbit.matrices import Diagonal, LowerTriangular
from hyperorbit.precision import exact_decimal_str, from_exact_decimal_str, working_dps
from hyperorbit.scalars import Field, FieldElement
from hyperorbit.systems import (
    AffineSystem,
    SemigroupSystem,
    affine_to_jsonable,
    build_complex_example,
    build_quadrant_example,
    build_real_example,
    dumps_canonical,
    lift_affine,
    loads_system,
    load_system,
    phi,
    psi,
    save_system,
    system_from_jsonable,
    system_to_jsonable,
    validate_theorem2,
)

R = Field.REAL


def real_variant(rows, b_entries, seed=None):
    return SemigroupSystem(
        R,
        LowerTriangular.build(R, rows),
        Diagonal.build(R, b_entries),
        seed=seed,
    )


def affine_1d():
    return AffineSystem(
        R,
        LowerTriangular.build(R, [[3]]),
        [1],
        Diagonal.build(R, [Fraction(-1, 2)]),
    )


# ---------------------------------------------------------------------------
# Example families


@pytest.mark.parametrize("n", range(1, 9))
def test_stock_families_accept(n):
    for builder in (build_real_example, build_complex_example):
        system = builder(n)
        report = system.validation()
        assert report.accepted, (builder.__name__, report.failure_ids())
        assert len(report.checks) == 1 + n + max(0, n - 1) + 1


def test_stock_family_rejects_bad_dimension():
    for n in (0, 9, -3):
        with pytest.raises(ValueError):
            build_real_example(n)


def test_real_family_shape():
    system = build_real_example(4)
    assert [e.exact_mag for e in system.a.diag] == [
        Fraction(3),
        Fraction(9),
        Fraction(27),
        Fraction(81),
    ]
    # constant first-column coupling, zero elsewhere below the diagonal
    assert system.a.element(3, 0).exact_mag == Fraction(3)
    assert system.a.element(3, 1).is_zero and system.a.element(2, 1).is_zero
    b = system.b.elements
    assert (b[0].exact_mag, b[0].sign) == (Fraction(1, 2), -1)
    assert [e.exact_mag for e in b[1:]] == [
        Fraction(1, 16),
        Fraction(1, 512),
        Fraction(1, 65536),
    ]
    assert all(e.to_rect() == 1 for e in system.seed)


def test_complex_family_carries_exact_phases():
    system = build_complex_example(3)
    for k, e in enumerate(system.b.elements, start=1):
        assert e.exact_mag == Fraction(1, 2 ** (k * k))
        assert e.exact_rad == Fraction(k * k)


def test_ratio_pairs_are_exact():
    system = build_real_example(3)
    p2 = system.pair(2)
    assert (p2.a.exact_mag, p2.a.sign) == (Fraction(1, 8), -1)
    assert p2.b.exact_mag == Fraction(3)
    assert system.pair(2) is p2  # cached


# ---------------------------------------------------------------------------
# Tampered variants: each rejected for the right reason


def test_tampered_contracting_modulus():
    system = real_variant(
        [[3], [3, 9], [3, 0, 27]], [2, Fraction(1, 16), Fraction(1, 512)]
    )
    report = system.validation()
    assert not report.accepted
    assert "modulus_chain" in report.failure_ids()
    chain = next(c for c in report.checks if c.check_id == "modulus_chain")
    assert "B_1" in chain.detail


def test_tampered_swapped_contracting_entries():
    system = real_variant(
        [[3], [3, 9], [3, 0, 27]],
        [Fraction(-1, 2), Fraction(1, 512), Fraction(1, 16)],
    )
    report = system.validation()
    assert not report.accepted
    chain = next(c for c in report.checks if c.check_id == "modulus_chain")
    assert not chain.passed and "B_3" in chain.detail


def test_tampered_swapped_expanding_diagonal():
    system = real_variant(
        [[9], [3, 3], [3, 0, 27]],
        [Fraction(-1, 2), Fraction(1, 16), Fraction(1, 512)],
    )
    report = system.validation()
    assert not report.accepted
    chain = next(c for c in report.checks if c.check_id == "modulus_chain")
    assert not chain.passed and "A_2" in chain.detail


def test_tampered_sign_coverage():
    system = real_variant(
        [[3], [3, 9], [3, 0, 27]],
        [Fraction(1, 2), Fraction(1, 16), Fraction(1, 512)],
    )
    report = system.validation()
    assert not report.accepted
    first = next(c for c in report.checks if c.check_id == "pair_certificate:1")
    assert not first.passed and "RefutedSignCoverage" in first.detail


def test_tampered_precedence_break():
    system = real_variant(
        [[3], [3, 9], [3, 0, 27]],
        [Fraction(-1, 2), Fraction(3, 8), Fraction(1, 512)],
    )
    report = system.validation()
    assert not report.accepted
    assert report.failure_ids() == ("prec_chain:2",)


def test_tampered_zero_coupling():
    system = real_variant(
        [[3], [0, 9], [3, 0, 27]],
        [Fraction(-1, 2), Fraction(1, 16), Fraction(1, 512)],
    )
    report = system.validation()
    assert not report.accepted
    assert report.failure_ids() == ("coupling_column",)
    bad = next(c for c in report.checks if c.check_id == "coupling_column")
    assert "entry 2" in bad.detail


def test_constructor_shape_errors():
    with pytest.raises(DimensionMismatch):
        SemigroupSystem(
            R,
            LowerTriangular.build(R, [[3], [3, 9]]),
            Diagonal.build(R, [Fraction(-1, 2)]),
        )
    with pytest.raises(DimensionMismatch):
        build_real_example(2, seed=(1, 2, 3))
    with pytest.raises(FieldMismatch):
        SemigroupSystem(
            Field.COMPLEX,
            LowerTriangular.build(R, [[3]]),
            Diagonal.build(R, [Fraction(-1, 2)]),
        )


# ---------------------------------------------------------------------------
# Affine validation and the lift


def test_affine_1d_accepts():
    report = affine_1d().validation()
    assert report.accepted
    col = next(c for c in report.checks if c.check_id == "translation_column")
    assert "0.5" in col.detail


def test_affine_2d_accepts_and_zero_column_rejects():
    a = LowerTriangular.build(R, [[3], [3, 9]])
    b = Diagonal.build(R, [Fraction(-1, 2), Fraction(-1, 16)])
    good = AffineSystem(R, a, [1, 1], b)
    assert good.validation().accepted
    # (A - I)^{-1} (1, 3/2) has a vanishing second entry: 3*(1/2) + 8x = 3/2
    bad = AffineSystem(R, a, [1, Fraction(3, 2)], b)
    report = bad.validation()
    assert not report.accepted
    assert report.failure_ids() == ("translation_column",)


def test_affine_diagonal_pairs_checked_directly():
    # positive second contracting entry: (B_2, A_2) = (1/16, 9) covers no signs
    a = LowerTriangular.build(R, [[3], [3, 9]])
    b = Diagonal.build(R, [Fraction(-1, 2), Fraction(1, 16)])
    report = AffineSystem(R, a, [1, 1], b).validation()
    assert not report.accepted
    assert "pair_certificate:2" in report.failure_ids()


def test_affine_singular_shift_raises():
    sys_bad = AffineSystem(
        R,
        LowerTriangular.build(R, [[1]]),
        [1],
        Diagonal.build(R, [Fraction(-1, 2)]),
    )
    with pytest.raises(SingularAminusI):
        validate_theorem2(sys_bad)


def test_lift_frozen_example():
    lifted = lift_affine(affine_1d(), a=9, b=Fraction(-1, 2))
    assert [[e.exact_mag for e in row] for row in lifted.a.elements] == [
        [Fraction(9)],
        [Fraction(9), Fraction(27)],
    ]
    b = lifted.b.elements
    assert (b[0].exact_mag, b[0].sign) == (Fraction(1, 2), -1)
    assert (b[1].exact_mag, b[1].sign) == (Fraction(1, 4), 1)
    col, ok = lifted.coupling()
    assert ok and col[0] == 1 and col[1] == mpf(-1) / 2
    assert lifted.validation().accepted
    assert [e.to_rect() for e in lifted.seed] == [mpf(1), mpf(0)]


def test_lift_default_scales():
    lifted = lift_affine(affine_1d())
    assert lifted.a.diag[0].exact_mag == Fraction(9)
    assert (lifted.b.elements[0].exact_mag, lifted.b.elements[0].sign) == (
        Fraction(1, 2),
        -1,
    )


def test_lift_rejects_insufficient_scale():
    with pytest.raises(PrecViolation):
        lift_affine(affine_1d(), a=2, b=Fraction(-1, 2))


def test_lift_rejects_invalid_affine_system():
    bad = AffineSystem(
        R,
        LowerTriangular.build(R, [[3]]),
        [1],
        Diagonal.build(R, [Fraction(1, 2)]),  # sign coverage broken
    )
    with pytest.raises(PrecViolation):
        lift_affine(bad)


def test_charts_round_trip():
    x = (mpf(3) / 7, mpf(-2))
    assert phi(psi(x)) == x
    y = (mpf(2), mpf(1), mpf(-4))
    assert phi(y) == (mpf(1) / 2, mpf(-2))
    with pytest.raises(ZeroFirstCoordinate):
        phi((mpf(0), mpf(1)))
    with pytest.raises(DimensionMismatch):
        phi((mpf(1),))


@settings(max_examples=40, deadline=None)
@given(
    st.lists(
        st.fractions(min_value=Fraction(-50), max_value=Fraction(50), max_denominator=64),
        min_size=1,
        max_size=4,
    )
)
def test_chart_section_identity(values):
    mp.dps = 128
    x = tuple(mpf(v.numerator) / v.denominator for v in values)
    assert phi(psi(x)) == x


# ---------------------------------------------------------------------------
# Quadrant demo


def test_quadrant_default_accepts():
    system, report = build_quadrant_example()
    assert report.accepted
    assert report.subject == "positive-quadrant-density"
    assert system.n == 2
    assert [e.to_rect() for e in system.seed] == [mpf(1), mpf(1)]
    # density ladder for the full plane must NOT accept this system:
    # B is entirely positive, so no product can reach negative coordinates
    assert not system.validation().accepted


def test_quadrant_rejects_swapped_contractions():
    _, report = build_quadrant_example(u=Fraction(1, 16), v=Fraction(1, 2))
    assert not report.accepted
    assert "parameter_chain" in report.failure_ids()


def test_quadrant_rejects_zero_coupling():
    _, report = build_quadrant_example(b=0)
    assert not report.accepted
    assert report.failure_ids() == ("coupling_positive",)


def test_quadrant_rejects_equal_log_ratio():
    _, report = build_quadrant_example(a=3, d=27, u=Fraction(1, 2), v=Fraction(1, 8))
    assert not report.accepted
    assert "prec_link" in report.failure_ids()


# ---------------------------------------------------------------------------
# Exact decimal plumbing


def test_exact_decimal_round_trip_excess_precision():
    base = FieldElement.from_rational(Fraction(1, 2), Field.COMPLEX)
    x = base.pow(9).log_mag  # exact product: mantissa wider than mp.prec
    s = exact_decimal_str(x)
    assert from_exact_decimal_str(s) == x
    assert exact_decimal_str(from_exact_decimal_str(s)) == s


@settings(max_examples=60, deadline=None)
@given(st.integers(min_value=1, max_value=2**460), st.integers(-520, 520), st.booleans())
def test_exact_decimal_round_trip_random(man, exp, negative):
    mp.dps = 128
    x = mpf(man) * mpf(2) ** exp
    if negative:
        x = -x
    assert from_exact_decimal_str(exact_decimal_str(x)) == x


def test_exact_decimal_zero_and_nondyadic():
    assert exact_decimal_str(mpf(0)) == "0"
    assert from_exact_decimal_str("0") == 0
    # a non-dyadic decimal parses to the correctly rounded working value
    assert from_exact_decimal_str("0.1") == mpf("0.1")


# ---------------------------------------------------------------------------
# Serialization


def elements_identical(x, y):
    return (
        x.field is y.field
        and x.log_mag == y.log_mag
        and x.sign == y.sign
        and x.exact_mag == y.exact_mag
        and x.exact_rad == y.exact_rad
        and x.exact_turns == y.exact_turns
        and ((x.phase is None) == (y.phase is None))
        and (x.phase is None or x.phase == y.phase)
    )


@pytest.mark.parametrize("builder", [build_real_example, build_complex_example])
def test_system_round_trip_bit_exact(builder):
    system = builder(4)
    text = dumps_canonical(system_to_jsonable(system))
    back = loads_system(text)
    assert isinstance(back, SemigroupSystem)
    assert back.field is system.field and back.n == system.n
    for row_a, row_b in zip(system.a.elements, back.a.elements):
        for x, y in zip(row_a, row_b):
            assert elements_identical(x, y)
    for x, y in zip(system.b.elements, back.b.elements):
        assert elements_identical(x, y)
    for x, y in zip(system.seed, back.seed):
        assert elements_identical(x, y)
    assert back.metadata == system.metadata
    assert dumps_canonical(system_to_jsonable(back)) == text


def test_affine_round_trip(tmp_path):
    sys_a = affine_1d()
    path = tmp_path / "affine.json"
    save_system(path, sys_a)
    back = load_system(path)
    assert isinstance(back, AffineSystem)
    assert elements_identical(back.v[0], sys_a.v[0])
    assert back.validation().accepted


def test_save_load_file_round_trip(tmp_path):
    system = build_real_example(3)
    path = tmp_path / "system.json"
    save_system(path, system)
    back = load_system(path)
    assert back.validation().accepted
    assert dumps_canonical(system_to_jsonable(back)) == path.read_text()


def test_load_is_precision_independent(tmp_path):
    system = build_real_example(2)
    path = tmp_path / "system.json"
    save_system(path, system)
    with working_dps(40):
        back = load_system(path)
    assert elements_identical(back.b.elements[0], system.b.elements[0])
    assert elements_identical(back.a.elements[1][0], system.a.elements[1][0])


def test_loader_rejects_unknown_and_missing_keys():
    d = system_to_jsonable(build_real_example(2))
    extra = dict(d)
    extra["surprise"] = 1
    with pytest.raises(MalformedInput):
        system_from_jsonable(extra)
    short = dict(d)
    del short["seed"]
    with pytest.raises(MalformedInput):
        system_from_jsonable(short)


def test_loader_rejects_bad_entries():
    d = system_to_jsonable(build_real_example(1))
    bad_sign = json.loads(json.dumps(d))
    bad_sign["B"][0]["sign"] = 2
    with pytest.raises(MalformedInput):
        system_from_jsonable(bad_sign)
    bad_key = json.loads(json.dumps(d))
    bad_key["A"][0][0]["argument"] = "1.0"  # complex-only key on a real entry
    with pytest.raises(MalformedInput):
        system_from_jsonable(bad_key)
    bad_n = json.loads(json.dumps(d))
    bad_n["n"] = 3
    with pytest.raises(MalformedInput):
        system_from_jsonable(bad_n)


def test_loads_rejects_malformed_text():
    with pytest.raises(MalformedInput):
        loads_system('{"kind": "linear"')
    with pytest.raises(MalformedInput):
        loads_system('[1, 2, 3]')
    with pytest.raises(MalformedInput):
        loads_system('{"kind": "mystery"}')


def test_kind_dispatch_is_strict():
    d = affine_to_jsonable(affine_1d())
    with pytest.raises(MalformedInput):
        system_from_jsonable(d)
