"""Two-generator systems: construction, validation, the affine lift, and IO.

A ``SemigroupSystem`` bundles a lower-triangular generator A, a diagonal
generator B, and a seed vector; ``validate_theorem1`` runs the full
hypothesis ladder (modulus chain, pair certificates, precedence chain,
coupling column) and reports each link separately so a rejection names the
exact condition that broke.  ``AffineSystem`` is the x -> Ax + v, x -> Bx
variant; ``lift_affine`` embeds it one dimension up as a linear system and
``phi``/``psi`` are the charts that carry orbits back and forth.

Serialization is strict: unknown keys are rejected, every scalar travels as
a decimal string at full working precision plus optional exact rational
provenance, and a round-trip reproduces each ``FieldElement`` bit for bit.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction

from mpmath import mp, mpf

from .errors import (
    DimensionMismatch,
    FieldMismatch,
    HyperorbitError,
    MalformedInput,
    PrecViolation,
    SingularAminusI,
    ZeroFirstCoordinate,
)
from .matrices import (
    TAU_ZERO,
    BoundCertificate,
    Diagonal,
    LimitMatrix,
    LowerTriangular,
    _coerce_element,
    coupling_column,
    growth_lambda,
    normalized_inverse_limit,
    tri_solve,
)
from .pairs import (
    CertifyOptions,
    GeneratingPair,
    Ordering,
    certify_generating,
    prec_compare,
)
from .precision import (
    exact_decimal_str,
    fraction_str,
    from_exact_decimal_str,
    nstr,
    parse_fraction,
    working_dps,
)
from .scalars import Field, FieldElement

FORMAT_TAG = "hyperorbit/system-v1"


# ---------------------------------------------------------------------------
# Validation reports


@dataclass(frozen=True)
class CheckResult:
    check_id: str
    passed: bool
    detail: str


@dataclass(frozen=True)
class ValidationReport:
    subject: str
    accepted: bool
    checks: tuple[CheckResult, ...]

    def failure_ids(self) -> tuple[str, ...]:
        return tuple(c.check_id for c in self.checks if not c.passed)

    def to_jsonable(self) -> dict:
        return {
            "subject": self.subject,
            "accepted": self.accepted,
            "checks": [
                {"id": c.check_id, "passed": c.passed, "detail": c.detail}
                for c in self.checks
            ],
        }


def _report(subject: str, checks: list[CheckResult]) -> ValidationReport:
    return ValidationReport(subject, all(c.passed for c in checks), tuple(checks))


# ---------------------------------------------------------------------------
# The systems


class SemigroupSystem:
    """A pair of generators (A lower-triangular, B diagonal) plus a seed.

    Derived artifacts — generating-pair certificates, the growth constant,
    the normalized-inverse limit, the coupling column, and the validation
    report — are computed lazily and cached; the system itself is immutable.
    """

    def __init__(
        self,
        field: Field,
        a: LowerTriangular,
        b: Diagonal,
        seed=None,
        metadata: dict | None = None,
        certify_options: CertifyOptions | None = None,
    ):
        if a.field is not field or b.field is not field:
            raise FieldMismatch("generators must live in the system's field")
        if a.n != b.n:
            raise DimensionMismatch(f"A is {a.n}x{a.n} but B is {b.n}x{b.n}")
        if seed is None:
            seed = [1] * a.n
        seed = tuple(_coerce_element(v, field) for v in seed)
        if len(seed) != a.n:
            raise DimensionMismatch(
                f"seed length {len(seed)} does not match dimension {a.n}"
            )
        self.field = field
        self.a = a
        self.b = b
        self.seed = seed
        self.metadata = dict(metadata or {})
        self.certify_options = certify_options or CertifyOptions()
        self._pairs: dict[int, GeneratingPair] = {}
        self._growth: BoundCertificate | None = None
        self._limit: LimitMatrix | None = None
        self._coupling: tuple[tuple, bool] | None = None
        self._report: ValidationReport | None = None

    @property
    def n(self) -> int:
        return self.a.n

    def seed_rect(self) -> tuple:
        return tuple(e.to_rect() for e in self.seed)

    def pair(self, j: int) -> GeneratingPair:
        """Certified pair for stage targeting, 1-based.

        j = 1 is (B_1, A_1); j >= 2 is the ratio pair (B_j/B_1, A_j/A_1).
        """
        if not 1 <= j <= self.n:
            raise DimensionMismatch(f"pair index {j} outside 1..{self.n}")
        if j not in self._pairs:
            b_diag = self.b.elements
            a_diag = self.a.diag
            if j == 1:
                small, big = b_diag[0], a_diag[0]
            else:
                small = b_diag[j - 1].div(b_diag[0])
                big = a_diag[j - 1].div(a_diag[0])
            self._pairs[j] = certify_generating(small, big, self.certify_options)
        return self._pairs[j]

    def growth(self) -> BoundCertificate:
        if self._growth is None:
            self._growth = growth_lambda(self.a)
        return self._growth

    def inverse_limit(self) -> LimitMatrix:
        if self._limit is None:
            self._limit = normalized_inverse_limit(self.a)
        return self._limit

    def coupling(self) -> tuple[tuple, bool]:
        if self._coupling is None:
            self._coupling = coupling_column(self.a)
        return self._coupling

    def validation(self) -> ValidationReport:
        if self._report is None:
            self._report = validate_theorem1(self)
        return self._report

    def with_seed(self, seed) -> "SemigroupSystem":
        """Clone with a new seed, sharing certificates and analysis caches."""
        clone = SemigroupSystem(
            self.field, self.a, self.b, seed, self.metadata, self.certify_options
        )
        clone._pairs = self._pairs
        clone._growth = self._growth
        clone._limit = self._limit
        clone._coupling = self._coupling
        clone._report = self._report
        return clone


class AffineSystem:
    """Generators x -> Ax + v and x -> Bx on K^n."""

    def __init__(
        self,
        field: Field,
        a: LowerTriangular,
        v,
        b: Diagonal,
        metadata: dict | None = None,
        certify_options: CertifyOptions | None = None,
    ):
        if a.field is not field or b.field is not field:
            raise FieldMismatch("generators must live in the system's field")
        if a.n != b.n:
            raise DimensionMismatch(f"A is {a.n}x{a.n} but B is {b.n}x{b.n}")
        v = tuple(_coerce_element(x, field) for x in v)
        if len(v) != a.n:
            raise DimensionMismatch(
                f"translation length {len(v)} does not match dimension {a.n}"
            )
        self.field = field
        self.a = a
        self.v = v
        self.b = b
        self.metadata = dict(metadata or {})
        self.certify_options = certify_options or CertifyOptions()
        self._pairs: dict[int, GeneratingPair] = {}
        self._report: ValidationReport | None = None

    @property
    def n(self) -> int:
        return self.a.n

    def v_rect(self) -> tuple:
        return tuple(e.to_rect() for e in self.v)

    def diag_pair(self, j: int) -> GeneratingPair:
        """Certified pair (B_j, A_j) of diagonal entries, 1-based."""
        if not 1 <= j <= self.n:
            raise DimensionMismatch(f"pair index {j} outside 1..{self.n}")
        if j not in self._pairs:
            self._pairs[j] = certify_generating(
                self.b.elements[j - 1], self.a.diag[j - 1], self.certify_options
            )
        return self._pairs[j]

    def validation(self) -> ValidationReport:
        if self._report is None:
            self._report = validate_theorem2(self)
        return self._report


# ---------------------------------------------------------------------------
# Validation ladders


def _modulus_chain_check(a_diag, b_diag) -> CheckResult:
    """0 < |B_n| < ... < |B_1| < 1 < |A_1| < ... < |A_n|, on exact log-moduli."""
    b_logs = [e.log_mag for e in b_diag]
    a_logs = [e.log_mag for e in a_diag]
    n = len(a_logs)
    if not b_logs[0] < 0:
        detail = f"|B_1| must lie in (0, 1); log|B_1| = {nstr(b_logs[0], 12)}"
        return CheckResult("modulus_chain", False, detail)
    if not a_logs[0] > 0:
        detail = f"|A_1| must exceed 1; log|A_1| = {nstr(a_logs[0], 12)}"
        return CheckResult("modulus_chain", False, detail)
    for j in range(1, n):
        if not b_logs[j] < b_logs[j - 1]:
            detail = f"|B_{j + 1}| must be strictly below |B_{j}|"
            return CheckResult("modulus_chain", False, detail)
        if not a_logs[j] > a_logs[j - 1]:
            detail = f"|A_{j + 1}| must strictly exceed |A_{j}|"
            return CheckResult("modulus_chain", False, detail)
    return CheckResult(
        "modulus_chain", True, f"moduli strictly ordered across {n} stages"
    )


def _pair_check(j: int, pair: GeneratingPair) -> CheckResult:
    detail = pair.certificate.value
    if pair.witness:
        detail += f": {pair.witness}"
    return CheckResult(f"pair_certificate:{j}", pair.is_certified, detail)


def _chain_check(j: int, lower: GeneratingPair, upper: GeneratingPair) -> CheckResult:
    order = prec_compare(lower, upper)
    return CheckResult(
        f"prec_chain:{j}", order.outcome is Ordering.LESS, order.reason
    )


def validate_theorem1(
    system: SemigroupSystem, opts: CertifyOptions | None = None
) -> ValidationReport:
    """Full hypothesis ladder for orbit density of the linear system.

    Checks, in order: the modulus chain on both diagonals; a generating
    certificate for (B_1, A_1) and each ratio pair (B_j/B_1, A_j/A_1); the
    strict precedence chain on those pairs; and nonzeroness of the coupling
    column.  The report carries one entry per link; accepted iff all pass.
    """
    if opts is not None and opts != system.certify_options:
        system = SemigroupSystem(
            system.field,
            system.a,
            system.b,
            system.seed,
            system.metadata,
            certify_options=opts,
        )
    n = system.n
    checks = [_modulus_chain_check(system.a.diag, system.b.elements)]
    pairs = []
    for j in range(1, n + 1):
        try:
            pair = system.pair(j)
        except HyperorbitError as exc:
            pairs.append(None)
            checks.append(CheckResult(f"pair_certificate:{j}", False, str(exc)))
            continue
        pairs.append(pair)
        checks.append(_pair_check(j, pair))
    for j in range(2, n + 1):
        lower, upper = pairs[j - 1], pairs[j - 2]
        if lower is None or upper is None:
            checks.append(
                CheckResult(f"prec_chain:{j}", False, "pair certificate unavailable")
            )
            continue
        checks.append(_chain_check(j, lower, upper))
    try:
        col, ok = system.coupling()
    except HyperorbitError as exc:
        checks.append(CheckResult("coupling_column", False, str(exc)))
    else:
        if ok:
            detail = "column " + ", ".join(nstr(c, 12) for c in col)
        else:
            bad = min(range(len(col)), key=lambda i: abs(col[i]))
            detail = f"entry {bad + 1} of the coupling column vanishes"
        checks.append(CheckResult("coupling_column", ok, detail))
    return _report("linear-orbit-density", checks)


def translation_column(sys: AffineSystem) -> tuple:
    """(A - I)^{-1} v, the fixed-point displacement column."""
    grid = sys.a.grid()
    n = sys.n
    rows = []
    for i in range(n):
        row = list(grid[i])
        row[i] = row[i] - 1
        if abs(row[i]) <= TAU_ZERO:
            raise SingularAminusI(
                f"diagonal entry {i + 1} of A - I is numerically zero"
            )
        rows.append(tuple(row))
    return tri_solve(tuple(rows), sys.v_rect())


def validate_theorem2(
    sys: AffineSystem, opts: CertifyOptions | None = None
) -> ValidationReport:
    """Hypothesis ladder for orbit density of the affine system.

    Same modulus chain as the linear case, generating certificates and the
    precedence chain taken on the diagonal pairs (B_j, A_j) directly, and
    nonzeroness of every entry of (A - I)^{-1} v.
    """
    if opts is not None and opts != sys.certify_options:
        sys = AffineSystem(
            sys.field, sys.a, sys.v, sys.b, sys.metadata, certify_options=opts
        )
    n = sys.n
    checks = [_modulus_chain_check(sys.a.diag, sys.b.elements)]
    pairs = []
    for j in range(1, n + 1):
        try:
            pair = sys.diag_pair(j)
        except HyperorbitError as exc:
            pairs.append(None)
            checks.append(CheckResult(f"pair_certificate:{j}", False, str(exc)))
            continue
        pairs.append(pair)
        checks.append(_pair_check(j, pair))
    for j in range(2, n + 1):
        lower, upper = pairs[j - 1], pairs[j - 2]
        if lower is None or upper is None:
            checks.append(
                CheckResult(f"prec_chain:{j}", False, "pair certificate unavailable")
            )
            continue
        checks.append(_chain_check(j, lower, upper))
    col = translation_column(sys)
    ok = all(abs(c) > TAU_ZERO for c in col)
    if ok:
        detail = "column " + ", ".join(nstr(c, 12) for c in col)
    else:
        bad = min(range(len(col)), key=lambda i: abs(col[i]))
        detail = f"entry {bad + 1} of (A - I)^{{-1}} v vanishes"
    checks.append(CheckResult("translation_column", ok, detail))
    return _report("affine-orbit-density", checks)


# ---------------------------------------------------------------------------
# The affine lift and its charts


def lift_affine(sys: AffineSystem, a=None, b=None) -> SemigroupSystem:
    """Embed the affine system one dimension up as a linear system.

    The lifted generators are A' = [[a, 0], [a v, a A]] and
    B' = diag(b, b B) for scale factors (a, b) chosen so that (b, a) is a
    certified generating pair strictly dominating (B_1, A_1).  Defaults:
    a = A_1^2, b = B_1.  The result is validated eagerly and must accept.
    """
    report = sys.validation()
    if not report.accepted:
        raise PrecViolation(
            "affine system rejected: " + ", ".join(report.failure_ids())
        )
    a_el = sys.a.diag[0].pow(2) if a is None else _coerce_element(a, sys.field)
    b_el = sys.b.elements[0] if b is None else _coerce_element(b, sys.field)
    scale_pair = certify_generating(b_el, a_el, sys.certify_options)
    order = prec_compare(sys.diag_pair(1), scale_pair)
    if order.outcome is not Ordering.LESS:
        raise PrecViolation(
            f"(B_1, A_1) must strictly precede the scale pair (b, a): {order.reason}"
        )
    rows: list[list[FieldElement]] = [[a_el]]
    for i in range(sys.n):
        row = [a_el.mul(sys.v[i])]
        row.extend(a_el.mul(sys.a.element(i, j)) for j in range(i + 1))
        rows.append(row)
    lifted_a = LowerTriangular.build(sys.field, rows)
    lifted_b = Diagonal.build(
        sys.field, [b_el] + [b_el.mul(e) for e in sys.b.elements]
    )
    seed = [FieldElement.one(sys.field)]
    seed.extend(FieldElement.zero(sys.field) for _ in range(sys.n))
    lifted = SemigroupSystem(
        sys.field,
        lifted_a,
        lifted_b,
        seed,
        metadata={"origin": "affine-lift"},
        certify_options=sys.certify_options,
    )
    lifted_report = lifted.validation()
    if not lifted_report.accepted:
        raise PrecViolation(
            "lifted system failed validation: "
            + ", ".join(lifted_report.failure_ids())
        )
    return lifted


def phi(y) -> tuple:
    """Chart (y_1, ..., y_{n+1}) -> (y_2/y_1, ..., y_{n+1}/y_1)."""
    y = tuple(y)
    if len(y) < 2:
        raise DimensionMismatch("chart needs at least two coordinates")
    if y[0] == 0:
        raise ZeroFirstCoordinate("chart undefined on first coordinate zero")
    return tuple(c / y[0] for c in y[1:])


def psi(x) -> tuple:
    """Section x -> (1, x_1, ..., x_n); phi(psi(x)) = x identically."""
    return (mpf(1),) + tuple(x)


# ---------------------------------------------------------------------------
# Stock example families


def _check_example_dim(n: int) -> None:
    if not isinstance(n, int) or not 1 <= n <= 8:
        raise ValueError("example families are built for dimensions 1..8")


def build_real_example(n: int, seed=None) -> SemigroupSystem:
    """Real n-dimensional system: A has diagonal 3^k with first column 3,
    B = diag(-1/2, 2^{-4}, 2^{-9}, ...).  Pre-validated; always accepts.
    """
    _check_example_dim(n)
    rows = []
    for i in range(n):
        if i == 0:
            rows.append([Fraction(3)])
        else:
            rows.append([Fraction(3)] + [0] * (i - 1) + [Fraction(3) ** (i + 1)])
    b_entries = [Fraction(-1, 2)]
    b_entries.extend(Fraction(1, 2 ** (j * j)) for j in range(2, n + 1))
    system = SemigroupSystem(
        Field.REAL,
        LowerTriangular.build(Field.REAL, rows),
        Diagonal.build(Field.REAL, b_entries),
        seed=seed,
        metadata={"family": "real-example"},
    )
    report = system.validation()
    if not report.accepted:  # pragma: no cover - construction invariant
        raise RuntimeError(
            "stock real family failed validation: " + ", ".join(report.failure_ids())
        )
    return system


def build_complex_example(n: int, seed=None) -> SemigroupSystem:
    """Complex variant: same A; B_k = (e^i / 2)^{k^2}, carrying exact
    modulus 2^{-k^2} and exact argument k^2 radians.  Pre-validated.
    """
    _check_example_dim(n)
    rows = []
    for i in range(n):
        if i == 0:
            rows.append([Fraction(3)])
        else:
            rows.append([Fraction(3)] + [0] * (i - 1) + [Fraction(3) ** (i + 1)])
    base = FieldElement.complex_polar(Fraction(1, 2), rad=Fraction(1))
    b_entries = [base.pow(j * j) for j in range(1, n + 1)]
    system = SemigroupSystem(
        Field.COMPLEX,
        LowerTriangular.build(Field.COMPLEX, rows),
        Diagonal.build(Field.COMPLEX, b_entries),
        seed=seed,
        metadata={"family": "complex-example"},
    )
    report = system.validation()
    if not report.accepted:  # pragma: no cover - construction invariant
        raise RuntimeError(
            "stock complex family failed validation: "
            + ", ".join(report.failure_ids())
        )
    return system


def build_quadrant_example(
    a=3, b=1, d=9, u=Fraction(1, 2), v=Fraction(1, 16), seed=(1, 1)
) -> tuple[SemigroupSystem, ValidationReport]:
    """Planar system A = [[a, 0], [b, d]], B = diag(u, v) whose positive-seed
    orbits fill the open positive quadrant and nothing more.

    Hypotheses checked: d > a > 1 > u > v > 0, b > 0, and the precedence
    (-v, d) strictly below (-u, a) with both pairs certified.  The system is
    returned alongside the report; density holds in the quadrant only, so
    the linear-density ladder deliberately does not apply (B is positive).
    """
    fa, fb, fd = Fraction(a), Fraction(b), Fraction(d)
    fu, fv = Fraction(u), Fraction(v)
    checks = []
    chain_ok = fd > fa > 1 > fu > fv > 0
    checks.append(
        CheckResult(
            "parameter_chain",
            chain_ok,
            f"need d > a > 1 > u > v > 0; got d={fd}, a={fa}, u={fu}, v={fv}",
        )
    )
    checks.append(
        CheckResult(
            "coupling_positive",
            fb > 0,
            f"need strictly positive corner coupling; got b={fb}",
        )
    )
    opts = CertifyOptions()
    lower = certify_generating(
        FieldElement.from_rational(-fv), FieldElement.from_rational(fd), opts
    )
    upper = certify_generating(
        FieldElement.from_rational(-fu), FieldElement.from_rational(fa), opts
    )
    checks.append(
        CheckResult(
            "pair_certificate:lower",
            lower.is_certified,
            lower.certificate.value + (f": {lower.witness}" if lower.witness else ""),
        )
    )
    checks.append(
        CheckResult(
            "pair_certificate:upper",
            upper.is_certified,
            upper.certificate.value + (f": {upper.witness}" if upper.witness else ""),
        )
    )
    order = prec_compare(lower, upper)
    checks.append(
        CheckResult("prec_link", order.outcome is Ordering.LESS, order.reason)
    )
    system = SemigroupSystem(
        Field.REAL,
        LowerTriangular.build(Field.REAL, [[fa], [fb, fd]]),
        Diagonal.build(Field.REAL, [fu, fv]),
        seed=seed,
        metadata={"family": "quadrant"},
    )
    return system, _report("positive-quadrant-density", checks)


# ---------------------------------------------------------------------------
# Serialization


def element_to_jsonable(x: FieldElement) -> dict:
    if x.is_zero:
        return {"zero": True}
    out = {"log_modulus": exact_decimal_str(x.log_mag)}
    if x.field is Field.REAL:
        out["sign"] = x.sign
    else:
        out["argument"] = exact_decimal_str(x.phase)
    if x.exact_mag is not None:
        out["modulus"] = fraction_str(x.exact_mag)
    if x.exact_rad is not None:
        out["argument_rad"] = fraction_str(x.exact_rad)
    if x.exact_turns is not None:
        out["argument_turns"] = fraction_str(x.exact_turns)
    return out


_REAL_ENTRY_KEYS = {"zero", "log_modulus", "sign", "modulus"}
_COMPLEX_ENTRY_KEYS = {
    "zero",
    "log_modulus",
    "argument",
    "modulus",
    "argument_rad",
    "argument_turns",
}


def element_from_jsonable(d, field: Field) -> FieldElement:
    if not isinstance(d, dict):
        raise MalformedInput(f"scalar entry must be an object, got {type(d).__name__}")
    allowed = _REAL_ENTRY_KEYS if field is Field.REAL else _COMPLEX_ENTRY_KEYS
    unknown = set(d) - allowed
    if unknown:
        raise MalformedInput(f"unknown scalar keys: {sorted(unknown)}")
    if d.get("zero"):
        return FieldElement.zero(field)
    try:
        log_mag = from_exact_decimal_str(d["log_modulus"])
        exact_mag = parse_fraction(d["modulus"]) if "modulus" in d else None
        if field is Field.REAL:
            sign = d["sign"]
            if sign not in (1, -1):
                raise MalformedInput(f"sign must be 1 or -1, got {sign!r}")
            return FieldElement(field, log_mag, sign, None, exact_mag)
        phase = from_exact_decimal_str(d["argument"])
        rad = parse_fraction(d["argument_rad"]) if "argument_rad" in d else None
        turns = parse_fraction(d["argument_turns"]) if "argument_turns" in d else None
        return FieldElement(field, log_mag, 1, phase, exact_mag, rad, turns)
    except KeyError as exc:
        raise MalformedInput(f"scalar entry missing key {exc}") from exc
    except (ValueError, TypeError) as exc:
        raise MalformedInput(f"bad scalar entry: {exc}") from exc


def _field_from_name(name) -> Field:
    if name == "real":
        return Field.REAL
    if name == "complex":
        return Field.COMPLEX
    raise MalformedInput(f"field must be 'real' or 'complex', got {name!r}")


def _expect_keys(d: dict, required: set, context: str) -> None:
    if not isinstance(d, dict):
        raise MalformedInput(f"{context} must be an object")
    missing = required - set(d)
    unknown = set(d) - required
    if missing:
        raise MalformedInput(f"{context} missing keys: {sorted(missing)}")
    if unknown:
        raise MalformedInput(f"{context} has unknown keys: {sorted(unknown)}")


def _triangular_to_jsonable(a: LowerTriangular) -> list:
    return [[element_to_jsonable(e) for e in row] for row in a.elements]


def _triangular_from_jsonable(rows, field: Field) -> LowerTriangular:
    if not isinstance(rows, list) or not all(isinstance(r, list) for r in rows):
        raise MalformedInput("matrix must be a list of rows")
    elements = [[element_from_jsonable(e, field) for e in row] for row in rows]
    return LowerTriangular.build(field, elements)


def _vector_to_jsonable(entries) -> list:
    return [element_to_jsonable(e) for e in entries]


def _vector_from_jsonable(entries, field: Field) -> list:
    if not isinstance(entries, list):
        raise MalformedInput("vector must be a list")
    return [element_from_jsonable(e, field) for e in entries]


_SYSTEM_KEYS = {
    "format",
    "kind",
    "field",
    "n",
    "precision_digits",
    "A",
    "B",
    "seed",
    "metadata",
}
_AFFINE_KEYS = {
    "format",
    "kind",
    "field",
    "n",
    "precision_digits",
    "A",
    "v",
    "B",
    "metadata",
}


def system_to_jsonable(system: SemigroupSystem) -> dict:
    return {
        "format": FORMAT_TAG,
        "kind": "linear",
        "field": system.field.value,
        "n": system.n,
        "precision_digits": mp.dps,
        "A": _triangular_to_jsonable(system.a),
        "B": _vector_to_jsonable(system.b.elements),
        "seed": _vector_to_jsonable(system.seed),
        "metadata": system.metadata,
    }


def affine_to_jsonable(sys: AffineSystem) -> dict:
    return {
        "format": FORMAT_TAG,
        "kind": "affine",
        "field": sys.field.value,
        "n": sys.n,
        "precision_digits": mp.dps,
        "A": _triangular_to_jsonable(sys.a),
        "v": _vector_to_jsonable(sys.v),
        "B": _vector_to_jsonable(sys.b.elements),
        "metadata": sys.metadata,
    }


def _common_header(d: dict) -> tuple[Field, int, int]:
    if d.get("format") != FORMAT_TAG:
        raise MalformedInput(f"unrecognized format tag {d.get('format')!r}")
    field = _field_from_name(d.get("field"))
    n = d.get("n")
    dps = d.get("precision_digits")
    if not isinstance(n, int) or n < 1:
        raise MalformedInput(f"n must be a positive integer, got {n!r}")
    if not isinstance(dps, int) or dps < 1:
        raise MalformedInput(f"precision_digits must be positive, got {dps!r}")
    if not isinstance(d.get("metadata"), dict):
        raise MalformedInput("metadata must be an object")
    return field, n, dps


def system_from_jsonable(d: dict) -> SemigroupSystem:
    _expect_keys(d, _SYSTEM_KEYS, "system file")
    if d["kind"] != "linear":
        raise MalformedInput(f"expected kind 'linear', got {d['kind']!r}")
    field, n, dps = _common_header(d)
    with working_dps(dps):
        a = _triangular_from_jsonable(d["A"], field)
        b = Diagonal.build(field, _vector_from_jsonable(d["B"], field))
        seed = _vector_from_jsonable(d["seed"], field)
    if a.n != n:
        raise MalformedInput(f"matrix is {a.n}x{a.n} but n = {n}")
    return SemigroupSystem(field, a, b, seed, metadata=d["metadata"])


def affine_from_jsonable(d: dict) -> AffineSystem:
    _expect_keys(d, _AFFINE_KEYS, "affine system file")
    if d["kind"] != "affine":
        raise MalformedInput(f"expected kind 'affine', got {d['kind']!r}")
    field, n, dps = _common_header(d)
    with working_dps(dps):
        a = _triangular_from_jsonable(d["A"], field)
        v = _vector_from_jsonable(d["v"], field)
        b = Diagonal.build(field, _vector_from_jsonable(d["B"], field))
    if a.n != n:
        raise MalformedInput(f"matrix is {a.n}x{a.n} but n = {n}")
    return AffineSystem(field, a, v, b, metadata=d["metadata"])


def loads_system(text: str) -> SemigroupSystem | AffineSystem:
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedInput(f"not valid JSON: {exc}") from exc
    if not isinstance(d, dict):
        raise MalformedInput("system file must hold a JSON object")
    kind = d.get("kind")
    if kind == "linear":
        return system_from_jsonable(d)
    if kind == "affine":
        return affine_from_jsonable(d)
    raise MalformedInput(f"unknown system kind {kind!r}")


def dumps_canonical(obj) -> str:
    """Deterministic JSON text: sorted keys, no whitespace drift."""
    return json.dumps(obj, sort_keys=True, separators=(",", ": "), indent=1) + "\n"


def save_system(path, system) -> None:
    if isinstance(system, SemigroupSystem):
        payload = system_to_jsonable(system)
    elif isinstance(system, AffineSystem):
        payload = affine_to_jsonable(system)
    else:
        raise TypeError(f"cannot serialize {type(system).__name__}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_canonical(payload))


def load_system(path) -> SemigroupSystem | AffineSystem:
    with open(path, encoding="utf-8") as fh:
        return loads_system(fh.read())
