"""Generating-pair certification and the strict precedence order.

A pair (a, b) with 0 < |a| < 1 < |b| is *generating* when the two-parameter
products a^m b^n (m, n >= 0) get arbitrarily close to every element of the
field.  No finite procedure can prove that outright, so certification runs a
refutation ladder first — every refutation it issues is exact — and promotes
survivors to a heuristic certificate:

  1. magnitude ordering 0 < |a| < 1 < |b| (exact),
  2. multiplicative dependence of rational moduli via integer factorization
     (exact: |a|^i == |b|^j forces the product moduli onto a geometric
     lattice, never dense),
  3. real field: some generator must be negative, or no product is (exact),
  4. complex field: if both arguments are exact rational multiples of 2*pi
     the products live on finitely many rays (exact),
  5. heuristic screens: a continued-fraction near-rationality test on
     ln|a|/ln|b| and, over C, on each argument/2*pi.  Suspicious pairs come
     back Unknown rather than refuted.

Survivors are CertifiedHeuristic.  CertifiedExact is reserved for callers
holding an out-of-band proof; this module never issues it.  Certification
attaches a small deterministic coverage survey of annulus products so that a
heuristic or Unknown outcome carries evidence either way.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from fractions import Fraction

import mpmath
from mpmath import mp, mpf

from .errors import FieldMismatch, UnitModulusDenominator, ZeroModulus
from .diophantine import best_rational, multiplicative_dependence
from .scalars import Field, FieldElement, two_pi

DELTA_CMP = mpf(10) ** -30  # strictness margin for the precedence order


class Certificate(str, Enum):
    CERTIFIED_EXACT = "CertifiedExact"
    CERTIFIED_HEURISTIC = "CertifiedHeuristic"
    REFUTED_MAGNITUDE = "RefutedMagnitude"
    REFUTED_RATIONAL_RATIO = "RefutedRationalRatio"
    REFUTED_SIGN_COVERAGE = "RefutedSignCoverage"
    REFUTED_PHASE = "RefutedPhase"
    UNKNOWN = "Unknown"


CERTIFIED = (Certificate.CERTIFIED_EXACT, Certificate.CERTIFIED_HEURISTIC)


class Ordering(str, Enum):
    LESS = "Less"
    NOT_LESS = "NotLess"
    INCOMPARABLE = "Incomparable"


@dataclass(frozen=True)
class PrecOrder:
    outcome: Ordering
    reason: str


@dataclass(frozen=True)
class CertifyOptions:
    factor_bound: int = 1_000_000
    cf_depth: int = 64
    max_denominator: int = 10**12
    empirical: str = "auto"  # auto | always | never
    empirical_samples: int = 512


@dataclass(frozen=True)
class EmpiricalReport:
    """Coverage survey of products a^m b^n landing in the annulus
    1/4 <= |x| <= 4, bucketed on a log-modulus x sign/argument grid."""

    samples: int
    hit_cells: int
    total_cells: int
    coverage: Fraction


@dataclass(frozen=True, eq=False)
class GeneratingPair:
    a: FieldElement
    b: FieldElement
    log_ratio: mpf  # ln|a| / ln|b|; nan when |b| == 1
    certificate: Certificate
    witness: str = ""
    empirical: EmpiricalReport | None = None

    @property
    def is_certified(self) -> bool:
        return self.certificate in CERTIFIED

    @property
    def field(self) -> Field:
        return self.a.field


def log_ratio(a: FieldElement, b: FieldElement) -> mpf:
    """ln|a| / ln|b|, the quantity the precedence order compares."""
    if a.is_zero or b.is_zero:
        raise ZeroModulus("log_ratio needs nonzero scalars")
    if b.log_mag == 0:
        raise UnitModulusDenominator("|b| = 1 puts ln|b| in the denominator")
    return a.log_mag / b.log_mag


def prec_compare(p: GeneratingPair, q: GeneratingPair, delta=None) -> PrecOrder:
    """Strict order on certified pairs: Less iff ratio(p) < ratio(q) - delta.

    Ratios closer than the margin are reported NotLess so downstream
    validation never accepts a chain on the strength of noise digits.
    """
    if delta is None:
        delta = DELTA_CMP
    if not p.is_certified:
        return PrecOrder(Ordering.INCOMPARABLE, f"left pair is {p.certificate.value}")
    if not q.is_certified:
        return PrecOrder(Ordering.INCOMPARABLE, f"right pair is {q.certificate.value}")
    gap = q.log_ratio - p.log_ratio
    if gap > delta:
        return PrecOrder(Ordering.LESS, f"ratio gap {mpmath.nstr(gap, 8)}")
    return PrecOrder(
        Ordering.NOT_LESS,
        f"ratio gap {mpmath.nstr(gap, 8)} within margin" if gap > 0 else "ratios not increasing",
    )


# ---------------------------------------------------------------------------
# Phase classification


class PhaseClass(Enum):
    EXACT_COMMENSURATE = "exact_commensurate"
    NEAR_COMMENSURATE = "near_commensurate"
    EXACT_INCOMMENSURATE = "exact_incommensurate"
    HEURISTIC_INCOMMENSURATE = "heuristic_incommensurate"


def classify_phase(x: FieldElement, opts: CertifyOptions) -> tuple[PhaseClass, str]:
    """Is arg(x) a rational multiple of 2*pi?

    Exact answers come from recorded provenance: an argument of the form
    q_rad + 2*pi*q_turn with rational q_rad != 0 can never be a rational
    multiple of 2*pi (pi is irrational), while q_rad == 0 always is.
    Without provenance we fall back to a continued-fraction screen.
    """
    if x.field is Field.REAL:
        turn = "0" if x.sign > 0 else "1/2"
        return PhaseClass.EXACT_COMMENSURATE, f"real axis, argument {turn} turns"
    if x.has_exact_phase:
        if x.exact_rad == 0:
            return PhaseClass.EXACT_COMMENSURATE, f"argument is {x.exact_turns} turns"
        return (
            PhaseClass.EXACT_INCOMMENSURATE,
            f"argument {x.exact_rad} rad + {x.exact_turns} turns is irrational in turns",
        )
    theta = x.phase_value()
    if theta == 0:
        return PhaseClass.EXACT_COMMENSURATE, "argument 0"
    turns = theta / two_pi()
    hit = best_rational(turns, opts.max_denominator, _near_tol(), opts.cf_depth)
    if hit is not None:
        pnum, pden = hit
        return PhaseClass.NEAR_COMMENSURATE, f"argument within tolerance of {pnum}/{pden} turns"
    return PhaseClass.HEURISTIC_INCOMMENSURATE, "no close rational turn count to depth"


def _near_tol() -> mpf:
    # An approximation this tight at working precision is indistinguishable
    # from equality; 20 guard digits absorb the logarithm evaluations.
    return mpf(10) ** (-(mp.dps - 20))


# ---------------------------------------------------------------------------
# Certification ladder


def certify_generating(
    a: FieldElement, b: FieldElement, opts: CertifyOptions | None = None
) -> GeneratingPair:
    if opts is None:
        opts = CertifyOptions()
    if a.is_zero or b.is_zero:
        raise ZeroModulus("generating pairs need nonzero members")
    if a.field is not b.field:
        raise FieldMismatch("pair members live in different fields")

    ratio = (
        a.log_mag / b.log_mag if b.log_mag != 0 else mpf("nan")
    )

    def refute(cert: Certificate, witness: str) -> GeneratingPair:
        return GeneratingPair(a, b, ratio, cert, witness)

    # 1. magnitude ordering (exact in log representation)
    if not (a.log_mag < 0 < b.log_mag):
        return refute(
            Certificate.REFUTED_MAGNITUDE,
            f"need |a| < 1 < |b|, got ln|a| = {mpmath.nstr(a.log_mag, 8)}, "
            f"ln|b| = {mpmath.nstr(b.log_mag, 8)}",
        )

    # 2. rational log-ratio: exact route via factorization, then CF screen
    ratio_state = "open"
    ratio_note = ""
    if a.exact_mag is not None and b.exact_mag is not None:
        verdict, pair_ij = multiplicative_dependence(
            a.exact_mag, b.exact_mag, opts.factor_bound
        )
        if verdict == "dependent":
            i, j = pair_ij
            return refute(
                Certificate.REFUTED_RATIONAL_RATIO,
                f"|a|^{i} == |b|^{j} exactly: product moduli form a geometric lattice",
            )
        if verdict == "independent":
            ratio_state = "exact_irrational"
            ratio_note = "moduli multiplicatively independent by factorization"
    if ratio_state == "open":
        hit = best_rational(ratio, opts.max_denominator, _near_tol(), opts.cf_depth)
        if hit is not None:
            num, den = hit
            ratio_state = "near_rational"
            ratio_note = f"ln|a|/ln|b| within tolerance of {num}/{den}"
        else:
            ratio_state = "heuristic_irrational"
            ratio_note = "no close rational to continued-fraction depth"

    # 3. real sign coverage (exact)
    if a.field is Field.REAL and a.sign > 0 and b.sign > 0:
        return refute(
            Certificate.REFUTED_SIGN_COVERAGE,
            "both generators positive: no product is negative",
        )

    # 4. complex ray confinement (exact)
    phase_notes = ""
    if a.field is Field.COMPLEX:
        class_a, note_a = classify_phase(a, opts)
        class_b, note_b = classify_phase(b, opts)
        phase_notes = f"arg(a): {note_a}; arg(b): {note_b}"
        if (
            class_a is PhaseClass.EXACT_COMMENSURATE
            and class_b is PhaseClass.EXACT_COMMENSURATE
        ):
            return refute(
                Certificate.REFUTED_PHASE,
                "both arguments are rational turns: products confined to "
                f"finitely many rays ({note_a}; {note_b})",
            )

    # 5. heuristic outcomes
    if ratio_state == "near_rational":
        pair = GeneratingPair(
            a, b, ratio, Certificate.UNKNOWN, f"suspected rational ratio: {ratio_note}"
        )
        return _attach_empirical(pair, opts)

    if a.field is Field.COMPLEX:
        incommensurate = (PhaseClass.EXACT_INCOMMENSURATE, PhaseClass.HEURISTIC_INCOMMENSURATE)
        if class_a not in incommensurate and class_b not in incommensurate:
            pair = GeneratingPair(
                a,
                b,
                ratio,
                Certificate.UNKNOWN,
                f"suspected commensurate arguments: {phase_notes}",
            )
            return _attach_empirical(pair, opts)

    witness = ratio_note if not phase_notes else f"{ratio_note}; {phase_notes}"
    pair = GeneratingPair(a, b, ratio, Certificate.CERTIFIED_HEURISTIC, witness)
    return _attach_empirical(pair, opts)


def _attach_empirical(pair: GeneratingPair, opts: CertifyOptions) -> GeneratingPair:
    if opts.empirical == "never":
        return pair
    if opts.empirical == "auto" and pair.certificate not in (
        Certificate.CERTIFIED_HEURISTIC,
        Certificate.UNKNOWN,
    ):
        return pair
    report = empirical_density(pair.a, pair.b, opts.empirical_samples)
    return GeneratingPair(
        pair.a, pair.b, pair.log_ratio, pair.certificate, pair.witness, report
    )


def empirical_density(
    a: FieldElement,
    b: FieldElement,
    samples: int = 512,
    mag_cells: int = 24,
    arg_cells: int = 24,
) -> EmpiricalReport:
    """Deterministic coverage survey of {a^m b^n} inside 1/4 <= |x| <= 4.

    For each m = 0, 1, 2, ... every n that lands the product modulus inside
    the annulus is visited (there are finitely many per m since |b| > 1).
    Cells are (log-modulus bucket) x (sign, or argument bucket).  The whole
    computation stays in (log, phase) form.
    """
    lo, hi = -mpmath.ln(4), mpmath.ln(4)
    la, lb = a.log_mag, b.log_mag
    if not (la < 0 < lb):
        raise ValueError("survey expects |a| < 1 < |b|")
    real = a.field is Field.REAL
    rows = 2 if real else arg_cells
    hits: set[tuple[int, int]] = set()
    count = 0
    m = 0
    while count < samples and m <= 64 * samples:
        n_lo = int(mpmath.ceil((lo - m * la) / lb))
        n_hi = int(mpmath.floor((hi - m * la) / lb))
        am = a.pow(m)
        for n in range(max(n_lo, 0), n_hi + 1):
            x = am.mul(b.pow(n))
            t = (x.log_mag - lo) / (hi - lo)
            i = min(mag_cells - 1, max(0, int(t * mag_cells)))
            if real:
                j = 0 if x.sign > 0 else 1
            else:
                j = min(rows - 1, int(x.phase_value() / two_pi() * rows))
            hits.add((i, j))
            count += 1
            if count >= samples:
                break
        m += 1
    total = mag_cells * rows
    return EmpiricalReport(count, len(hits), total, Fraction(len(hits), total))
