"""Scalars over R or C in log-magnitude/phase form.

A FieldElement keeps ln|x| as the primary magnitude representation so that
products and integer powers never overflow and never round across
multiplication chains (log-magnitudes combine with exact mpf arithmetic).
Where the modulus or the phase is known as an exact rational datum it is
carried along, which lets certification decide rationality questions exactly
instead of numerically.

Phase provenance convention: phase == exact_rad + 2*pi*exact_turns (mod 2*pi)
with both terms rational.  Since pi is irrational, such a phase is an exact
rational multiple of 2*pi precisely when exact_rad == 0.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from fractions import Fraction

import mpmath
from mpmath import fadd, fmul, mp, mpc, mpf

from .errors import FieldMismatch, ZeroModulus
from .precision import LOG_ZERO, mpf_from_fraction

ExtReal = mpf  # wide-exponent working real: mpf exponents are plain ints


class Field(str, Enum):
    REAL = "real"
    COMPLEX = "complex"


def two_pi() -> mpf:
    return 2 * mpmath.pi


def as_mp(value, field: Field):
    """Coerce a scalar literal to an mpf (real) or mpc (complex)."""
    if isinstance(value, FieldElement):
        if value.field is not field:
            raise FieldMismatch(f"expected {field.value} scalar")
        return value.to_rect()
    if isinstance(value, Fraction):
        out = mpf_from_fraction(value)
    elif isinstance(value, mpc):
        if field is Field.REAL:
            raise FieldMismatch("complex literal in a real context")
        return value
    elif isinstance(value, complex):
        if field is Field.REAL:
            raise FieldMismatch("complex literal in a real context")
        return mpc(value)
    else:
        out = mpf(value)
    return mpc(out) if field is Field.COMPLEX else out


def _exact_mul(x: mpf, y: mpf) -> mpf:
    if mpmath.isinf(x) or mpmath.isinf(y):
        return LOG_ZERO
    return fmul(x, y, exact=True)


def _exact_add(x: mpf, y: mpf) -> mpf:
    if mpmath.isinf(x) or mpmath.isinf(y):
        return LOG_ZERO
    return fadd(x, y, exact=True)


@dataclass(frozen=True)
class FieldElement:
    """A scalar in K = R or C, stored as (log-magnitude, sign/phase)."""

    field: Field
    log_mag: mpf
    sign: int = 1  # real scalars only: +1 or -1
    phase: mpf | None = None  # complex scalars only: in [0, 2*pi)
    exact_mag: Fraction | None = None
    exact_rad: Fraction | None = None
    exact_turns: Fraction | None = None

    # -- constructors -------------------------------------------------------

    @classmethod
    def zero(cls, field: Field) -> "FieldElement":
        if field is Field.REAL:
            return cls(field, LOG_ZERO, 1)
        return cls(field, LOG_ZERO, 1, mpf(0), None, Fraction(0), Fraction(0))

    @classmethod
    def one(cls, field: Field) -> "FieldElement":
        return cls.from_rational(Fraction(1), field)

    @classmethod
    def from_rational(cls, value, field: Field = Field.REAL) -> "FieldElement":
        """Exact element from a rational literal (int, Fraction, or 'p/q')."""
        fr = value if isinstance(value, Fraction) else Fraction(value)
        if fr == 0:
            return cls.zero(field)
        mag = abs(fr)
        log_mag = mpmath.ln(mpf_from_fraction(mag))
        if field is Field.REAL:
            return cls(field, log_mag, 1 if fr > 0 else -1, None, mag)
        turns = Fraction(0) if fr > 0 else Fraction(1, 2)
        phase = mpf(0) if fr > 0 else mpmath.pi
        return cls(field, log_mag, 1, phase, mag, Fraction(0), turns)

    @classmethod
    def complex_polar(
        cls,
        mag: Fraction,
        rad: Fraction = Fraction(0),
        turns: Fraction = Fraction(0),
    ) -> "FieldElement":
        """Exact complex element  mag * exp(i*(rad + 2*pi*turns))."""
        mag = Fraction(mag)
        if mag < 0:
            raise ValueError("modulus must be nonnegative")
        if mag == 0:
            return cls.zero(Field.COMPLEX)
        rad, turns = Fraction(rad), Fraction(turns) % 1
        log_mag = mpmath.ln(mpf_from_fraction(mag))
        phase = _phase_value(rad, turns)
        return cls(Field.COMPLEX, log_mag, 1, phase, mag, rad, turns)

    @classmethod
    def from_rect(cls, value, field: Field) -> "FieldElement":
        """Element from a rectangular numeric value (inexact in general)."""
        if isinstance(value, (int, Fraction)):
            return cls.from_rational(Fraction(value), field)
        x = as_mp(value, field)
        if field is Field.REAL:
            if x == 0:
                return cls.zero(field)
            return cls(field, mpmath.ln(abs(x)), 1 if x > 0 else -1)
        if x == 0:
            return cls.zero(field)
        if x.imag == 0:
            return cls.from_rect_real_axis(x.real)
        theta = mpmath.atan2(x.imag, x.real)
        if theta < 0:
            theta += two_pi()
        return cls(field, mpmath.ln(abs(x)), 1, theta)

    @classmethod
    def from_rect_real_axis(cls, value) -> "FieldElement":
        """Complex element lying on the real axis, with exact phase 0 or pi."""
        x = mpf(value)
        if x == 0:
            return cls.zero(Field.COMPLEX)
        turns = Fraction(0) if x > 0 else Fraction(1, 2)
        phase = mpf(0) if x > 0 else mpmath.pi
        return cls(Field.COMPLEX, mpmath.ln(abs(x)), 1, phase, None, Fraction(0), turns)

    # -- predicates ----------------------------------------------------------

    @property
    def is_zero(self) -> bool:
        return mpmath.isinf(self.log_mag)

    @property
    def has_exact_mag(self) -> bool:
        return self.exact_mag is not None

    @property
    def has_exact_phase(self) -> bool:
        return self.exact_rad is not None and self.exact_turns is not None

    # -- accessors -----------------------------------------------------------

    def modulus(self) -> mpf:
        if self.is_zero:
            return mpf(0)
        if self.exact_mag is not None:
            return mpf_from_fraction(self.exact_mag)
        return mpmath.exp(self.log_mag)

    def phase_value(self) -> mpf:
        """Phase in [0, 2*pi); real scalars report 0 or pi."""
        if self.field is Field.REAL:
            return mpf(0) if self.sign > 0 else +mpmath.pi
        if self.has_exact_phase:
            return _phase_value(self.exact_rad, self.exact_turns)
        return self.phase

    def to_rect(self):
        if self.field is Field.REAL:
            return self.sign * self.modulus()
        if self.is_zero:
            return mpc(0)
        r = self.modulus()
        theta = self.phase_value()
        return mpc(r * mpmath.cos(theta), r * mpmath.sin(theta))

    def distance(self, other: "FieldElement") -> mpf:
        self._check_field(other)
        return abs(self.to_rect() - other.to_rect())

    # -- algebra ---------------------------------------------------------------

    def _check_field(self, other: "FieldElement") -> None:
        if self.field is not other.field:
            raise FieldMismatch("mixed real/complex operands")

    def mul(self, other: "FieldElement") -> "FieldElement":
        self._check_field(other)
        if self.is_zero or other.is_zero:
            return FieldElement.zero(self.field)
        log_mag = _exact_add(self.log_mag, other.log_mag)
        mag = (
            self.exact_mag * other.exact_mag
            if self.exact_mag is not None and other.exact_mag is not None
            else None
        )
        if self.field is Field.REAL:
            return FieldElement(self.field, log_mag, self.sign * other.sign, None, mag)
        if self.has_exact_phase and other.has_exact_phase:
            rad = self.exact_rad + other.exact_rad
            turns = (self.exact_turns + other.exact_turns) % 1
            return FieldElement(
                self.field, log_mag, 1, _phase_value(rad, turns), mag, rad, turns
            )
        phase = mpmath.fmod(self.phase_value() + other.phase_value(), two_pi())
        return FieldElement(self.field, log_mag, 1, phase, mag)

    def inverse(self) -> "FieldElement":
        if self.is_zero:
            raise ZeroModulus("zero has no inverse")
        log_mag = -self.log_mag
        mag = 1 / self.exact_mag if self.exact_mag is not None else None
        if self.field is Field.REAL:
            return FieldElement(self.field, log_mag, self.sign, None, mag)
        if self.has_exact_phase:
            rad = -self.exact_rad
            turns = (-self.exact_turns) % 1
            return FieldElement(
                self.field, log_mag, 1, _phase_value(rad, turns), mag, rad, turns
            )
        phase = mpmath.fmod(two_pi() - self.phase, two_pi())
        return FieldElement(self.field, log_mag, 1, phase, mag)

    def div(self, other: "FieldElement") -> "FieldElement":
        return self.mul(other.inverse())

    def neg(self) -> "FieldElement":
        if self.is_zero:
            return self
        if self.field is Field.REAL:
            return FieldElement(
                self.field, self.log_mag, -self.sign, None, self.exact_mag
            )
        minus_one = FieldElement.from_rational(-1, Field.COMPLEX)
        return self.mul(minus_one)

    def pow(self, k: int) -> "FieldElement":
        """Integer power; negative exponents allowed for nonzero scalars."""
        if not isinstance(k, int):
            raise TypeError("exponent must be an int")
        if self.is_zero:
            if k <= 0:
                raise ZeroModulus("zero cannot be raised to a nonpositive power")
            return self
        if k == 0:
            return FieldElement.one(self.field)
        log_mag = _exact_mul(self.log_mag, mpf(k))
        mag = self.exact_mag**k if self.exact_mag is not None else None
        if self.field is Field.REAL:
            sign = self.sign if k % 2 else 1
            return FieldElement(self.field, log_mag, sign, None, mag)
        if self.has_exact_phase:
            rad = self.exact_rad * k
            turns = (self.exact_turns * k) % 1
            return FieldElement(
                self.field, log_mag, 1, _phase_value(rad, turns), mag, rad, turns
            )
        phase = mpmath.fmod(_exact_mul(self.phase, mpf(k)), two_pi())
        if phase < 0:
            phase += two_pi()
        return FieldElement(self.field, log_mag, 1, phase, mag)

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        if self.is_zero:
            return f"FieldElement({self.field.value}, 0)"
        bits = [self.field.value, f"log_mag={mpmath.nstr(self.log_mag, 12)}"]
        if self.field is Field.REAL:
            bits.append(f"sign={self.sign:+d}")
        else:
            bits.append(f"phase={mpmath.nstr(self.phase_value(), 12)}")
        if self.exact_mag is not None:
            bits.append(f"|x|={self.exact_mag}")
        if self.has_exact_phase:
            bits.append(f"arg={self.exact_rad}+2pi*{self.exact_turns}")
        return "FieldElement(" + ", ".join(bits) + ")"


def _phase_value(rad: Fraction, turns: Fraction) -> mpf:
    theta = mpmath.fmod(mpf_from_fraction(rad) + two_pi() * mpf_from_fraction(turns), two_pi())
    if theta < 0:
        theta += two_pi()
    return theta
