"""Working-precision management and decimal-string round-tripping.

All numerics run on mpmath's global context.  The package default is 128
significant decimal digits; the HYPERORBIT_PRECISION environment variable
overrides it.  Computations that need temporary extra precision use the
`working_dps` context manager so the caller's setting is always restored.
"""

from __future__ import annotations

import os
from contextlib import contextmanager
from fractions import Fraction

import mpmath
from mpmath import mp, mpf

DEFAULT_DPS = 128
ENV_PRECISION = "HYPERORBIT_PRECISION"

# Reserved sentinel: a zero scalar is represented by log-magnitude -inf.
LOG_ZERO = mpf("-inf")


def default_dps() -> int:
    """Package default precision in decimal digits, honoring the env override."""
    raw = os.environ.get(ENV_PRECISION)
    if raw is None:
        return DEFAULT_DPS
    try:
        dps = int(raw)
    except ValueError as exc:
        raise ValueError(f"{ENV_PRECISION} must be an integer, got {raw!r}") from exc
    if dps < 15:
        raise ValueError(f"{ENV_PRECISION} must be >= 15, got {dps}")
    return dps


def set_precision(dps: int) -> None:
    if dps < 15:
        raise ValueError(f"precision must be >= 15 digits, got {dps}")
    mp.dps = dps


@contextmanager
def working_dps(dps: int):
    """Run a block at the given decimal precision, restoring the previous one."""
    old = mp.dps
    mp.dps = dps
    try:
        yield mp
    finally:
        mp.dps = old


@contextmanager
def extra_dps(extra: int):
    with working_dps(mp.dps + extra):
        yield mp


def mpf_from_fraction(fr: Fraction) -> mpf:
    """Correctly rounded mpf of an exact rational (single division)."""
    return mpf(fr.numerator) / fr.denominator


def exact_decimal_str(x) -> str:
    """Exact finite decimal expansion of a binary float.

    Every finite mpf is man * 2^exp, so its decimal expansion terminates;
    printing it in full (rather than to a fixed digit count) keeps values
    whose mantissas exceed the working precision — exact-arithmetic products
    do — faithful through a save/load cycle.
    """
    if x == 0:
        return "0"
    if not mpmath.isfinite(x):
        raise ValueError(f"no exact decimal expansion for {x!r}")
    # read the raw mantissa/exponent pair: passing through mpf() would
    # re-round excess-precision values (exact products) to working precision
    sign, man, exp, _ = x._mpf_
    prefix = "-" if sign else ""
    if exp >= 0:
        return prefix + str(man << exp)
    j = -exp
    scaled = str(man * 5**j)
    if len(scaled) <= j:
        scaled = "0" * (j - len(scaled) + 1) + scaled
    return prefix + scaled[:-j] + "." + scaled[-j:]


def from_exact_decimal_str(s: str) -> mpf:
    """Parse a decimal string; dyadic values reconstruct without rounding."""
    try:
        fr = Fraction(s)
    except (ValueError, ZeroDivisionError):
        return mpf(s)
    num, den = fr.numerator, fr.denominator
    if den & (den - 1):
        return mpf(s)  # not dyadic: correctly rounded at working precision
    return mp.make_mpf(mpmath.libmp.from_man_exp(num, -(den.bit_length() - 1)))


def nstr(x, digits: int = 24) -> str:
    """Short deterministic decimal rendering for reports."""
    return mpmath.nstr(x, digits)


def fraction_str(fr: Fraction) -> str:
    return f"{fr.numerator}/{fr.denominator}"


def parse_fraction(s: str) -> Fraction:
    return Fraction(s)
