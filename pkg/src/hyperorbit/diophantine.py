"""Continued fractions, rotation hitting times, and multiplicative dependence.

The rotation search answers: for irrational step alpha, offset c, and window
half-width w, what is the smallest m >= 0 with dist(c + m*alpha, Z) <= w?
It renormalizes through the continued-fraction structure of alpha, so the
answer comes back in O(log m) torus arithmetic instead of a linear scan.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterator

import mpmath
from mpmath import mp, mpf

from .errors import HyperorbitError

_MR_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)
# Deterministic Miller-Rabin below this bound with the bases above.
_MR_LIMIT = 3_317_044_064_679_887_385_961_981


class PrecisionExhausted(HyperorbitError):
    """Renormalization descended below the resolution of the working precision."""


def frac01(x) -> mpf:
    """Fractional part in [0, 1)."""
    return mpmath.frac(x)


def dist_to_int(x) -> mpf:
    f = frac01(x)
    return min(f, 1 - f)


# ---------------------------------------------------------------------------
# Continued fractions


def cf_expansion(x, depth: int = 64) -> list[int]:
    """Continued-fraction digits [a0; a1, a2, ...] of x, up to `depth` terms.

    Stops early when the remainder is exhausted at working precision, so a
    (near-)rational input yields a short expansion.
    """
    digits: list[int] = []
    cutoff = mpf(10) ** (-(mp.dps - 8))
    y = mpf(x)
    for _ in range(depth):
        a = int(mpmath.floor(y))
        digits.append(a)
        r = y - a
        if r < cutoff:
            break
        y = 1 / r
    return digits


def convergents(digits: list[int]) -> Iterator[tuple[int, int]]:
    """Yield convergents (p, q) of a continued-fraction digit list."""
    p0, q0 = 1, 0
    p1, q1 = digits[0], 1
    yield p1, q1
    for a in digits[1:]:
        p0, p1 = p1, a * p1 + p0
        q0, q1 = q1, a * q1 + q0
        yield p1, q1


def best_rational(x, max_den: int, tol, depth: int = 64) -> tuple[int, int] | None:
    """First convergent p/q of x with q <= max_den and |x - p/q| <= tol."""
    xm = mpf(x)
    for p, q in convergents(cf_expansion(xm, depth)):
        if q > max_den:
            return None
        if abs(xm - mpf(p) / q) <= tol:
            return (p, q)
    return None


# ---------------------------------------------------------------------------
# Rotation hitting times


def _descend(alpha: mpf, c: mpf, w: mpf, m_max: int, depth: int) -> int | None:
    """Minimal m in [0, m_max] with dist(c + m*alpha, Z) <= w, else None.

    Preconditions: alpha in [0, 1), c in [0, 1), w > 0.
    """
    if m_max < 0:
        return None
    if w >= mpf(1) / 2:
        return 0
    if c <= w or c >= 1 - w:
        return 0
    # Symmetry dist(c + m*alpha, Z) == dist((1-c) + m*(1-alpha), Z) lets us
    # keep the step in (0, 1/2], which makes the wrap count shrink each level.
    if alpha > mpf(1) / 2:
        alpha = 1 - alpha
        c = frac01(-c)
    if alpha <= 0:
        return None  # static orbit, already outside the window
    if depth > 400:
        raise PrecisionExhausted("rotation renormalization did not terminate")
    if w < mpf(2) ** (-(mp.prec - 16)):
        raise PrecisionExhausted("window below working precision")
    # A hit means some integer k >= 1 has |c + m*alpha - k| <= w, i.e. the
    # point k - c lies within w of the lattice alpha*Z.  On the torus of
    # size alpha that is the same two-sided window problem in k.
    j_max = int(mpmath.floor(c + mpf(m_max) * alpha + w)) - 1
    if j_max < 0:
        return None
    inv = 1 / alpha
    j = _descend(frac01(inv), frac01((1 - c) * inv), w * inv, j_max, depth + 1)
    if j is None:
        return None
    k = 1 + j
    m = int(mpmath.ceil((k - c - w) / alpha))
    if m < 0:
        m = 0
    return m


def first_entry(alpha, c, w, m_max: int) -> int | None:
    """Minimal m in [0, m_max] with dist(c + m*alpha, Z) <= w, else None.

    Verified against the original data before returning; boundary-grazing
    rounding is absorbed by a +-2 local correction.
    """
    a = frac01(mpf(alpha))
    c0 = frac01(mpf(c))
    wm = mpf(w)
    if wm <= 0:
        return None
    m = _descend(a, c0, wm, m_max, 0)
    if m is None:
        return None
    # Defensive verification; nudge around the computed index if an edge case
    # rounded the wrong way during renormalization.
    for cand in (m, m - 1, m + 1, m - 2, m + 2):
        if 0 <= cand <= m_max and dist_to_int(c0 + cand * a) <= wm:
            best = cand
            while best - 1 >= 0 and dist_to_int(c0 + (best - 1) * a) <= wm:
                best -= 1
            return best
    return None


def iter_entries(alpha, c, w, m_max: int) -> Iterator[int]:
    """All m in [0, m_max] with dist(c + m*alpha, Z) <= w, in increasing order."""
    a = frac01(mpf(alpha))
    c0 = frac01(mpf(c))
    wm = mpf(w)
    m = first_entry(a, c0, wm, m_max)
    while m is not None:
        yield m
        nxt = first_entry(a, frac01(c0 + (m + 1) * a), wm, m_max - m - 1)
        m = None if nxt is None else m + 1 + nxt


# ---------------------------------------------------------------------------
# Integer factorization and multiplicative dependence


def is_probable_prime(n: int) -> bool:
    if n < 2:
        return False
    for p in _MR_BASES:
        if n % p == 0:
            return n == p
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in _MR_BASES:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def factorize(n: int, bound: int = 1_000_000) -> tuple[dict[int, int], bool]:
    """Trial-divide n up to `bound`; returns (factors, complete).

    A leftover cofactor is kept under the key itself when it is provably
    prime (deterministic Miller-Rabin range); otherwise `complete` is False
    and the leftover is omitted.
    """
    if n <= 0:
        raise ValueError("factorize expects a positive integer")
    factors: dict[int, int] = {}
    rem = n
    for p in (2, 3):
        while rem % p == 0:
            factors[p] = factors.get(p, 0) + 1
            rem //= p
    f = 5
    while f * f <= rem and f <= bound:
        for p in (f, f + 2):
            while rem % p == 0:
                factors[p] = factors.get(p, 0) + 1
                rem //= p
        f += 6
    if rem == 1:
        return factors, True
    if f * f > rem:
        # leftover is prime (no divisor below its square root)
        factors[rem] = factors.get(rem, 0) + 1
        return factors, True
    if rem < _MR_LIMIT and is_probable_prime(rem):
        factors[rem] = factors.get(rem, 0) + 1
        return factors, True
    return factors, False


def fraction_exponents(fr: Fraction, bound: int = 1_000_000) -> tuple[dict[int, int], bool]:
    """Signed prime-exponent vector of a positive rational."""
    if fr <= 0:
        raise ValueError("fraction_exponents expects a positive rational")
    num, cn = factorize(fr.numerator, bound) if fr.numerator != 1 else ({}, True)
    den, cd = factorize(fr.denominator, bound) if fr.denominator != 1 else ({}, True)
    vec = dict(num)
    for p, e in den.items():
        vec[p] = vec.get(p, 0) - e
    vec = {p: e for p, e in vec.items() if e != 0}
    return vec, cn and cd


def multiplicative_dependence(
    fa: Fraction, fb: Fraction, bound: int = 1_000_000
) -> tuple[str, tuple[int, int] | None]:
    """Decide whether fa^i = fb^j for some nonzero integers i, j.

    Returns ("dependent", (i, j)) with fa**i == fb**j as witness,
    ("independent", None), or ("unknown", None) when factorization stalled
    at the bound.  Inputs are positive rationals distinct from 1.
    """
    if fa == 1 or fb == 1:
        raise ValueError("moduli equal to 1 have no exponent vector")
    va, ca = fraction_exponents(fa, bound)
    vb, cb = fraction_exponents(fb, bound)
    if not (ca and cb):
        return "unknown", None
    if set(va) != set(vb):
        return "independent", None
    primes = sorted(va)
    p0 = primes[0]
    # i*va == j*vb componentwise forces i/j == vb[p]/va[p] for every prime p.
    ratio = Fraction(vb[p0], va[p0])
    for p in primes[1:]:
        if Fraction(vb[p], va[p]) != ratio:
            return "independent", None
    return "dependent", (ratio.numerator, ratio.denominator)
