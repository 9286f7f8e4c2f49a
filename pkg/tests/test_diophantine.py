import random
from fractions import Fraction

import mpmath
import pytest
from mpmath import mp, mpf

from hyperorbit.diophantine import (
    best_rational,
    cf_expansion,
    convergents,
    dist_to_int,
    factorize,
    first_entry,
    fraction_exponents,
    frac01,
    is_probable_prime,
    iter_entries,
    multiplicative_dependence,
)


def brute_first(alpha, c, w, m_max):
    for m in range(m_max + 1):
        if dist_to_int(c + m * alpha) <= w:
            return m
    return None


def test_cf_expansion_golden_ratio():
    phi = (1 + mpmath.sqrt(5)) / 2
    assert cf_expansion(phi, 12) == [1] * 12


def test_cf_expansion_rational_terminates():
    digits = cf_expansion(mpf(355) / 113, 64)
    ps = list(convergents(digits))
    assert ps[-1] == (355, 113)


def test_convergents_of_pi_prefix():
    digits = cf_expansion(mpmath.pi, 6)
    assert digits[:4] == [3, 7, 15, 1]
    assert (22, 7) in convergents(digits)


def test_best_rational_finds_and_rejects():
    x = mpf(7) / 16
    assert best_rational(x, 100, mpf("1e-30")) == (7, 16)
    # pi is not within 1e-30 of any fraction with denominator <= 1000
    assert best_rational(mpmath.pi, 1000, mpf("1e-30")) is None


@pytest.mark.parametrize("seed", range(8))
def test_first_entry_matches_brute_force(seed):
    rng = random.Random(seed)
    for _ in range(250):
        alpha = mpf(rng.random())
        c = mpf(rng.random())
        w = mpf(10) ** rng.uniform(-4, -0.5)
        m_max = rng.randrange(0, 3000)
        got = first_entry(alpha, c, w, m_max)
        want = brute_first(alpha, c, w, m_max)
        assert got == want, (alpha, c, w, m_max, got, want)


def test_first_entry_rational_step():
    # rational alpha: orbit is periodic; verify both hit and miss cases.
    # The window edge stays clear of orbit points: exact boundary hits are
    # indeterminate at working precision by design.
    alpha = mpf(3) / 8
    assert first_entry(alpha, mpf("0.2"), mpf("0.051"), 100) == brute_first(
        alpha, mpf("0.2"), mpf("0.051"), 100
    )
    # window that the 8-periodic orbit never enters
    assert first_entry(alpha, mpf("0.0625"), mpf("0.01"), 1000) is None


def test_first_entry_zero_step():
    assert first_entry(mpf(0), mpf("0.4"), mpf("0.05"), 10) is None
    assert first_entry(mpf(0), mpf("0.01"), mpf("0.05"), 10) == 0


def test_first_entry_large_budget_fast():
    # ln2/ln3 rotation; a narrow window is reached far beyond scanning range
    alpha = mpmath.ln(2) / mpmath.ln(3)
    w = mpf("1e-9")
    m = first_entry(alpha, mpf("0.1234567"), w, 10**12)
    assert m is not None
    assert dist_to_int(mpf("0.1234567") + m * alpha) <= w
    for earlier in range(max(0, m - 40), m):
        assert dist_to_int(mpf("0.1234567") + earlier * alpha) > w


def test_iter_entries_enumerates_all():
    rng = random.Random(99)
    alpha = mpf(rng.random())
    c = mpf(rng.random())
    w = mpf("0.01")
    hits = list(iter_entries(alpha, c, w, 4000))
    want = [m for m in range(4001) if dist_to_int(c + m * alpha) <= w]
    assert hits == want


def test_is_probable_prime():
    assert is_probable_prime(2)
    assert is_probable_prime(3)
    assert not is_probable_prime(1)
    assert is_probable_prime(2**61 - 1)
    assert not is_probable_prime(2**67 - 1)
    carmichael = 561
    assert not is_probable_prime(carmichael)


def test_factorize_complete_and_bounded():
    f, complete = factorize(2**10 * 3**4 * 17, 100)
    assert complete and f == {2: 10, 3: 4, 17: 1}
    big_prime = 1_000_000_007
    f, complete = factorize(4 * big_prime, 1000)
    assert complete and f == {2: 2, big_prime: 1}
    # product of two large primes beyond the bound but within MR range is
    # not factored, only detected as incomplete
    n = 1_000_000_007 * 1_000_000_009
    f, complete = factorize(n, 1000)
    assert not complete


def test_fraction_exponents_signed():
    vec, complete = fraction_exponents(Fraction(8, 27))
    assert complete and vec == {2: 3, 3: -3}


@pytest.mark.parametrize(
    "fa,fb,verdict",
    [
        (Fraction(1, 2), Fraction(3), "independent"),
        (Fraction(1, 2), Fraction(2), "dependent"),
        (Fraction(1, 16), Fraction(2), "dependent"),
        (Fraction(4, 9), Fraction(27, 8), "dependent"),
        (Fraction(1, 2), Fraction(6), "independent"),
        (Fraction(8, 27), Fraction(9, 4), "dependent"),
    ],
)
def test_multiplicative_dependence_verdicts(fa, fb, verdict):
    got, witness = multiplicative_dependence(fa, fb)
    assert got == verdict
    if verdict == "dependent":
        i, j = witness
        assert fa**i == fb**j and (i, j) != (0, 0)


def test_multiplicative_dependence_unknown_at_tiny_bound():
    n = 1_000_000_007 * 1_000_000_009
    got, _ = multiplicative_dependence(Fraction(1, n), Fraction(3), bound=100)
    assert got == "unknown"
