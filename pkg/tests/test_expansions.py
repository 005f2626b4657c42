import math
import random
from fractions import Fraction
from itertools import product

import pytest
from hypothesis import given, strategies as st

from helpers import davenport_reference, ostrowski_ok
from ncfray.expansions import (
    DavenportDigits,
    DigitWord,
    NotCanonicalizable,
    ZeroDigits,
    davenport_canonicalize,
    davenport_digits,
    davenport_sum,
    davenport_validate,
    detect_word,
    find_forbidden_block,
    lattice_point,
    ostrowski,
    ostrowski_validate,
    word_value,
)
from ncfray.ncf import NcfExpansion

TEST_ALPHAS = [[5, 3], [2, 3], [4], [3, 2, 2], [7, 2, 3]]


def frac_part(x):
    return x - math.floor(x)


# -- Ostrowski ---------------------------------------------------------------------

def test_convergent_denominators_are_single_digits(alpha53):
    for k in range(1, 8):
        c = ostrowski(alpha53.q(k - 1), alpha53).coefficients
        assert c == (0,) * (k - 1) + (1,)


def test_seven_over_golden(alpha_golden):
    assert ostrowski(7, alpha_golden).coefficients == (0, 1, 1)
    assert ostrowski_validate((0, 1, 1), alpha_golden)


@pytest.mark.parametrize("period", TEST_ALPHAS)
def test_one_below_convergent(period):
    e = NcfExpansion.periodic([], period)
    for k in range(1, 10):
        want = tuple(e.digit(j) - 2 for j in range(1, k)) + (e.digit(k) - 1,)
        assert sum(c * e.q(j) for j, c in enumerate(want)) == e.q(k) - 1
        got = ostrowski(e.q(k) - 1, e).coefficients
        # leading zeros are trimmed when a_1 = 2
        assert got == want[: len(got)] and not any(want[len(got):])


def test_validate_rejects_boundary_pattern(alpha53):
    a1, a2 = alpha53.digit(1), alpha53.digit(2)
    assert not ostrowski_validate((a1 - 1, a2 - 1), alpha53)
    assert not ostrowski_validate((), alpha53)
    assert not ostrowski_validate((1, 0), alpha53)


@pytest.mark.parametrize("period", TEST_ALPHAS)
def test_validator_agrees_with_reference(period):
    e = NcfExpansion.periodic([], period)
    a = e.digits(5)
    for c in product(*[range(x + 1) for x in a]):
        assert ostrowski_validate(c, e) == ostrowski_ok(c, a), c


@pytest.mark.parametrize("period", [[5, 3], [2, 3], [4]])
def test_greedy_is_the_unique_expansion(period):
    e = NcfExpansion.periodic([], period)
    a = e.digits(12)
    q = [e.q(k) for k in range(12)]
    found: dict = {}

    def walk(k, prefix, total):
        if k == 12:
            return
        for c in range(a[k]):
            t = total + c * q[k]
            if t > 500:
                break
            word = prefix + (c,)
            if c and ostrowski_ok(word, a):
                found.setdefault(t, []).append(word)
            walk(k + 1, word, t)

    walk(0, (), 0)
    for n in range(1, 501):
        assert len(found.get(n, [])) == 1, n
        assert found[n][0] == ostrowski(n, e).coefficients


@given(st.integers(1, 10**5), st.sampled_from(TEST_ALPHAS))
def test_greedy_sums_back(q, period):
    e = NcfExpansion.periodic([], period)
    exp = ostrowski(q, e)
    assert exp.value() == q
    assert ostrowski_validate(exp.coefficients, e)


# -- Davenport digits ---------------------------------------------------------------

def test_beta_equal_alpha(alpha53):
    d = DavenportDigits(alpha53, beta=alpha53.source)
    assert d.digits(5) == [1, 0, 0, 0, 0]
    assert d.finite_support == 1


def test_frac_13_alpha(alpha53):
    beta = frac_part(13 * alpha53.source)
    d = DavenportDigits(alpha53, beta=beta)
    assert d.digits(6) == [3, 2, 0, 0, 0, 0]
    assert 3 * alpha53.D(1) + 2 * alpha53.D(2) == beta


def test_zero_beta(alpha53):
    assert DavenportDigits(alpha53, beta=Fraction(0)).digits(10) == [0] * 10


def test_function_form_returns_residual(alpha53):
    digits, resid = davenport_digits(Fraction(1, 3), alpha53, 10)
    assert len(digits) == 10
    assert sum(b * alpha53.D(k) for k, b in enumerate(digits, 1)) + resid * alpha53.D(10) == Fraction(1, 3)


@pytest.mark.parametrize("period", TEST_ALPHAS)
def test_digits_match_high_precision_recursion(period):
    e = NcfExpansion.periodic([], period)
    rng = random.Random(7)
    for _ in range(20):
        beta = Fraction(rng.randrange(1, 10**9), 10**9 + 7)
        got = DavenportDigits(e, beta=beta).digits(40)
        want = davenport_reference(beta, e.digits(40), e.source.to_mpf(1600), 40)
        assert got == want


def test_sum_examples(alpha53):
    s = davenport_sum([0] * 5, 5, alpha53)
    assert s.lo == 0
    s = davenport_sum([1], 1, alpha53)
    assert s.lo == alpha53.source


@given(st.fractions(min_value=0, max_value=1, max_denominator=10**8).filter(lambda x: x < 1))
def test_round_trip_interval_contains_beta(beta):
    e = NcfExpansion.periodic([], [5, 3])
    d = DavenportDigits(e, beta=beta)
    iv = davenport_sum(d, 40)
    assert iv.contains(beta)
    assert iv.width <= e.D(40)


@pytest.mark.parametrize("period", TEST_ALPHAS)
def test_generated_streams_are_valid(period):
    e = NcfExpansion.periodic([], period)
    rng = random.Random(11)
    for _ in range(20):
        beta = Fraction(rng.randrange(0, 10**12), 10**12)
        d = DavenportDigits(e, beta=beta)
        assert davenport_validate(d, e, 200)


def test_forbidden_block_detected(alpha53):
    # a_1 - 1, a_2 - 2, a_3 - 1 = 4, 1, 4
    assert find_forbidden_block([4, 1, 4], alpha53) == (1, 3)
    assert not davenport_validate([4, 1, 4], alpha53)
    assert not davenport_validate(DigitWord((4,), (1, 3)), alpha53)
    assert davenport_validate([4, 1, 3], alpha53)


def test_periodic_word_value_matches_digits(alpha53):
    w = DigitWord((2,), (1, 0))
    v = word_value(alpha53, w)
    d = DavenportDigits(alpha53, beta=v)
    assert d.digits(30) == w.digits(30)
    assert detect_word(d) == w


# -- canonical form ---------------------------------------------------------------------

def test_canonicalize_carries_tail(alpha53):
    # 2, a_2 - 1, a_3 - 2, a_4 - 2, ... equals 3, 0, 0, ...
    w = DigitWord((2, 2), (3, 1))
    assert davenport_canonicalize(w, alpha53) == [3]


def test_canonicalize_is_idempotent(alpha53):
    for digits in ([3, 2], [1, 0, 2], [4, 1, 3, 1]):
        once = davenport_canonicalize(digits, alpha53)
        assert once == digits
        assert davenport_canonicalize(once, alpha53) == once


def test_canonicalize_finite_block(alpha53):
    digits = [1, 2, 3, 2]  # 2, 3, 2 is a_2 - 1, a_3 - 2, a_4 - 1
    out = davenport_canonicalize(digits, alpha53)
    assert davenport_validate(out, alpha53)
    assert davenport_sum(out, len(digits) + 2, alpha53).lo == davenport_sum(digits, len(digits) + 2, alpha53).lo


def test_canonicalize_rejects_value_one(alpha53):
    with pytest.raises(NotCanonicalizable):
        davenport_canonicalize(DigitWord((4,), (1, 3)), alpha53)


@given(st.lists(st.integers(0, 4), min_size=1, max_size=10))
def test_digits_of_sum_recover_canonical_word(raw):
    e = NcfExpansion.periodic([], [5, 3])
    digits = [min(b, e.digit(k) - 1) for k, b in enumerate(raw, 1)]
    try:
        canon = davenport_canonicalize(digits, e)
    except NotCanonicalizable:
        return
    value = sum(b * e.D(k) for k, b in enumerate(digits, 1))
    assert DavenportDigits(e, beta=value).digits(len(canon)) == canon


# -- lattice points -------------------------------------------------------------------------

def test_lattice_examples(alpha53):
    assert lattice_point([1], alpha53) == (1, 0)
    assert lattice_point([3, 2], alpha53)[0] == 13
    pattern = [alpha53.digit(1) - 2, alpha53.digit(2) - 2, alpha53.digit(3) - 1]
    assert lattice_point(pattern, alpha53)[0] == alpha53.q(3) - 1


def test_zero_digits_have_no_lattice_point(alpha53):
    with pytest.raises(ZeroDigits):
        lattice_point([0, 0], alpha53)


@pytest.mark.parametrize("period", [[5, 3], [2, 3], [3, 2, 2]])
def test_lattice_bijection(period):
    e = NcfExpansion.periodic([], period)
    x = e.source
    for q in range(1, 10**4 + 1, 7):
        p = math.floor(q * x)
        d = DavenportDigits(e, beta=q * x - p)
        n = next(k for k in range(1, 200) if e.q(k) > q)
        assert d.residual(n) == 0
        assert d.finite_support is not None and d.finite_support <= n
        assert lattice_point(d) == (q, p)
        assert 0 < q * x - p < 1
