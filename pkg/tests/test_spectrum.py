import math
import random
from fractions import Fraction

import pytest

from helpers import dist_to_int, lambda_bound_violations
from ncfray.expansions import DavenportDigits, DigitWord, word_value
from ncfray.ncf import NcfExpansion
from ncfray.spectrum import (
    FiniteSupport,
    RegularAlpha,
    TargetUnreachable,
    adjust_digits_unbounded,
    homogeneous_constant,
    lambda_sharp,
    lambda_sharp_direct,
    mplus_oracle,
    mplus_truncated,
    regular_davenport_digits,
    zero_block_check,
    trace,
    two_sided,
    window_minimum,
)
from ncfray.numerics import Surd


def frac(x):
    return x - math.floor(x)


def random_betas(seed, count):
    rng = random.Random(seed)
    return [Fraction(rng.randrange(1, 10**12), 10**12) for _ in range(count)]


# -- trace ----------------------------------------------------------------------------

def test_lambda_and_rho_equal_direct_products_for_ones_word(alpha53):
    beta = word_value(alpha53, DigitWord((), (1,)))
    x = alpha53.source
    tr = trace(beta, alpha53, depth=30)
    for lv in tr.levels:
        assert lv.b == 1
        assert lv.lam == lv.Q * dist_to_int(lv.Q * x - beta)
        assert lv.rho == lv.Qp * dist_to_int(lv.Qp * x - beta)


@pytest.mark.parametrize("period", [[5, 3], [3, 2, 2], [2, 3]])
def test_trace_identities_on_random_betas(period):
    a = NcfExpansion.periodic([], period)
    x = a.source
    for beta in random_betas(5, 15):
        tr = trace(beta, a, depth=25)
        prev = None
        for lv in tr.levels:
            n = lv.n
            assert 0 <= lv.Q < a.q(n)
            assert (lv.Q >= a.q(n - 1)) == (lv.b != 0)
            # one-sided gaps: beta sits above Q alpha and below Q' alpha (mod 1)
            left, right = frac(beta - lv.Q * x), frac(lv.Qp * x - beta)
            assert lv.lam == lv.Q * left
            assert lv.rho == lv.Qp * right
            if left <= Fraction(1, 2):
                assert lv.lam == lv.Q * dist_to_int(lv.Q * x - beta)
            if right <= Fraction(1, 2):
                assert lv.rho == lv.Qp * dist_to_int(lv.Qp * x - beta)
            want_qp = lv.Q + a.q(n - 1) - (a.q(n) if lv.Q >= a.q(n) - a.q(n - 1) else 0)
            assert lv.Qp == want_qp
            if prev is not None:
                assert lv.Q >= prev.Q
                assert (lv.Q == prev.Q) == (lv.b == 0)
                if lv.b == 0:
                    assert lv.lam == prev.lam
                if lv.is_short:
                    assert lv.rho == prev.rho
            prev = lv


@pytest.mark.parametrize("period", [[5, 3], [3, 2, 2], [4, 2, 2, 2]])
def test_short_flag_matches_digit_block(period):
    a = NcfExpansion.periodic([], period)
    for beta in random_betas(9, 15):
        tr = trace(beta, a, depth=25)
        b = [lv.b for lv in tr.levels]
        for lv in tr.levels:
            n = lv.n
            block = any(
                b[m - 1] == a.digit(m) - 1 and all(b[t - 1] == a.digit(t) - 2 for t in range(m + 1, n + 1))
                for m in range(1, n + 1)
            )
            assert lv.is_short == block


@pytest.mark.parametrize("period", [[5, 3], [3, 2, 2], [2, 3]])
def test_lambda_and_rho_sandwiches(period):
    a = NcfExpansion.periodic([], period)
    for beta in random_betas(13, 10):
        tr = trace(beta, a, depth=40)
        b = [lv.b for lv in tr.levels]
        short = [lv.is_short for lv in tr.levels]
        for n in range(1, 30):
            if b[n - 1]:
                m = next((m for m in range(n + 1, 41) if b[m - 1]), None)
                if m is not None:
                    assert a.q(n - 1) * a.D(m) <= tr[n].lam < a.q(n) * a.D(m - 1)
            if not short[n - 1]:
                m = next((m for m in range(n + 1, 40) if not short[m - 1]), None)
                if m is None:
                    continue
                rho = tr[n].rho
                if m == n + 1:
                    lo = a.q(n - 1) * a.D(n + 1) * (1 - a.complete_quotient(n + 2))
                    hi = a.q(n) * a.D(n)
                else:
                    lo = a.q(n - 1) * a.D(m) * (1 - a.complete_quotient(m + 1))
                    hi = a.q(n) * a.D(m - 1) * (1 - a.complete_quotient(m))
                assert lo <= rho < hi


def test_lattice_point_beta_is_rejected(alpha53):
    beta = 13 * alpha53.source - 2
    with pytest.raises(FiniteSupport):
        trace(beta, alpha53, depth=10)


def test_scan_never_beats_level_minimum():
    a = NcfExpansion.periodic([], [3, 2, 2])
    for beta in random_betas(17, 5):
        bad, checked = lambda_bound_violations(a, beta, 18)
        assert bad == 0
        assert checked > 0


# -- estimates ------------------------------------------------------------------------

def test_lattice_point_routes_to_homogeneous(alpha53):
    est = mplus_truncated(13 * alpha53.source - 2, alpha53)
    assert est.detail["routed"] == "homogeneous"
    assert est.lower == homogeneous_constant(alpha53).lower


def test_homogeneous_golden():
    est = homogeneous_constant(Surd(-1, 1, 2, 5))
    assert est.exact
    assert est.lower == Surd(0, 1, 5, 5)


def test_periodic_word_gives_exact_value(alpha53):
    est = mplus_truncated(DigitWord((), (1,)), alpha53)
    assert est.method == "Exact-Periodic"
    assert est.lower == est.upper


@pytest.mark.parametrize("pre,period,beta", [
    ([2], [3], Fraction(1, 2)),
    ([], [5, 3], DigitWord((2,), (1, 0))),
    ([], [3, 2, 2], Fraction(2, 7)),
])
def test_exact_values_inside_oracle_bracket(pre, period, beta):
    a = NcfExpansion.periodic(pre, period)
    est = mplus_truncated(beta, a)
    assert est.exact
    value = word_value(a, beta) if isinstance(beta, DigitWord) else beta
    table = mplus_oracle(value, a, 10**6)
    assert table.contains(est.lower)


def test_long_joint_period_escapes_the_late_windows(alpha53):
    # the minimising phase of beta = 1/3 recurs every 12 levels: at q = 280 and
    # next near 1.3e9, so the late windows up to 1e6 never see it
    beta = Fraction(1, 3)
    est = mplus_truncated(beta, alpha53)
    tr = trace(beta, alpha53, depth=17)
    assert tr[5].Qp == 280 and tr[17].Qp > 10**9
    assert abs(float(tr[5].rho) - float(est.lower)) < 1e-7
    table = mplus_oracle(beta, alpha53, 10**6)
    early = next(r for r in table.rows if r[0] <= 280 < r[1])
    assert early[2] <= float(tr[5].rho) <= early[3]
    assert not table.contains(est.lower)


def test_golden_half():
    a = NcfExpansion.periodic([2], [3])
    est = mplus_truncated(Fraction(1, 2), a)
    assert est.lower == Surd(0, 1, 20, 5)


def test_formula_estimate_brackets_exact_value(alpha53):
    beta = Fraction(2, 9)
    exact = mplus_truncated(beta, alpha53)
    est = mplus_truncated(beta, alpha53, depth=60, detect=False)
    assert est.method == "Formula"
    assert est.lower <= exact.lower <= est.upper


def test_two_sided_is_min_of_branches(alpha53):
    for beta in (Fraction(1, 2), Fraction(1, 3), Fraction(5, 11)):
        both = two_sided(beta, alpha53, 40)
        plus = mplus_truncated(beta, alpha53, 40)
        minus = mplus_truncated(1 - beta, alpha53, 40)
        assert both.lower == min(plus.lower, minus.lower)
        assert both.lower <= plus.lower and both.lower <= minus.lower


def test_two_sided_on_lattice_point(alpha53):
    both = two_sided(13 * alpha53.source - 2, alpha53)
    assert both.detail["plus"]["routed"] == "homogeneous"
    # 1 - beta = 3 - 13 alpha has no finite expansion, yet its periodic word
    # gives back the homogeneous constant
    assert both.lower == homogeneous_constant(alpha53).lower


# -- oracle ---------------------------------------------------------------------------

def test_window_minimum_encloses_exact_minimum(alpha53):
    x = alpha53.source
    beta = Fraction(3, 7)
    A = x.fixed(64) % (1 << 64)
    B = math.floor(beta * (1 << 64))
    for lo, hi in [(1, 2), (2, 64), (64, 1000), (1000, 3000)]:
        got_lo, got_hi, _ = window_minimum(A, 1, B, 1, lo, hi)
        exact = min(q * dist_to_int(q * x - beta) for q in range(lo, hi))
        assert got_lo <= float(exact) <= got_hi


def test_golden_homogeneous_oracle():
    a = NcfExpansion.periodic([2], [3])
    table = mplus_oracle(Fraction(0), a, 10**6)
    assert table.contains(5 ** -0.5)
    assert all(r[3] >= 0.44 for r in table.rows[5:])


def test_oracle_rejects_rational_alpha():
    with pytest.raises(ValueError):
        mplus_oracle(Fraction(1, 3), Fraction(7, 10), 100)


def test_oracle_csv_columns(alpha53):
    table = mplus_oracle(Fraction(1, 3), alpha53, 1000)
    head = table.to_csv().splitlines()[0]
    assert head == "q_window_lo,q_window_hi,min_value_lo,min_value_hi"


# -- zero-block criterion -------------------------------------------------------------

def test_zero_digits_fail_criterion(alpha53):
    word = DigitWord((0,) * 400)
    assert not zero_block_check(DavenportDigits(alpha53, word=word), alpha53, 9, 1, [10, 40, 80])


def test_short_run_fails_criterion(alpha53):
    # ones everywhere except a zero block after each k, and one a-1, a-2 run of length N + s
    ks = [10, 40, 80]
    r, s = 9, 1
    digits = [1] * 120
    for k in ks:
        digits[k:k + r] = [0] * r
    assert zero_block_check(DavenportDigits(alpha53, word=DigitWord(tuple(digits))), alpha53, r, s, ks, depth=110)
    digits[60], digits[61] = alpha53.digit(61) - 1, alpha53.digit(62) - 2
    assert not zero_block_check(DavenportDigits(alpha53, word=DigitWord(tuple(digits))), alpha53, r, s, ks,
                                  depth=110)


def test_criterion_needs_long_zero_blocks(alpha53):
    with pytest.raises(ValueError):
        zero_block_check(DigitWord((), (1,)), alpha53, 5, 1, [10, 40])


# -- regular continued fraction machinery ----------------------------------------------

@pytest.fixture(scope="module")
def spiky():
    return RegularAlpha([1, 2, 3, 1, 10, 2, 1, 20, 1, 3, 40, 2, 1, 1, 2, 3])


def test_sharp_product_form_equals_direct(spiky):
    for beta in (Fraction(3, 7), Fraction(1, 5), Fraction(22, 97)):
        digits = regular_davenport_digits(beta, spiky)
        for n in range(1, len(digits) + 1):
            assert lambda_sharp(digits, spiky, n, beta) == lambda_sharp_direct(digits, spiky, n, beta)


def test_single_digit_is_homogeneous(spiky):
    digits = [1] + [0] * 10
    for n in range(1, 11):
        v = lambda_sharp(digits, spiky, n)
        x = spiky.D(1)
        assert v == dist_to_int(spiky.value - x)


def test_scaled_gap_bounds(spiky):
    m = max(spiky.digits)
    for n in range(1, len(spiky) - 1):
        v = spiky.q(n) * abs(spiky.D(n))
        assert Fraction(1, m + 2) < v < 1


def test_adjust_with_empty_schedule_is_identity(spiky):
    digits = regular_davenport_digits(Fraction(3, 7), spiky)
    assert adjust_digits_unbounded(digits, spiky, Fraction(1, 20), []) == digits


def test_adjust_lands_in_shrinking_windows(spiky):
    digits = regular_davenport_digits(Fraction(3, 7), spiky)
    c = Fraction(1, 20)
    out = adjust_digits_unbounded(digits, spiky, c, [5, 8, 11])
    beta = sum(b * spiky.D(k) for k, b in enumerate(out, start=1))
    for nk in (5, 8, 11):
        low = min(lambda_sharp(out, spiky, j, beta) for j in range(nk - 2, nk + 3))
        assert c <= low <= c + Fraction(2, spiky.a(nk))
    assert [i for i, (u, v) in enumerate(zip(digits, out), 1) if u != v] == [5, 8, 11]


def test_adjust_reports_unreachable(spiky):
    digits = regular_davenport_digits(Fraction(3, 7), spiky)
    with pytest.raises(TargetUnreachable):
        adjust_digits_unbounded(digits, spiky, Fraction(5), [5])
