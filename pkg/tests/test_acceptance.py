"""Acceptance criteria 1-9, one PASS/FAIL line each (also repeated in the summary)."""

import random
import subprocess
import sys
import time
from fractions import Fraction

import mpmath
import pytest

from helpers import lambda_bound_violations, ostrowski_ok
from ncfray.cantor import Dissection, find_s0, product_window
from ncfray.expansions import (
    DavenportDigits,
    DigitWord,
    davenport_sum,
    davenport_validate,
    ostrowski,
    ostrowski_validate,
    word_value,
)
from ncfray.figure import cell_counts
from ncfray.hallray import fit_schedule, glue_beta, lambda_gap, ray_chain
from ncfray.ncf import NcfExpansion, structural_bounds
from ncfray.spectrum import FiniteSupport, mplus_oracle, mplus_truncated

RESULTS: dict = {}

A53 = NcfExpansion.periodic([], [5, 3])
A322 = NcfExpansion.periodic([], [3, 2, 2])


def report(n: int, ok: bool, detail: str) -> None:
    line = f"acceptance {n}: {'PASS' if ok else 'FAIL'} ({detail})"
    RESULTS[n] = line
    print(line)
    assert ok, line


@pytest.fixture(scope="module")
def s0_table():
    out = {}
    for name, a in (("<5,3>", A53), ("<3,2,2>", A322)):
        t = time.perf_counter()
        s0, tried = find_s0(a, depth=10)
        out[name] = (a, s0, tried, time.perf_counter() - t)
    return out


def test_1_oracle_contains_exact_periodic_value():
    rng = random.Random(2024)
    words: list = []
    while len(words) < 20:
        # period 2 keeps the joint period of both streams short
        pl = rng.randrange(0, 4)
        pre = tuple(rng.randrange(0, A53.digit(k)) for k in range(1, pl + 1))
        per = tuple(rng.randrange(0, A53.digit(k)) for k in range(pl + 1, pl + 3))
        w = DigitWord(pre, per)
        if any(per) and w not in words and davenport_validate(w, A53):
            words.append(w)
    t = time.perf_counter()
    hits = 0
    for w in words:
        est = mplus_truncated(w, A53)
        table = mplus_oracle(word_value(A53, w), A53, 10**6)
        hits += bool(est.method == "Exact-Periodic" and table.contains(est.lower))
    elapsed = time.perf_counter() - t
    report(1, hits == 20 and elapsed <= 60, f"{hits}/20 inside the q <= 1e6 bracket, {elapsed:.1f}s")


def test_2_lower_bound_never_violated():
    alphas = [NcfExpansion.periodic([], p) for p in
              ([3, 2, 2], [4, 2, 2, 2], [3, 2, 2, 2], [3, 2, 2, 2, 2], [5, 2, 2, 2, 2, 2])]
    rng = random.Random(22)
    pairs = bad = checked = 0
    while pairs < 200:
        a = rng.choice(alphas)
        beta = Fraction(rng.randrange(1, 10**9), 10**9 + 7)
        try:
            v, c = lambda_bound_violations(a, beta, 22)
        except FiniteSupport:
            continue
        pairs += 1
        bad += v
        checked += c
    report(2, bad == 0, f"{pairs} pairs, n <= 22, {checked} close candidates, {bad} violations")


def test_3_ostrowski_uniqueness():
    failures = 0
    for period in ([5, 3], [2, 3], [4]):
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
            if len(found.get(n, [])) != 1 or found[n][0] != ostrowski(n, e).coefficients:
                failures += 1
        for n in range(1, 10**5 + 1):
            exp = ostrowski(n, e)
            if exp.value() != n or not ostrowski_validate(exp.coefficients, e):
                failures += 1
    report(3, failures == 0, f"3 alphas, unique up to 500, greedy to 1e5, {failures} failures")


def test_4_davenport_round_trip():
    rng = random.Random(4)
    D60 = A53.D(60)
    failures = 0
    for _ in range(1000):
        beta = Fraction(rng.randrange(0, 10**12), 10**12)
        d = DavenportDigits(A53, beta=beta)
        iv = davenport_sum(d, 60)
        if not (iv.contains(beta) and iv.width <= D60 and davenport_validate(d, A53, 60)):
            failures += 1
    report(4, failures == 0, f"1000 rationals at depth 60, {failures} failures")


def test_5_hall_condition(s0_table):
    parts, ok = [], True
    for name, (_, s0, tried, secs) in s0_table.items():
        passing = tried.get(s0, {}) if s0 is not None else {}
        clean = s0 is not None and s0 <= 40 and all(r.ok and not r.violations for r in passing.values())
        pairs = sum(r.pairs_checked for r in passing.values())
        ok &= clean
        parts.append(f"{name} s0 = {s0} with {pairs} sibling pairs in {secs:.1f}s")
    report(5, ok, "; ".join(parts))


def test_6_product_window():
    w = product_window(1, 10)
    ok = (w.P2 == Fraction(511, 512) and w.P1 == Fraction(1, 2**20) / Fraction(511, 512) ** 2
          and w.P2 >= w.P1)
    report(6, ok, f"P1 = {w.P1}, P2 = {w.P2}")


def test_7_constructive_witness(s0_table):
    _, s0, _, _ = s0_table["<5,3>"]
    L = structural_bounds(expansion=A53).L
    r = s0 * L
    t = time.perf_counter()
    pair = fit_schedule(A53, r, s0)
    e = Dissection("E", pair.alpha_minus, s0).tree(0)[0].lower_word
    f = Dissection("F", pair.alpha_plus.shifted(r), s0).tree(0)[0].lower_word
    g = glue_beta(e, f, r, s0, pair)
    gaps = [lambda_gap(g, i, 1024) for i in range(5, 13)]
    bound = g.tail_bound(12, 1024)
    decreasing = all(b < a for a, b in zip(gaps, gaps[1:]))
    table = mplus_oracle(g.value(pair.K(12)), A53, 10**7)
    floor = min(row[2] for row in table.rows)
    with mpmath.workprec(1024):
        target = g.target().to_mpf(1024)
        oracle_ok = floor >= target - bound
    elapsed = time.perf_counter() - t
    ok = decreasing and gaps[-1] < bound and oracle_ok and elapsed <= 600
    report(7, ok, f"s = {s0}, r = {r}, gap(12) = {mpmath.nstr(gaps[-1], 3)} < bound "
                  f"{mpmath.nstr(bound, 3)}, oracle floor {floor:.4g} vs target "
                  f"{mpmath.nstr(target, 4)}, {elapsed:.1f}s")


def test_8_chain_overlap(s0_table):
    _, s0, _, _ = s0_table["<5,3>"]
    r0 = s0 * structural_bounds(expansion=A53).L
    links = ray_chain(A53, range(r0, r0 + 21))
    overlaps = all(link.overlaps_next for link in links)
    his = [link.hi for link in links]
    decreasing = all(b < a for a, b in zip(his, his[1:]))
    report(8, overlaps and decreasing, f"r in [{r0}, {r0 + 20}], overlaps {overlaps}, "
                                       f"right endpoints decreasing {decreasing}")


def test_9_figure_reproduction():
    lv1, lv2 = cell_counts(A53, 2)
    counts = ((lv1["long"], lv1["short"]) == (4, 1) and lv2["inLong"] == [2, 1]
              and lv2["inShort"] == [1, 1])
    argv = [sys.executable, "-m", "ncfray", "figure", "--alpha", "ncf:;5,3", "--levels", "2"]
    one = subprocess.run(argv, capture_output=True, check=True).stdout
    two = subprocess.run(argv, capture_output=True, check=True).stdout
    report(9, counts and one == two, f"4+1, then 2+1 in long and 1+1 in short, "
                                     f"identical bytes {one == two}")
