"""Explicit points of the spectrum and the chain of intervals reaching zero.

Along a schedule ``K(i)`` with growing gaps the windows of partial quotients
around ``K(i)`` stabilise to two periodic streams ``alpha-`` (read backwards)
and ``alpha+`` (read forwards). Gluing the digits of ``e`` (backwards) and
of ``0^r f`` (forwards) into those windows yields a ``beta`` whose
``lambda_{K(i)}`` converge to ``e f D+_r / (1 - alpha- alpha+)``.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional, Sequence, Union

import mpmath

from .cantor import membership_E, membership_F, product_window
from .expansions import DavenportDigits, DigitWord, davenport_validate, word_value
from .ncf import NcfExpansion, structural_bounds
from .numerics import Interval, NumericsError, Surd, to_iv
from .spectrum import mplus_oracle, zero_block_check

__all__ = [
    "NotEventuallyPeriodic",
    "ScheduleTooTight",
    "InvalidEF",
    "LimitPair",
    "GluedBeta",
    "ChainLink",
    "limit_pair",
    "fit_schedule",
    "glue_beta",
    "ray_chain",
    "chain_start",
    "chain_coverage",
    "hallray_report",
    "verify_glued",
    "lambda_gap",
]


class NotEventuallyPeriodic(NumericsError):
    pass


class ScheduleTooTight(NumericsError):
    pass


class InvalidEF(NumericsError):
    pass


# -- limit quotients -----------------------------------------------------------

@dataclass
class LimitPair:
    """Schedule ``K(i)`` together with the limiting streams around it."""

    alpha: NcfExpansion
    schedule: Callable[[int], int] = field(repr=False)
    alpha_minus: NcfExpansion
    alpha_plus: NcfExpansion
    phase: int
    explicit: Optional[tuple] = None

    def K(self, i: int) -> int:
        return self.schedule(i)

    def k_schedule(self, i_max: int) -> list[int]:
        """``K(1), ..., K(i_max)``."""
        return [self.K(i) for i in range(1, i_max + 1)]

    def d_plus(self, k: int):
        return self.alpha_plus.D(k)

    def d_minus(self, k: int):
        return self.alpha_minus.D(k)

    @property
    def scale(self):
        """``1 / (1 - alpha- alpha+)``, the limit of ``q_{K(i)} D_{K(i)}``."""
        return 1 / (1 - self.alpha_minus.source * self.alpha_plus.source)

    def to_json(self, i_max: int = 8) -> dict:
        return {
            "alpha": self.alpha.describe(),
            "K": self.k_schedule(i_max),
            "alphaMinus": self.alpha_minus.describe(),
            "alphaPlus": self.alpha_plus.describe(),
            "scale": str(float(self.scale)),
        }


def limit_pair(alpha: NcfExpansion, schedule: Union[None, Sequence[int], Callable[[int], int]] = None,
               *, scale: int = 1, phase: int = 0) -> LimitPair:
    """Limit streams ``alpha-`` and ``alpha+`` for a phase-aligned schedule.

    By default ``K(i) = pre + phase + P * scale * i (i + 3)`` with ``P`` the
    period length, so every ``K(i)`` sits at the same period phase past the
    preperiod. An explicit list (or callable) must respect that alignment.
    """
    if not alpha.is_periodic:
        raise NotEventuallyPeriodic("limit streams are only computed for periodic alpha")
    pre, per = list(alpha.preperiod), list(alpha.period)
    P = len(per)
    explicit = None
    if schedule is None:
        if scale < 1:
            raise ValueError("scale must be >= 1")
        base = len(pre) + phase % P

        def sched(i, base=base, step=P * scale):
            return base + step * i * (i + 3)
    elif callable(schedule):
        sched = schedule
    else:
        explicit = tuple(int(k) for k in schedule)
        if len(explicit) < 2:
            raise ValueError("an explicit schedule needs at least two indices")
        gaps = [b - a for a, b in zip(explicit, explicit[1:])]
        if any(g2 <= g1 for g1, g2 in zip(gaps, gaps[1:])) or any(g <= 0 for g in gaps):
            raise ValueError("schedule gaps must be strictly increasing")

        def sched(i, ks=explicit):
            if not 1 <= i <= len(ks):
                raise IndexError(f"explicit schedule has no K({i})")
            return ks[i - 1]
    k1, k2 = sched(1), sched(2)
    if k1 < len(pre) or k2 < len(pre):
        raise ValueError("schedule must start past the preperiod")
    ph = (k1 - len(pre)) % P
    if (k2 - len(pre)) % P != ph or (explicit and any((k - len(pre)) % P != ph for k in explicit)):
        raise ValueError("schedule indices must share one period phase")
    # a+_j = a_{K+j}, a-_j = a_{K-j+1}, read inside the periodic part
    plus = per[ph:] + per[:ph]
    rev = [per[(ph - j) % P] for j in range(1, P + 1)]
    return LimitPair(
        alpha=alpha,
        schedule=sched,
        alpha_minus=NcfExpansion.periodic([], rev),
        alpha_plus=NcfExpansion.periodic([], plus),
        phase=ph,
        explicit=explicit,
    )


def fit_schedule(alpha: NcfExpansion, r: int, s: int, *, first_index: int = 5,
                 phase: int = 0, max_scale: int = 10_000) -> LimitPair:
    """Smallest default schedule whose windows fit ``r`` zeros from ``first_index`` on."""
    sb = structural_bounds(expansion=alpha)
    P = len(alpha.period)
    need = 3 * (r + s + 2) + 3 * (sb.N + 2 * s + 4)
    i = first_index
    scale = max(1, -(-need // (P * (2 * i + 4))))
    if scale > max_scale:
        raise ScheduleTooTight(f"windows need a scale of {scale}")
    return limit_pair(alpha, scale=scale, phase=phase)


# -- the glued digit stream ------------------------------------------------------

def _as_word(x, name: str) -> DigitWord:
    if isinstance(x, DigitWord):
        return x
    if isinstance(x, DavenportDigits) and x.word is not None:
        return x.word
    if isinstance(x, (list, tuple)):
        return DigitWord(tuple(x), ())
    raise TypeError(f"{name} must be a DigitWord or a digit list")


@dataclass
class GluedBeta:
    """Digits of ``beta`` built from ``e`` and ``f`` around each ``K(i)``."""

    digits: DavenportDigits
    pair: LimitPair
    e_word: DigitWord
    f_word: DigitWord
    r: int
    s: int
    i0: int
    windows: list = field(default_factory=list)  # (K, u, v, w) for i = i0, i0+1, ...
    _target_bits: Optional[float] = field(default=None, repr=False)

    # windows ------------------------------------------------------------
    def window(self, i: int) -> tuple[int, int, int, int]:
        if i < self.i0:
            raise IndexError(f"no window before i0 = {self.i0}")
        while len(self.windows) <= i - self.i0:
            j = self.i0 + len(self.windows)
            self.windows.append(_place_window(self.pair, self.e_word, self.f_word, self.r, j))
        return self.windows[i - self.i0]

    def schedule_rows(self, i_max: int) -> list[tuple[int, int, int, int]]:
        return [self.window(i) for i in range(self.i0, i_max + 1)]

    # values ------------------------------------------------------------------
    @property
    def alpha(self) -> NcfExpansion:
        return self.pair.alpha

    def _sums(self, lo: int, hi: int) -> tuple[int, int]:
        """``sum b_k q_{k-1}`` and ``sum b_k p_{k-1}`` over ``lo < k <= hi``."""
        a = self.alpha
        Qs = Ps = 0
        for k in range(lo + 1, hi + 1):
            b = self.digits.digit(k)
            if b:
                p, q = a.convergent(k - 1)
                Qs += b * q
                Ps += b * p
        return Qs, Ps

    def _tail_depth(self, K: int, bits: int) -> int:
        # D+ decays geometrically; stop once the remaining tail is 2**-bits
        # below the size of the target itself
        P = len(self.alpha.period)
        per_digit = -math.log2(float(self.pair.alpha_plus.D(P))) / P
        if self._target_bits is None:
            self._target_bits = max(0.0, -math.log2(float(self.target())))
        return K + int((bits + self._target_bits) / per_digit) + 8

    def value(self, depth: int) -> Interval:
        """Enclosure ``[sum_{k<=depth} b_k D_k, + D_depth]`` of ``beta``."""
        a = self.alpha
        Qs, Ps = self._sums(0, depth)
        x = a.source
        lo = Qs * x - Ps
        p, q = a.convergent(depth - 1)
        return Interval(lo, lo + (q * x - p))

    def target(self) -> Surd:
        """``e f D+_r / (1 - alpha- alpha+)``, exact."""
        return self.e_value() * self.f_value() * self.pair.d_plus(self.r) * self.pair.scale

    def e_value(self):
        return word_value(self.pair.alpha_minus, self.e_word)

    def f_value(self):
        return word_value(self.pair.alpha_plus.shifted(self.r), self.f_word)

    def beta_plus(self):
        return self.f_value() * self.pair.d_plus(self.r)

    def lambda_at(self, i: int, prec: int = 400):
        """Certified ``mpmath.iv`` enclosure of ``lambda_{K(i)} = Q_K sum_{k>K} b_k D_k``."""
        K = self.pair.K(i)
        a = self.alpha
        QK, _ = self._sums(0, K)
        T = self._tail_depth(K, prec)
        Qs, Ps = self._sums(K, T)
        x = a.source
        lo = QK * (Qs * x - Ps)
        p, q = a.convergent(T - 1)
        hi = lo + QK * (q * x - p)
        lo_iv, hi_iv = to_iv(lo, prec), to_iv(hi, prec)
        return mpmath.iv.mpf([lo_iv.a, hi_iv.b])

    def limit_factors(self, i: int, prec: int = 400) -> dict:
        """The three factors ``Q_K/q_K``, ``q_K D_K`` and ``beta_{K+1}`` as floats."""
        K = self.pair.K(i)
        a = self.alpha
        QK, _ = self._sums(0, K)
        p, q = a.convergent(K)
        pm, qm = a.convergent(K - 1)
        x = a.source
        with mpmath.workprec(prec):
            DK = (qm * x - pm).to_mpf(prec)
            T = self._tail_depth(K, prec)
            Qs, Ps = self._sums(K, T)
            tail = (Qs * x - Ps).to_mpf(prec)
            return {
                "Q_over_q": mpmath.mpf(QK) / q,
                "qD": q * DK,
                "beta_tail": tail / DK,
            }

    def tail_bound(self, i: int, prec: int = 400):
        """Bound on ``|lambda_{K(i)} - target|`` from the depth of the stable windows.

        With ``X = Q_K/q_K``, ``Y = q_K D_K``, ``Z = beta_{K+1}`` and their
        limits ``x = e``, ``y = 1/(1 - alpha- alpha+)``, ``z = f D+_r`` the
        gap is at most ``|X-x| Y + x |Y-y| + x y |Z-z|`` since ``Z < 1``.
        Only the first ``m`` backward and ``u - K`` forward digits agree with
        their limits, which bounds each difference.
        """
        K, u, _, _ = self.window(i)
        a = self.alpha
        M = structural_bounds(expansion=a).M
        m = K - self.window(i - 1)[2] + 1 if i > self.i0 else 0
        with mpmath.workprec(prec):
            x = _mpf(self.e_value(), prec)
            y = self.pair.scale.to_mpf(prec)
            am = self.pair.alpha_minus
            ap = self.pair.alpha_plus.source.to_mpf(prec)
            qK, qK1 = a.q(K), a.q(K - 1)
            rev_K = mpmath.mpf(qK1) / qK
            dK = abs(rev_K - am.source.to_mpf(prec))
            Y = 1 / (1 - rev_K * ap)
            dY = ap * dK * Y * y
            if m:
                rev_m = mpmath.mpf(a.q(K - m)) / a.q(K - m + 1)
                dm = abs(rev_m - am.complete_quotient(m).to_mpf(prec))
                dX = (mpmath.mpf(a.q(K - m)) / qK + _mpf(am.D(m), prec)
                      + x * mpmath.expm1(m * M * dm))
            else:
                dX = mpmath.mpf(1) + x
            dZ = _mpf(self.pair.d_plus(u - K), prec)
            return max(Y, y) * dX + x * dY + x * y * dZ

    def to_json(self, n: int = 40) -> dict:
        return {
            "alpha": self.alpha.describe(),
            "r": self.r,
            "s": self.s,
            "i0": self.i0,
            "e": self.e_word.to_json(),
            "f": self.f_word.to_json(),
            "windows": [list(w) for w in self.windows],
            "digits": self.digits.digits(n),
        }


def _mpf(v, prec):
    if isinstance(v, Surd):
        return v.to_mpf(prec)
    return mpmath.mpf(Fraction(v).numerator) / Fraction(v).denominator


def _endpoints(x):
    """Plain ``mpf`` endpoints of an ``mpmath.iv`` interval."""
    return mpmath.mpf(x.a), mpmath.mpf(x.b)


def lambda_gap(glued: "GluedBeta", i: int, prec: int = 1024):
    """Certified upper bound on ``|lambda_{K(i)} - target|``."""
    with mpmath.workprec(prec + 64):
        t = glued.target().to_mpf(prec + 64)
        lo, hi = _endpoints(glued.lambda_at(i, prec))
        return max(abs(lo - t), abs(hi - t))


def _place_window(pair: LimitPair, e: DigitWord, f: DigitWord, r: int, i: int):
    """``(K(i), u(i), v(i), w(i))`` or :class:`ScheduleTooTight`."""
    a = pair.alpha
    N = structural_bounds(expansion=a).N
    K, K2 = pair.K(i), pair.K(i + 1)
    gap = K2 - K
    u = K + gap // 3
    v = K2 - gap // 3
    if u - K <= r:
        raise ScheduleTooTight(f"window {i}: {u - K} digits cannot hold {r} zeros and f")
    # b_u = f_{u-K-r} and b_v = e_{K2-v+1} must be nonzero
    while f.digit(u - K - r) == 0:
        u += 1
        if u + N >= v:
            raise ScheduleTooTight(f"window {i}: f has no nonzero digit before v")
    while e.digit(K2 - v + 1) == 0:
        v -= 1
        if u + N >= v:
            raise ScheduleTooTight(f"window {i}: e has no nonzero digit after u")
    w = next((j for j in range(u + 1, u + N + 1) if a.digit(j) >= 3), None)
    if w is None or w >= v:
        raise ScheduleTooTight(f"window {i}: no partial quotient >= 3 in (u, u+N]")
    return K, u, v, w


def glue_beta(e, f, r: int, s: int, pair: LimitPair, *, i0: Optional[int] = None,
              scan_depth: int = 100, max_i0: int = 60) -> GluedBeta:
    """Glue ``e`` (over ``alpha-``) and ``f`` (over ``alpha+_{r+1}``) into one ``beta``."""
    a = pair.alpha
    sb = structural_bounds(expansion=a)
    if s < sb.N:
        raise ValueError(f"s = {s} below N = {sb.N}")
    if r < s * sb.L:
        raise ValueError(f"r = {r} below s L = {s * sb.L}")
    e_word, f_word = _as_word(e, "e"), _as_word(f, "f")
    if not membership_E(e_word.digits(scan_depth), pair.alpha_minus, s, scan_depth):
        raise InvalidEF("e is not in E(alpha-, s)")
    f_alpha = pair.alpha_plus.shifted(r)
    if not membership_F(f_word.digits(scan_depth), f_alpha, s, scan_depth):
        raise InvalidEF("f is not in F(alpha+_{r+1}, s)")
    if i0 is None:
        i0 = 1
        while True:
            try:
                _place_window(pair, e_word, f_word, r, i0)
                _place_window(pair, e_word, f_word, r, i0 + 1)
                break
            except ScheduleTooTight:
                i0 += 1
                if i0 > max_i0:
                    raise
    glued = GluedBeta(digits=None, pair=pair, e_word=e_word, f_word=f_word, r=r, s=s, i0=i0)
    glued.window(i0)
    starts: list[int] = []

    def digit(j: int) -> int:
        K0 = pair.K(i0)
        if j <= K0:
            return 0
        while not starts or pair.K(i0 + len(starts)) < j:
            starts.append(pair.K(i0 + len(starts)))
        i = i0 + bisect.bisect_left(starts, j) - 1
        K, u, v, w = glued.window(i)
        K2 = pair.K(i + 1)
        if j <= u:
            t = j - K
            return 0 if t <= r else f_word.digit(t - r)
        if j >= v:
            return e_word.digit(K2 - j + 1)
        aj = a.digit(j)
        return aj - 3 if j == w else aj - 2

    glued.digits = DavenportDigits(a, digit_fn=digit)
    return glued


def verify_glued(glued: GluedBeta, i_max: int) -> dict:
    """Digit validity and the zero-block criterion up to ``K(i_max)``."""
    depth = glued.pair.K(i_max)
    digits = glued.digits.digits(depth)
    valid = davenport_validate(digits, glued.alpha)
    ks = [glued.pair.K(i) for i in range(glued.i0, i_max + 1)]
    zero_block = zero_block_check(DavenportDigits(glued.alpha, word=DigitWord(tuple(digits), ())),
                                    glued.alpha, glued.r, glued.s, ks, depth=depth)
    return {"valid": bool(valid), "zeroBlocks": bool(zero_block), "depth": depth}


# -- the chain of intervals -------------------------------------------------------

@dataclass(frozen=True)
class ChainLink:
    r: int
    s: int
    lo: object
    hi: object
    overlaps_next: bool

    def to_json(self, digits: int = 20) -> dict:
        return {
            "r": self.r,
            "s": self.s,
            "lo": mpmath.nstr(_mpf(self.lo, 4 * digits + 64), digits),
            "hi": mpmath.nstr(_mpf(self.hi, 4 * digits + 64), digits),
            "overlapsNext": self.overlaps_next,
        }


def chain_start(alpha: NcfExpansion, s0: int) -> int:
    """Smallest integer ``r0 >= s0 L``."""
    return s0 * structural_bounds(expansion=alpha).L


def ray_chain(alpha: NcfExpansion, r_range, pair: Optional[LimitPair] = None) -> list[ChainLink]:
    """Intervals ``[P1, P2] D+_r / (1 - alpha- alpha+)`` for each ``r`` with overlap flags."""
    if pair is None:
        pair = limit_pair(alpha)
    sb = structural_bounds(expansion=alpha)
    N, L = sb.N, sb.L
    rs = list(r_range)
    ap = pair.alpha_plus
    links = []
    for r in rs:
        s = r // L
        s2 = (r + 1) // L
        w, w2 = product_window(N, s), product_window(N, s2)
        k = pair.scale * pair.d_plus(r)
        nxt = ap.complete_quotient(r + 1)
        overlap = (w2.P1 * nxt <= w.P2) and (w.P1 <= w2.P2 * nxt)
        links.append(ChainLink(r, s, w.P1 * k, w.P2 * k, bool(overlap)))
    return links


def chain_coverage(links: Sequence[ChainLink]) -> Optional[tuple]:
    """``(lo, hi)`` covered without holes by the chain, or ``None`` on a break."""
    if not links:
        return None
    for a, b in zip(links, links[1:]):
        if not a.overlaps_next or b.r != a.r + 1:
            return None
    return links[-1].lo, links[0].hi


# -- report ---------------------------------------------------------------------------

def hallray_report(glued: GluedBeta, i_range: Sequence[int], *, oracle_qmax: int = 0,
                   chain: Optional[Sequence[ChainLink]] = None, prec: int = 400,
                   digits: int = 25) -> dict:
    """JSON report: target, ``lambda_{K(i)}`` trace, oracle bracket and chain."""
    target = glued.target()
    with mpmath.workprec(prec):
        t = target.to_mpf(prec)
        trace = []
        for i in i_range:
            lo, hi = _endpoints(glued.lambda_at(i, prec))
            gap = max(abs(lo - t), abs(hi - t))
            bound = glued.tail_bound(i, prec)
            trace.append({
                "i": i,
                "K": glued.pair.K(i),
                "lo": mpmath.nstr(lo, digits),
                "hi": mpmath.nstr(hi, digits),
                "gap": mpmath.nstr(gap, 6),
                "bound": mpmath.nstr(bound, 6),
            })
        out = {"target": mpmath.nstr(t, digits), "lambdaTrace": trace}
    if oracle_qmax:
        table = mplus_oracle(glued.value(glued.pair.K(i_range[-1])), glued.alpha, oracle_qmax)
        out["oracleBracket"] = {
            "qmax": oracle_qmax,
            "minLower": min(row[2] for row in table.rows),
            "liminfLo": table.liminf_lo,
            "liminfHi": table.liminf_hi,
        }
    if chain is not None:
        out["chain"] = [link.to_json() for link in chain]
    return out
