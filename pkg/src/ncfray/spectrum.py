"""One-sided inhomogeneous approximation constants.

``M+(alpha, beta) = liminf q ||q alpha - beta||`` is computed three ways:

* exactly, when ``alpha`` and the Davenport digits of ``beta`` are
  eventually periodic (per-phase limits of ``lambda_n`` and ``rho_n``);
* as a truncated estimate from a finite trace;
* by brute force over ``q`` with certified 64-bit fixed point enclosures.

The regular continued fraction machinery at the end handles the
unbounded-quotient construction on finite digit streams.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence, Union

import numpy as np

from .expansions import (
    DavenportDigits,
    DigitWord,
    detect_word,
    find_forbidden_block,
    word_tail_value,
    word_value,
)
from .ncf import NcfExpansion, structural_bounds
from .numerics import Interval, NumericsError, RealHandle, Surd, as_exact

log = logging.getLogger(__name__)

__all__ = [
    "ApproxTrace",
    "TraceLevel",
    "SpectrumEstimate",
    "OracleTable",
    "FiniteSupport",
    "TargetUnreachable",
    "trace",
    "periodic_limits",
    "mplus_truncated",
    "homogeneous_constant",
    "mplus_oracle",
    "window_minimum",
    "two_sided",
    "zero_block_check",
    "theorem98967_check",
    "RegularAlpha",
    "regular_davenport_digits",
    "lambda_sharp",
    "lambda_sharp_direct",
    "adjust_digits_unbounded",
]


class FiniteSupport(NumericsError):
    """``beta = q alpha - p``: the homogeneous constant applies instead."""


class TargetUnreachable(NumericsError):
    pass


# -- trace -------------------------------------------------------------------

@dataclass(frozen=True)
class TraceLevel:
    n: int
    b: int
    Q: int
    Qp: int
    lam: object
    rho: object
    is_short: bool


@dataclass
class ApproxTrace:
    alpha: NcfExpansion
    levels: list[TraceLevel]

    def __getitem__(self, n: int) -> TraceLevel:
        return self.levels[n - 1]

    def __len__(self):
        return len(self.levels)

    def lambdas(self) -> list:
        return [lv.lam for lv in self.levels]

    def rhos(self) -> list:
        return [lv.rho for lv in self.levels]

    def to_json(self) -> list[dict]:
        return [
            {"n": lv.n, "b": lv.b, "Q": lv.Q, "Qprime": lv.Qp,
             "lambda": _dec(lv.lam), "rho": _dec(lv.rho), "short": lv.is_short}
            for lv in self.levels
        ]


def _dec(v, digits: int = 20) -> str:
    if isinstance(v, Surd):
        return v.decimal(digits)
    if isinstance(v, Fraction):
        return Surd.coerce(v).decimal(digits)
    return str(v)


def _as_digits(beta, alpha: Optional[NcfExpansion]) -> DavenportDigits:
    if isinstance(beta, DavenportDigits):
        return beta
    if isinstance(beta, DigitWord):
        return DavenportDigits(alpha, word=beta)
    return DavenportDigits(alpha, beta=beta)


def trace(beta, alpha: Optional[NcfExpansion] = None, depth: int = 30) -> ApproxTrace:
    """Levels ``1..depth`` of ``Q_n, Q'_n, lambda_n, rho_n`` with exact values."""
    d = _as_digits(beta, alpha)
    alpha = d.alpha
    if d.finite_support is not None or (d.beta is not None and not isinstance(d.beta, Interval)
                                        and d.residual(depth) == 0):
        raise FiniteSupport("beta is a lattice point q alpha - p")
    levels = []
    Q = 0
    for n in range(1, depth + 1):
        b = d.digit(n)
        qn, qm = alpha.q(n), alpha.q(n - 1)
        Q += b * qm
        short = Q >= qn - qm
        Qp = Q + qm - qn if short else Q + qm
        Dn = alpha.D(n)
        resid = d.residual(n)
        lam = Q * Dn * resid
        if short:
            rho = Qp * Dn * (1 - alpha.complete_quotient(n + 1) - resid)
        else:
            rho = Qp * Dn * (1 - resid)
        levels.append(TraceLevel(n, b, Q, Qp, lam, rho, short))
    return ApproxTrace(alpha, levels)


# -- estimates ---------------------------------------------------------------

@dataclass
class SpectrumEstimate:
    lower: object
    upper: object
    depth_used: int
    method: str  # "Formula", "Oracle" or "Exact-Periodic"
    detail: dict = field(default_factory=dict)

    @property
    def exact(self) -> bool:
        return self.method == "Exact-Periodic"

    def to_json(self, digits: int = 20) -> dict:
        out = {
            "lower": _dec(self.lower, digits),
            "upper": _dec(self.upper, digits),
            "depthUsed": self.depth_used,
            "method": self.method,
        }
        if self.exact:
            out["exact"] = str(self.lower)
        out.update(self.detail)
        return out


def periodic_limits(alpha: NcfExpansion, word: DigitWord) -> list[dict]:
    """Per-phase limits of ``lambda_n`` and ``rho_n`` for periodic inputs.

    Along a phase ``n`` of the joint period, ``Q_n/q_n`` tends to the
    reversed-digit value ``beta-`` over ``alpha- = <a_n, a_{n-1}, ...>``,
    ``q_n D_n`` to ``1/(1 - alpha- alpha+)`` and ``beta_{n+1}`` is the exact
    tail ``beta+``.
    """
    if not alpha.is_periodic or not word.period:
        raise NumericsError("periodic limits need periodic alpha and digits")
    P = math.lcm(len(alpha.period), len(word.period))
    m0 = max(len(alpha.preperiod), len(word.prefix))
    base = m0 + 2 * P + 1
    Q = 0
    for k in range(1, base):
        Q += word.digit(k) * alpha.q(k - 1)
    out = []
    cache: dict = {}
    for n in range(base, base + P):
        Q += word.digit(n) * alpha.q(n - 1)
        short = Q >= alpha.q(n) - alpha.q(n - 1)
        back = range(n, n - P, -1)
        a_minus = NcfExpansion.periodic((), [alpha.digit(j) for j in back])
        beta_minus = word_value(a_minus, DigitWord((), [word.digit(j) for j in back]))
        am = a_minus.source
        ap = alpha.complete_quotient(n + 1)
        beta_plus = word_tail_value(alpha, word, n, cache)
        denom = 1 - am * ap
        lam = beta_minus * beta_plus / denom
        if short:
            rho = (beta_minus + am - 1) * (1 - ap - beta_plus) / denom
        else:
            rho = (beta_minus + am) * (1 - beta_plus) / denom
        out.append({"phase": (n - m0 - 1) % P, "n": n, "short": short,
                    "alphaMinus": am, "alphaPlus": ap,
                    "betaMinus": beta_minus, "betaPlus": beta_plus,
                    "lambda": lam, "rho": rho})
    return out


def _regular_period(x: Surd, max_steps: int = 2000):
    """Regular continued fraction ``[0; pre, period...]`` of a surd in (0, 1)."""
    seen: dict = {}
    digits: list[int] = []
    for i in range(max_steps):
        if x in seen:
            j = seen[x]
            return digits[:j], digits[j:]
        seen[x] = i
        y = 1 / x
        a = y.floor()
        digits.append(a)
        x = y - a
        if x == 0:
            return None
    return None


def homogeneous_constant(alpha: Union[NcfExpansion, RealHandle], depth: int = 60) -> SpectrumEstimate:
    """``M+(alpha, 0) = liminf q ||q alpha||`` from the regular continued fraction.

    For a quadratic ``alpha`` this is the minimum over phases of
    ``1/([a_{n+1}; a_{n+2}, ...] + [0; a_n, a_{n-1}, ...])`` with both
    continued fractions taken periodically.
    """
    from .numerics import surd_from_periodic_rcf

    x = alpha.source if isinstance(alpha, NcfExpansion) else as_exact(alpha)
    if isinstance(x, Surd) and not x.is_rational:
        desc = _regular_period(x)
        if desc is not None:
            pre, period = desc
            P = len(period)
            vals = []
            for j in range(P):
                fwd = period[j:] + period[:j]
                back = [period[(j - 1 - t) % P] for t in range(P)]
                xj = fwd[0] + surd_from_periodic_rcf((), fwd[1:] + fwd[:1])
                yj = surd_from_periodic_rcf((), back)
                vals.append(1 / (xj + yj))
            v = min(vals)
            return SpectrumEstimate(v, v, len(pre) + P, "Exact-Periodic",
                                    {"regularPeriod": list(period)})
    if isinstance(x, Fraction) or (isinstance(x, Surd) and x.is_rational):
        raise NumericsError("alpha must be irrational")
    # bounded-depth estimate from regular convergents
    lo, hi = (x.lo, x.hi) if isinstance(x, Interval) else (x, x)
    vals = []
    for v in (lo, hi):
        v = Fraction(v) if not isinstance(v, Surd) else v
        p0, q0, p1, q1 = 0, 1, 1, 0
        y = v
        seq = []
        for _ in range(depth):
            if y == 0:
                break
            y = 1 / y
            a = math.floor(y) if not isinstance(y, Surd) else y.floor()
            y = y - a
            p0, p1 = p1, a * p1 + p0
            q0, q1 = q1, a * q1 + q0
            seq.append(q1 * abs(q1 * v - p1))
        vals.append(min(seq[len(seq) // 2:]) if seq else Fraction(0))
    return SpectrumEstimate(min(vals), max(vals), depth, "Formula")


def mplus_truncated(beta, alpha: Optional[NcfExpansion] = None, depth: int = 60,
                    *, detect: bool = True) -> SpectrumEstimate:
    """Estimate ``M+(alpha, beta)``; exact when both digit streams are periodic."""
    d = _as_digits(beta, alpha)
    alpha = d.alpha
    if d.finite_support is not None:
        est = homogeneous_constant(alpha)
        est.detail["routed"] = "homogeneous"
        return est
    if d.beta is not None and not isinstance(d.beta, Interval):
        if d.beta == 0:
            est = homogeneous_constant(alpha)
            est.detail["routed"] = "homogeneous"
            return est
    word = None
    if alpha.is_periodic and detect:
        word = d.word if d.word is not None else detect_word(d, max_steps=max(depth, 400))
    if word is not None and word.finite_support is not None:
        est = homogeneous_constant(alpha)
        est.detail["routed"] = "homogeneous"
        return est
    if word is not None:
        if find_forbidden_block(word, alpha) is not None:
            raise NumericsError("digit word is not a valid Davenport expansion")
        phases = periodic_limits(alpha, word)
        v = min(min(p["lambda"], p["rho"]) for p in phases)
        return SpectrumEstimate(v, v, phases[-1]["n"], "Exact-Periodic",
                                {"word": word.to_json(), "phases": len(phases)})
    tr = trace(d, depth=depth)
    lo_n = max(1, depth // 2)
    window = tr.levels[lo_n - 1:]
    mins = [min(lv.lam, lv.rho) for lv in window]
    upper = min(mins)
    half = len(mins) // 2
    m1, m2 = min(mins[:half] or mins), min(mins[half:])
    # heuristic: spread between the two halves plus the level-depth scale
    slack = abs(m1 - m2) + alpha.q(depth) * alpha.D(depth) * alpha.D(lo_n)
    return SpectrumEstimate(upper - slack, upper, depth, "Formula")


def two_sided(beta, alpha: NcfExpansion, depth: int = 60) -> SpectrumEstimate:
    """``M(alpha, beta) = min(M+(alpha, beta), M+(alpha, -beta))``."""
    d = _as_digits(beta, alpha)
    if d.beta is not None:
        value = d.beta
    else:
        value = d.value()
    minus = (1 - value) if value != 0 else value
    if isinstance(minus, Surd) and minus >= 1:
        minus = minus - 1
    e1 = mplus_truncated(d, alpha, depth)
    e2 = mplus_truncated(minus, alpha, depth)
    method = "Exact-Periodic" if e1.exact and e2.exact else "Formula"
    return SpectrumEstimate(min(e1.lower, e2.lower), min(e1.upper, e2.upper),
                            max(e1.depth_used, e2.depth_used), method,
                            {"plus": e1.to_json(), "minus": e2.to_json()})


# -- brute-force oracle ---------------------------------------------------------

_SHIFT = 64
_REL = 2.0 ** -48  # float64 rounding slack on the final product


def _fixed64(v) -> tuple[int, int]:
    """``(A, E)`` with ``v * 2**64`` in ``[A, A + E]``."""
    if isinstance(v, NcfExpansion):
        v = v.source
    if isinstance(v, Interval):
        A = math.floor(_frac(v.lo) * (1 << _SHIFT))
        top = math.ceil(_frac(v.hi) * (1 << _SHIFT))
        return A % (1 << _SHIFT), top - A
    v = as_exact(v)
    if isinstance(v, Surd):
        A = v.fixed(_SHIFT)
    else:
        A = math.floor(v * (1 << _SHIFT))
    return A % (1 << _SHIFT), 1


def _frac(v):
    if isinstance(v, Surd):
        v = v.bounds(200)[0]
    return Fraction(v)


def window_minimum(A: int, Ea: int, B: int, Eb: int, qlo: int, qhi: int,
                   chunk: int = 1 << 20) -> tuple[float, float, int]:
    """Certified enclosure of ``min q ||q alpha - beta||`` over ``qlo <= q < qhi``.

    ``alpha * 2**64`` lies in ``[A, A + Ea]`` and likewise for ``beta``.
    Returns ``(lo, hi, argmin)``.
    """
    best_lo = math.inf
    best_hi = math.inf
    arg = qlo
    a = np.uint64(A)
    b = np.uint64(B)
    scale = 2.0 ** -_SHIFT
    for start in range(qlo, qhi, chunk):
        stop = min(qhi, start + chunk)
        q = np.arange(start, stop, dtype=np.uint64)
        y = q * a - b
        dist = np.minimum(y, np.uint64(0) - y).astype(np.float64)
        qf = q.astype(np.float64)
        err = qf * Ea + Eb + 2.0
        lo = qf * np.maximum(dist - err, 0.0) * scale * (1 - _REL)
        hi = qf * (dist + err) * scale * (1 + _REL)
        i = int(np.argmin(hi))
        if hi[i] < best_hi:
            best_hi = float(hi[i])
            arg = start + i
        best_lo = min(best_lo, float(lo.min()))
    return best_lo, best_hi, arg


def _window_task(args):
    return window_minimum(*args)


@dataclass
class OracleTable:
    rows: list[tuple[int, int, float, float, int]]
    liminf_lo: float
    liminf_hi: float

    def to_csv(self) -> str:
        lines = ["q_window_lo,q_window_hi,min_value_lo,min_value_hi"]
        for qlo, qhi, lo, hi, _ in self.rows:
            lines.append(f"{qlo},{qhi},{lo:.17g},{hi:.17g}")
        return "\n".join(lines) + "\n"

    def to_json(self) -> dict:
        return {
            "windows": [{"qLo": r[0], "qHi": r[1], "minLo": r[2], "minHi": r[3], "argmin": r[4]}
                        for r in self.rows],
            "liminfBracket": [self.liminf_lo, self.liminf_hi],
        }

    def contains(self, v) -> bool:
        if isinstance(v, (Surd, Fraction, int)):
            # exact values are compared against the exact binary endpoints
            return Fraction(self.liminf_lo) <= v <= Fraction(self.liminf_hi)
        x = float(v)
        return self.liminf_lo <= x <= self.liminf_hi


def mplus_oracle(beta: RealHandle, alpha, qmax: int, *, workers: int = 1,
                 qmin: int = 1) -> OracleTable:
    """Dyadic-window minima of ``q ||q alpha - beta||`` for ``q <= qmax``.

    Each window minimum is a certified enclosure. The liminf bracket is read
    off the late windows (those above ``sqrt(qmax)``): the smallest late
    minimum widened by twice the disagreement between the two halves of the
    late range. This bracket is a heuristic, not a proof.
    """
    if qmax < 1:
        raise ValueError("qmax must be >= 1")
    src = alpha.source if isinstance(alpha, NcfExpansion) else as_exact(alpha) \
        if not isinstance(alpha, Interval) else alpha
    if isinstance(src, Fraction) or (isinstance(src, Surd) and src.is_rational):
        raise NumericsError("alpha must be irrational (a rational alpha has a terminating expansion)")
    if qmax >= 1 << 40:
        raise ValueError("qmax too large for 64-bit fixed point")
    A, Ea = _fixed64(src)
    B, Eb = _fixed64(beta.source if isinstance(beta, NcfExpansion) else beta)
    windows = []
    j = 0
    while (1 << j) <= qmax:
        lo, hi = max(1 << j, qmin), min(1 << (j + 1), qmax + 1)
        if lo < hi:
            windows.append((lo, hi))
        j += 1
    tasks = [(A, Ea, B, Eb, lo, hi) for lo, hi in windows]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_window_task, tasks))
    else:
        results = [_window_task(t) for t in tasks]
    rows = [(lo, hi, r[0], r[1], r[2]) for (lo, hi), r in zip(windows, results)]
    late = [r for r in rows if r[0] * r[0] >= qmax] or rows[-2:]
    if len(late) < 2:
        late = rows
    half = len(late) // 2
    m1 = min(r[2] for r in late[:half]) if half else late[0][2]
    m2 = min(r[2] for r in late[half:])
    m2_hi = min(r[3] for r in late[half:])
    spread = abs(m1 - m2) + (m2_hi - m2)
    return OracleTable(rows, max(0.0, m2 - 2 * spread), m2_hi + 2 * spread)


# -- zero-block criterion -------------------------------------------------------

def zero_block_check(beta, alpha: NcfExpansion, r: int, s: int,
                     k_schedule: Sequence[int], depth: Optional[int] = None) -> bool:
    """Check the three digit conditions that pin ``M+`` to ``liminf lambda_{k(i)}``.

    1. ``b_{k(i)+1..k(i)+r}`` are zeros;
    2. no ``N+s`` consecutive zeros strictly after ``k(i)+r`` up to ``k(i+1)``;
    3. no block ``a_j-1, a_{j+1}-2, ..., a_{j+N+s-1}-2`` up to ``depth``.
    """
    d = _as_digits(beta, alpha)
    alpha = d.alpha
    sb = structural_bounds(expansion=alpha)
    N, L = sb.N, sb.L
    ks = list(k_schedule)
    if r < s * L:
        raise ValueError(f"need r >= s*L = {s * L}")
    if any(k2 <= k1 + r for k1, k2 in zip(ks, ks[1:])):
        raise ValueError("schedule gaps must exceed r")
    if depth is None:
        depth = ks[-1] + r if ks else 0
    digits = d.digits(depth)
    if not any(digits):
        return False
    for k in ks:
        if k + r > depth:
            break
        if any(digits[k:k + r]):
            return False
    run_cap = N + s
    for k1, k2 in zip(ks, ks[1:]):
        run = 0
        for j in range(k1 + r + 1, min(k2, depth) + 1):
            run = run + 1 if digits[j - 1] == 0 else 0
            if run >= run_cap:
                return False
    # short-interval runs
    for j in range(1, depth - run_cap + 2):
        if digits[j - 1] != alpha.digit(j) - 1:
            continue
        if all(digits[t - 1] == alpha.digit(t) - 2 for t in range(j + 1, j + run_cap)):
            return False
    return True


theorem98967_check = zero_block_check  # API name kept for existing callers


# -- regular continued fraction, unbounded quotients ----------------------------

class RegularAlpha:
    """``alpha = [0; a1, ..., aK]`` held exactly, with ``theta_k = q_k alpha - p_k``."""

    def __init__(self, digits: Sequence[int]):
        digits = list(digits)
        if not digits or any(a < 1 for a in digits):
            raise ValueError("regular partial quotients must be positive")
        self.digits = digits
        x = Fraction(0)
        for a in reversed(digits):
            x = 1 / (a + x)
        self.value = x
        p = [1, 0]
        q = [0, 1]
        for a in digits:
            p.append(a * p[-1] + p[-2])
            q.append(a * q[-1] + q[-2])
        self._p = p  # p[k+1] = p_k
        self._q = q

    def __len__(self):
        return len(self.digits)

    def a(self, k: int) -> int:
        return self.digits[k - 1]

    def q(self, k: int) -> int:
        return self._q[k + 1]

    def p(self, k: int) -> int:
        return self._p[k + 1]

    def theta(self, k: int) -> Fraction:
        return self.q(k) * self.value - self.p(k)

    def D(self, k: int) -> Fraction:
        """``D#_k = theta_{k-1}``."""
        return self.theta(k - 1)


def _sgn(x) -> int:
    return (x > 0) - (x < 0)


def regular_davenport_digits(beta: Fraction, alpha: RegularAlpha, n: Optional[int] = None) -> list[int]:
    """Digits ``b#_k`` with ``beta = sum b#_k D#_k`` by a minimal admissible greedy.

    At each level the smallest non-negative digit is taken that leaves a
    tail no larger than the next ``|D#|`` in the current direction.
    """
    beta = Fraction(beta)
    n = len(alpha) - 1 if n is None else min(n, len(alpha) - 1)
    tail = beta
    out = []
    for k in range(1, n + 1):
        t0, t1 = alpha.theta(k - 1), alpha.theta(k)
        x = tail * _sgn(t0)
        b = max(0, math.ceil((x - abs(t1)) / abs(t0)))
        out.append(b)
        tail -= b * t0
    return out


def _sharp_parts(digits: Sequence[int], alpha: RegularAlpha, beta: Fraction, n: int):
    Q = sum(b * alpha.q(k - 1) for k, b in enumerate(digits[:n], start=1))
    S = sum(b * alpha.D(k) for k, b in enumerate(digits[:n], start=1))
    return Q, beta - S


def lambda_sharp(digits: Sequence[int], alpha: RegularAlpha, n: int,
                 beta: Optional[Fraction] = None) -> Fraction:
    """``lambda#_n`` through the product form ``q_n |D_n| * (Q_n/q_n) * (|tail|/|D_n|)``.

    Without ``beta`` the digits are summed to the truncation depth.
    """
    if beta is None:
        beta = sum(b * alpha.D(k) for k, b in enumerate(digits, start=1))
    Q, tail = _sharp_parts(digits, alpha, beta, n)
    qn, Dn = alpha.q(n), abs(alpha.D(n))
    return qn * Dn * Fraction(Q, qn) * (abs(tail) / Dn)


def lambda_sharp_direct(digits: Sequence[int], alpha: RegularAlpha, n: int,
                        beta: Optional[Fraction] = None) -> Fraction:
    """``Q#_n ||Q#_n alpha - beta||`` evaluated directly."""
    if beta is None:
        beta = sum(b * alpha.D(k) for k, b in enumerate(digits, start=1))
    Q, _ = _sharp_parts(digits, alpha, beta, n)
    x = Q * alpha.value - beta
    return Q * abs(x - round(x))


def adjust_digits_unbounded(digits: Sequence[int], alpha: RegularAlpha, c: Fraction,
                            schedule: Sequence[int], *, before: int = 2,
                            after: int = 2) -> list[int]:
    """Re-choose the digits at the schedule indices to pull ``lambda#`` onto ``c``.

    At each index ``n_k`` the digit is set so that the minimum of
    ``lambda#_j`` over ``j`` in ``[n_k - before, n_k + after]`` lands in
    ``[c, c + 2/a#_{n_k}]``. Digits elsewhere are untouched.
    """
    out = list(digits)
    c = Fraction(c)
    depth = len(out)
    for nk in schedule:
        a = alpha.a(nk)
        lo_j, hi_j = max(1, nk - before), min(depth, nk + after)
        best = None
        for v in range(0, a + 1):
            trial = out[:nk - 1] + [v] + out[nk:]
            beta = sum(b * alpha.D(k) for k, b in enumerate(trial, start=1))
            m = min(lambda_sharp(trial, alpha, j, beta) for j in range(lo_j, hi_j + 1))
            if c <= m <= c + Fraction(2, a) and (best is None or m < best[0]):
                best = (m, v)
        if best is None:
            raise TargetUnreachable(f"no digit at index {nk} lands within 2/a of {c}")
        out[nk - 1] = best[1]
    return out
