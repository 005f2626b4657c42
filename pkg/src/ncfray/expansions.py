"""Ostrowski numeration of integers and Davenport expansion of reals.

Both are taken relative to the negative continued fraction of ``alpha``:
an integer is ``q = sum c_k q_{k-1}`` and a real ``beta`` in ``[0, 1)`` is
``beta = sum b_k D_k``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional, Sequence

from .ncf import NcfExpansion
from .numerics import (
    Interval,
    NumericsError,
    PrecisionExhausted,
    RealHandle,
    Surd,
    as_exact,
    compare,
    default_precision_bits,
)

__all__ = [
    "DigitWord",
    "OstrowskiExpansion",
    "DavenportDigits",
    "NotCanonicalizable",
    "ZeroDigits",
    "ostrowski",
    "ostrowski_validate",
    "davenport_digits",
    "davenport_sum",
    "davenport_canonicalize",
    "davenport_validate",
    "find_forbidden_block",
    "lattice_point",
    "word_value",
    "word_tail_value",
    "detect_word",
]


class NotCanonicalizable(NumericsError):
    pass


class ZeroDigits(NumericsError):
    pass


@dataclass(frozen=True)
class DigitWord:
    """Eventually periodic digit word ``prefix + period + period + ...``.

    An empty period means the word is followed by zeros.
    """

    prefix: tuple = ()
    period: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "prefix", tuple(self.prefix))
        object.__setattr__(self, "period", tuple(self.period))
        if self.period and not any(self.period):
            object.__setattr__(self, "period", ())

    def digit(self, i: int) -> int:
        if i <= len(self.prefix):
            return self.prefix[i - 1]
        if not self.period:
            return 0
        return self.period[(i - len(self.prefix) - 1) % len(self.period)]

    def digits(self, n: int) -> list[int]:
        return [self.digit(i) for i in range(1, n + 1)]

    @property
    def finite_support(self) -> Optional[int]:
        if self.period:
            return None
        n = len(self.prefix)
        while n and self.prefix[n - 1] == 0:
            n -= 1
        return n

    def to_json(self) -> dict:
        return {"prefix": list(self.prefix), "period": list(self.period)}


# -- Ostrowski -------------------------------------------------------------

@dataclass(frozen=True)
class OstrowskiExpansion:
    coefficients: tuple
    alpha: NcfExpansion = field(repr=False, compare=False)

    def value(self) -> int:
        return sum(c * self.alpha.q(k - 1) for k, c in enumerate(self.coefficients, start=1))

    def to_json(self) -> dict:
        return {"alpha": self.alpha.describe(), "coefficients": list(self.coefficients)}


def ostrowski(q: int, alpha: NcfExpansion) -> OstrowskiExpansion:
    """Greedy top-down expansion ``q = sum c_k q_{k-1}``."""
    if q < 1:
        raise ValueError("Ostrowski expansion needs q >= 1")
    n = 1
    while alpha.q(n) <= q:
        n += 1
    coeffs = [0] * n
    rest = q
    for k in range(n, 0, -1):
        qk = alpha.q(k - 1)
        coeffs[k - 1], rest = divmod(rest, qk)
    return OstrowskiExpansion(tuple(coeffs), alpha)


def _first_block(digits: Sequence[int], alpha: NcfExpansion, start: int = 1):
    """First ``(i, j)`` with ``digits[i..j] = (a_i-1, a-2, ..., a-2, a_j-1)``, ``j > i``."""
    open_at = None
    for k, b in enumerate(digits, start=start):
        a = alpha.digit(k)
        if b == a - 1:
            if open_at is not None:
                return open_at, k
            open_at = k
        elif b != a - 2:
            open_at = None
    return None


def ostrowski_validate(c: Sequence[int], alpha: NcfExpansion) -> bool:
    c = list(c)
    if not c or c[-1] < 1:
        return False
    for k, ck in enumerate(c, start=1):
        if not 0 <= ck <= alpha.digit(k) - 1:
            return False
    return _first_block(c, alpha) is None


# -- Davenport -------------------------------------------------------------

def _floor(v) -> int:
    return v.floor() if isinstance(v, Surd) else math.floor(v)


class DavenportDigits:
    """Digit stream ``b_1, b_2, ...`` of ``beta`` relative to ``alpha``.

    Built from a value (digits generated by the greedy recursion), from an
    eventually periodic :class:`DigitWord`, or from an arbitrary digit
    function. Digits are memoized.
    """

    def __init__(self, alpha: NcfExpansion, *, beta: Optional[RealHandle] = None,
                 word: Optional[DigitWord] = None,
                 digit_fn: Optional[Callable[[int], int]] = None):
        if sum(x is not None for x in (beta, word, digit_fn)) != 1:
            raise ValueError("give exactly one of beta, word, digit_fn")
        src = getattr(alpha, "source", None)
        if alpha.terminated or isinstance(src, Fraction) or (isinstance(src, Surd) and src.is_rational):
            raise NumericsError("alpha has a terminating expansion")
        self.alpha = alpha
        self.word = word
        self._fn = digit_fn
        self._digits: list[int] = []
        self._finite: Optional[int] = None
        self._tail_cache: dict = {}
        self.beta = None
        if beta is not None:
            if not isinstance(beta, Interval):
                beta = as_exact(beta)
            if compare(beta, 0) < 0 or compare(beta, 1) >= 0:
                raise NumericsError("beta must lie in [0, 1)")
            self.beta = beta
            self._resid = [beta]  # beta_1, beta_2, ...
            self._S = Fraction(0)
        elif word is not None:
            self._finite = word.finite_support

    # -- digits --------------------------------------------------------------
    @property
    def finite_support(self) -> Optional[int]:
        """Index of the last nonzero digit if every later digit is zero."""
        if self.word is not None:
            return self._finite
        return self._finite

    def _extend(self, n: int) -> None:
        while len(self._digits) < n:
            i = len(self._digits) + 1
            if self.word is not None:
                self._digits.append(self.word.digit(i))
            elif self._fn is not None:
                self._digits.append(int(self._fn(i)))
            elif self._finite is not None:
                self._digits.append(0)
                self._resid.append(Fraction(0))
            elif isinstance(self.beta, Interval):
                self._digits.append(self._interval_digit(i))
            else:
                r = self._resid[i - 1] / self.alpha.complete_quotient(i)
                b = _floor(r)
                self._digits.append(b)
                nxt = r - b
                self._resid.append(nxt)
                if nxt == 0:
                    self._finite = len(self._digits)
                    while self._finite and self._digits[self._finite - 1] == 0:
                        self._finite -= 1

    def _interval_digit(self, i: int) -> int:
        # b_i = floor((beta - S_{i-1}) / D_i), refining beta as needed
        Di = self.alpha.D(i)
        bits, floor_bits = 64, default_precision_bits()
        while True:
            lo = _floor((self.beta.lo - self._S) / Di)
            hi = _floor((self.beta.hi - self._S) / Di)
            if lo == hi:
                self._S = self._S + lo * Di
                return lo
            if self.beta.refine is None or bits > floor_bits:
                raise PrecisionExhausted(f"cannot decide Davenport digit {i}")
            self.beta = self.beta.refined(bits)
            bits *= 2

    def digit(self, i: int) -> int:
        self._extend(i)
        return self._digits[i - 1]

    def digits(self, n: int) -> list[int]:
        self._extend(n)
        return list(self._digits[:n])

    # -- values --------------------------------------------------------------
    def residual(self, n: int):
        """``beta_{n+1} = sum_{k>n} b_k D_k / D_n`` (exact when available)."""
        if self.beta is not None and not isinstance(self.beta, Interval):
            self._extend(n)
            return self._resid[n]
        if self.word is not None:
            return word_tail_value(self.alpha, self.word, n, cache=self._tail_cache)
        raise NumericsError("no exact residual for this digit source")

    def value(self):
        if self.beta is not None:
            return self.beta
        if self.word is not None:
            return self.residual(0)
        raise NumericsError("value of a function-defined digit stream is not exact")

    def partial_sum(self, n: int):
        s = Fraction(0)
        for k, b in enumerate(self.digits(n), start=1):
            if b:
                s = s + b * self.alpha.D(k)
        return s

    def to_json(self, n: int = 20) -> dict:
        return {
            "alpha": self.alpha.describe(),
            "digits": self.digits(n),
            "finiteSupport": self.finite_support,
        }


def word_tail_value(alpha: NcfExpansion, word: DigitWord, n: int, cache: Optional[dict] = None):
    """Exact ``sum_{k>n} b_k D_k / D_n`` for a periodic ``alpha`` and word."""
    if not alpha.is_periodic:
        raise NumericsError("exact word values need an eventually periodic alpha")
    if not word.period:
        out = Fraction(0)
        ratio = Fraction(1)
        for k in range(n + 1, len(word.prefix) + 1):
            ratio = ratio * alpha.complete_quotient(k)
            if word.prefix[k - 1]:
                out = out + word.prefix[k - 1] * ratio
        return out
    P = math.lcm(len(alpha.period), len(word.period))
    m0 = max(len(alpha.preperiod), len(word.prefix))
    if n >= m0:
        key = (n - m0) % P
        if cache is not None and key in cache:
            return cache[key]
        total = Fraction(0)
        ratio = Fraction(1)
        for k in range(n + 1, n + P + 1):
            ratio = ratio * alpha.complete_quotient(k)
            b = word.digit(k)
            if b:
                total = total + b * ratio
        val = total / (1 - ratio)
        if cache is not None:
            cache[key] = val
        return val
    out = Fraction(0)
    ratio = Fraction(1)
    for k in range(n + 1, m0 + 1):
        ratio = ratio * alpha.complete_quotient(k)
        b = word.digit(k)
        if b:
            out = out + b * ratio
    return out + ratio * word_tail_value(alpha, word, m0, cache)


def word_value(alpha: NcfExpansion, word: DigitWord):
    """Exact Davenport sum ``sum b_k D_k`` of an eventually periodic word."""
    return word_tail_value(alpha, word, 0)


def davenport_digits(beta: RealHandle, alpha: NcfExpansion, n: int) -> tuple[list[int], object]:
    """First ``n`` digits of ``beta`` and the residual ``beta_{n+1}``."""
    d = DavenportDigits(alpha, beta=beta)
    digits = d.digits(n)
    resid = d.residual(n) if not isinstance(d.beta, Interval) else None
    return digits, resid


def davenport_sum(d, depth: int, alpha: Optional[NcfExpansion] = None) -> Interval:
    """``[S_depth, S_depth + D_depth]``, which contains the represented value."""
    if isinstance(d, DavenportDigits):
        alpha = d.alpha
        s = d.partial_sum(depth)
    else:
        if alpha is None:
            raise ValueError("alpha is required for a bare digit list")
        digits = list(d)[:depth] + [0] * max(0, depth - len(d))
        s = Fraction(0)
        for k, b in enumerate(digits, start=1):
            if b:
                s = s + b * alpha.D(k)
    return Interval(s, s + alpha.D(depth))


def find_forbidden_block(d, alpha: NcfExpansion, depth: Optional[int] = None):
    """First finite forbidden block ``(i, j)`` or infinite tail ``(i, None)``.

    ``d`` is a digit list, a :class:`DigitWord` or a :class:`DavenportDigits`.
    Infinite tails are only detectable on eventually periodic words.
    """
    word = d if isinstance(d, DigitWord) else getattr(d, "word", None)
    if word is not None and word.period and alpha.is_periodic:
        P = math.lcm(len(alpha.period), len(word.period))
        m0 = max(len(alpha.preperiod), len(word.prefix))
        digits = word.digits(m0 + 3 * P + 1)
        blk = _first_block(digits, alpha)
        if blk is not None:
            return blk
        # tail of a-2 digits from m0 on, preceded by an a-1 somewhere
        if all(word.digit(k) == alpha.digit(k) - 2 for k in range(m0 + 1, m0 + P + 1)):
            k = m0
            while k >= 1 and word.digit(k) == alpha.digit(k) - 2:
                k -= 1
            if k >= 1 and word.digit(k) == alpha.digit(k) - 1:
                return k, None
        return None
    if isinstance(d, DavenportDigits):
        digits = d.digits(depth if depth is not None else 200)
    elif isinstance(d, DigitWord):
        digits = d.digits(depth if depth is not None else max(len(d.prefix), 1))
    else:
        digits = list(d)[: depth] if depth is not None else list(d)
    return _first_block(digits, alpha)


def davenport_validate(d, alpha: NcfExpansion, depth: Optional[int] = None) -> bool:
    """Digit bounds plus absence of forbidden blocks within ``depth``."""
    if isinstance(d, DavenportDigits):
        digits = d.digits(depth if depth is not None else 200)
    elif isinstance(d, DigitWord):
        n = depth if depth is not None else len(d.prefix) + 4 * max(1, len(d.period))
        digits = d.digits(n)
    else:
        digits = list(d)
    for k, b in enumerate(digits, start=1):
        if not 0 <= b <= alpha.digit(k) - 1:
            return False
    return find_forbidden_block(d, alpha, depth) is None


def davenport_canonicalize(d, alpha: NcfExpansion) -> list[int]:
    """Rewrite a digit word into the terminating canonical form of its value.

    Forbidden blocks and ``a-1, a-2, a-2, ...`` tails are replaced by the
    unique valid expansion of the same value; words whose value reaches 1
    are rejected.
    """
    word = d if isinstance(d, DigitWord) else DigitWord(tuple(d))
    n = len(word.prefix) + len(word.period)
    for k in range(1, n + 1):
        b = word.digit(k)
        if not 0 <= b <= alpha.digit(k) - 1:
            raise NumericsError(f"digit {k} out of bounds")
    value = word_value(alpha, word) if (word.period or alpha.is_periodic) else _finite_sum(word.prefix, alpha)
    if value >= 1:
        raise NotCanonicalizable("the word sums to 1 or more")
    out = DavenportDigits(alpha, beta=value)
    if not word.period and find_forbidden_block(word.prefix, alpha) is None:
        return list(word.prefix)
    limit = max(n, 1) * 4 + 200
    digits = out.digits(limit)
    if out.finite_support is None:
        raise NotCanonicalizable("canonical form does not terminate")
    return digits[: out.finite_support]


def _finite_sum(digits, alpha):
    s = Fraction(0)
    for k, b in enumerate(digits, start=1):
        if b:
            s = s + b * alpha.D(k)
    return s


def lattice_point(d, alpha: Optional[NcfExpansion] = None) -> tuple[int, int]:
    """``(q, p)`` with ``q alpha - p = sum b_k D_k`` for finitely supported digits."""
    if isinstance(d, DavenportDigits):
        alpha = d.alpha
        n = d.finite_support
        if n is None:
            raise NumericsError("digit stream has no known finite support")
        digits = d.digits(n)
    elif isinstance(d, DigitWord):
        if d.finite_support is None:
            raise NumericsError("periodic word has infinite support")
        digits = list(d.prefix)
    else:
        digits = list(d)
    if alpha is None:
        raise ValueError("alpha is required for a bare digit list")
    if not any(digits):
        raise ZeroDigits("all digits vanish, no lattice point")
    q = sum(b * alpha.q(k - 1) for k, b in enumerate(digits, start=1))
    p = sum(b * alpha.p(k - 1) for k, b in enumerate(digits, start=1))
    return q, p


def detect_word(d: DavenportDigits, max_steps: int = 400) -> Optional[DigitWord]:
    """Eventually periodic word of an exactly known ``beta``, if one shows up.

    Residuals ``beta_{n+1}`` are compared together with the phase of
    ``alpha``; a repeat pins down prefix and period.
    """
    if d.word is not None:
        return d.word
    if d.beta is None or isinstance(d.beta, Interval) or not d.alpha.is_periodic:
        return None
    seen: dict = {}
    for n in range(max_steps + 1):
        r = d.residual(n)
        if r == 0:
            return DigitWord(tuple(d.digits(n)))
        key = (d.alpha.phase(n + 1), r)
        if key in seen:
            m = seen[key]
            digits = d.digits(n)
            return DigitWord(tuple(digits[:m]), tuple(digits[m:]))
        if n >= len(d.alpha.preperiod):
            seen[key] = n
    return None
