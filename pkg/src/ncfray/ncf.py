"""Negative continued fractions: digits, convergents, products ``D_k``.

For ``0 < x < 1`` the expansion is ``x = 1/(a1 - 1/(a2 - ...))`` with every
partial quotient ``a_i >= 2``. Eventually periodic expansions are the
exact class: their complete quotients are quadratic surds and all derived
quantities are computed without rounding.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple, Optional, Sequence

from .numerics import (
    Interval,
    NumericsError,
    PrecisionExhausted,
    RealHandle,
    Surd,
    as_exact,
    compare,
    default_precision_bits,
    surd_from_periodic_ncf,
)

__all__ = [
    "NcfExpansion",
    "NcfDigits",
    "StructuralBounds",
    "OutOfRange",
    "UnboundedInput",
    "Terminated",
    "ncf_digits",
    "regular_to_negative",
    "negative_to_regular",
    "convergents",
    "structural_bounds",
    "evaluate_ncf",
    "evaluate_rcf",
]


class OutOfRange(NumericsError):
    pass


class UnboundedInput(NumericsError):
    pass


class Terminated(NumericsError):
    """Raised when asking for a digit past the end of a finite expansion."""


class NcfDigits(NamedTuple):
    digits: list[int]
    terminated: bool


def _mobius(m, x):
    A, B, C, D = m
    return (x * A + B) / (x * C + D)


class NcfExpansion:
    """Lazily extended negative continued fraction of a real in ``(0, 1)``.

    Build one with :meth:`periodic` (exact, preferred), :meth:`from_digits`
    for a finite word, or :meth:`from_handle` for an arbitrary handle.
    """

    def __init__(self, source: RealHandle, *, preperiod: Optional[Sequence[int]] = None,
                 period: Optional[Sequence[int]] = None):
        if not isinstance(source, Interval):
            source = as_exact(source)
        if compare(source, 0) <= 0 or compare(source, 1) >= 0:
            raise OutOfRange(f"expansion source must lie in (0, 1), got {source}")
        self.source = source
        self.preperiod = tuple(preperiod) if period is not None else None
        self.period = tuple(period) if period is not None else None
        self._digits: list[int] = []
        self._quotients: list = [source]  # alpha_1, alpha_2, ...
        self._terminated = False
        self._matrix = (1, 0, 0, 1)  # alpha_i as a Mobius image of the source
        self._pq = [(-1, 0), (0, 1)]  # (p_{-1}, q_{-1}), (p_0, q_0)
        self._D: list = [Fraction(1)]
        self._lock = threading.RLock()
        self._phase_quotients: dict[int, Surd] = {}

    # -- constructors --------------------------------------------------------
    @classmethod
    def periodic(cls, preperiod: Sequence[int], period: Sequence[int]) -> "NcfExpansion":
        value = surd_from_periodic_ncf(preperiod, period)
        return cls(value, preperiod=preperiod, period=period)

    @classmethod
    def from_handle(cls, x: RealHandle, *, detect_period: int = 400) -> "NcfExpansion":
        """Expansion of ``x``; quadratic surds get their period detected."""
        if isinstance(x, Surd) and not x.is_rational and detect_period:
            desc = _detect_ncf_period(x, detect_period)
            if desc is not None:
                return cls(x, preperiod=desc[0], period=desc[1])
        return cls(x)

    @classmethod
    def from_digits(cls, digits: Sequence[int]) -> "NcfExpansion":
        """The rational ``<a1, ..., an>`` (a terminating expansion)."""
        return cls(evaluate_ncf(digits))

    # -- periodic structure ------------------------------------------------
    @property
    def is_periodic(self) -> bool:
        return self.period is not None

    def phase(self, i: int) -> int:
        """Canonical representative of index ``i`` (identical tails share it)."""
        if not self.is_periodic:
            return i
        pre = len(self.preperiod)
        if i <= pre:
            return i
        return pre + 1 + (i - pre - 1) % len(self.period)

    def shifted(self, k: int) -> "NcfExpansion":
        """Expansion of the complete quotient ``alpha_{k+1}``."""
        if k == 0:
            return self
        if self.is_periodic:
            pre = len(self.preperiod)
            if k < pre:
                return NcfExpansion.periodic(self.preperiod[k:], self.period)
            r = (k - pre) % len(self.period)
            return NcfExpansion.periodic((), self.period[r:] + self.period[:r])
        return NcfExpansion(self.complete_quotient(k + 1))

    # -- digits ------------------------------------------------------------
    @property
    def terminated(self) -> bool:
        return self._terminated

    def _extend(self, n: int) -> None:
        with self._lock:
            while len(self._digits) < n and not self._terminated:
                i = len(self._digits) + 1
                if self.is_periodic:
                    pre = len(self.preperiod)
                    a = (self.preperiod[i - 1] if i <= pre
                         else self.period[(i - pre - 1) % len(self.period)])
                    self._digits.append(a)
                    continue
                alpha = self._quotients[i - 1]
                if isinstance(alpha, Interval):
                    a = self._interval_digit()
                else:
                    a = (1 / alpha).ceil() if isinstance(alpha, Surd) else math.ceil(1 / alpha)
                    nxt = a - 1 / alpha
                    if nxt == 0:
                        self._terminated = True
                    else:
                        self._quotients.append(nxt)
                self._digits.append(a)
                A, B, C, D = self._matrix
                self._matrix = (a * A - C, a * B - D, A, B)

    def _interval_digit(self) -> int:
        floor_bits = default_precision_bits()
        bits = 64
        src = self.source
        A, B, C, D = self._matrix
        while True:
            ends = []
            for e in (src.lo, src.hi):
                den = e * A + B
                if den == 0:
                    ends = None
                    break
                ends.append((e * C + D) / den)
            if ends is not None:
                c0 = _ceil_exact(ends[0])
                c1 = _ceil_exact(ends[1])
                if c0 == c1:
                    return c0
            if src.refine is None or bits > floor_bits:
                raise PrecisionExhausted("cannot decide a partial quotient")
            src = src.refined(bits)
            self.source = src
            bits *= 2

    def digit(self, i: int) -> int:
        """Partial quotient ``a_i`` (1-based)."""
        if i < 1:
            raise IndexError("digits are 1-based")
        self._extend(i)
        if i > len(self._digits):
            raise Terminated(f"expansion terminated after {len(self._digits)} digits")
        return self._digits[i - 1]

    def digits(self, n: int) -> list[int]:
        self._extend(n)
        return list(self._digits[:n])

    def __len__(self):
        if not self._terminated:
            raise TypeError("infinite expansion has no length")
        return len(self._digits)

    def complete_quotient(self, i: int):
        """``alpha_i = <a_i, a_{i+1}, ...>`` as an exact value when possible."""
        if i < 1:
            raise IndexError("complete quotients are 1-based")
        if self.is_periodic:
            ph = self.phase(i)
            val = self._phase_quotients.get(ph)
            if val is None:
                pre = len(self.preperiod)
                if ph <= pre:
                    val = surd_from_periodic_ncf(self.preperiod[ph - 1:], self.period)
                else:
                    r = ph - pre - 1
                    val = surd_from_periodic_ncf((), self.period[r:] + self.period[:r])
                self._phase_quotients[ph] = val
            return val
        self._extend(i)
        if i > len(self._quotients):
            if self._terminated and i == len(self._digits) + 1:
                return Fraction(0)
            raise Terminated(f"expansion terminated after {len(self._digits)} digits")
        q = self._quotients[i - 1]
        if isinstance(q, Interval):
            raise PrecisionExhausted("complete quotients of interval sources are not exact")
        return q

    # -- convergents and products -----------------------------------------
    def convergent(self, i: int) -> tuple[int, int]:
        """``(p_i, q_i)`` for ``i >= -1``."""
        if i < -1:
            raise IndexError("convergents start at index -1")
        with self._lock:
            while len(self._pq) < i + 2:
                k = len(self._pq) - 1  # next index
                a = self.digit(k)
                (p2, q2), (p1, q1) = self._pq[-2], self._pq[-1]
                self._pq.append((a * p1 - p2, a * q1 - q2))
        return self._pq[i + 1]

    def q(self, i: int) -> int:
        return self.convergent(i)[1]

    def p(self, i: int) -> int:
        return self.convergent(i)[0]

    def reversed_quotient(self, i: int) -> Fraction:
        """``<a_i, a_{i-1}, ..., a_1> = q_{i-1}/q_i``."""
        return Fraction(self.q(i - 1), self.q(i))

    def D(self, k: int):
        """``D_k = alpha_1 ... alpha_k`` with ``D_0 = 1``."""
        with self._lock:
            while len(self._D) <= k:
                j = len(self._D)
                self._D.append(self._D[-1] * self.complete_quotient(j))
        return self._D[k]

    def D_ratio(self, m: int, k: int):
        """``D_{m+k} / D_m = alpha_{m+1} ... alpha_{m+k}`` without the big prefix."""
        out = Fraction(1)
        for j in range(m + 1, m + k + 1):
            out = out * self.complete_quotient(j)
        return out

    # -- serialisation -------------------------------------------------------
    def describe(self) -> str:
        if self.is_periodic:
            return "ncf:" + ",".join(map(str, self.preperiod)) + ";" + ",".join(map(str, self.period))
        return f"ncf-value:{self.source}"

    def to_json(self, n: int = 10) -> dict:
        digits = self.digits(n)
        out = {
            "digits": digits,
            "periodic": (
                {"preperiod": list(self.preperiod), "period": list(self.period)}
                if self.is_periodic else None
            ),
            "convergents": [list(self.convergent(i)) for i in range(1, len(digits) + 1)],
        }
        if self._terminated:
            out["terminated"] = True
        return out

    def __repr__(self):
        if self.is_periodic:
            return f"NcfExpansion.periodic({list(self.preperiod)}, {list(self.period)})"
        return f"NcfExpansion({self.source!r})"


def _ceil_exact(v) -> int:
    if isinstance(v, Surd):
        return v.ceil()
    return math.ceil(v)


def _detect_ncf_period(x: Surd, max_steps: int):
    seen: dict[Surd, int] = {}
    digits: list[int] = []
    alpha = x
    for i in range(max_steps):
        if alpha in seen:
            j = seen[alpha]
            return digits[:j], digits[j:]
        seen[alpha] = i
        a = (1 / alpha).ceil()
        digits.append(a)
        alpha = a - 1 / alpha
        if alpha == 0:
            return None
    return None


def ncf_digits(x: RealHandle, n: int) -> NcfDigits:
    """First ``n`` partial quotients of ``x``; finite expansions report termination."""
    exp = NcfExpansion.from_handle(x, detect_period=0) if not isinstance(x, NcfExpansion) else x
    digits = exp.digits(n)
    return NcfDigits(digits, exp.terminated)


def evaluate_ncf(digits: Sequence[int], tail=0):
    """``<a1, ..., an>`` with the final complete quotient replaced by ``tail``."""
    x = Fraction(tail) if isinstance(tail, int) else tail
    for a in reversed(digits):
        x = 1 / (a - x)
    return x


def evaluate_rcf(digits: Sequence[int], tail=0):
    """``[0; a1, ..., an]`` with tail ``t`` appended as ``1/(an + t)``."""
    x = Fraction(tail) if isinstance(tail, int) else tail
    for a in reversed(digits):
        x = 1 / (a + x)
    return x


def regular_to_negative(aprime: Sequence[int]) -> list[int]:
    """Map regular partial quotients to negative ones.

    ``a'1+1, 2 * (a'2-1), a'3+2, 2 * (a'4-1), a'5+2, ...``
    """
    aprime = list(aprime)
    if not aprime or any(a < 1 for a in aprime):
        raise ValueError("regular partial quotients must be positive integers")
    out = [aprime[0] + 1]
    for k, a in enumerate(aprime[1:], start=2):
        if k % 2 == 0:
            out.extend([2] * (a - 1))
        else:
            out.append(a + 2)
    return out


def negative_to_regular(digits: Sequence[int]) -> list[int]:
    """Inverse of :func:`regular_to_negative` on words.

    A word ending in ``k >= 1`` twos yields a trailing ``k + 1``; a word
    ending in a digit above 2 yields an odd-length regular word. A regular
    word of even length whose last entry is 1 therefore has no preimage
    distinct from its truncation.
    """
    digits = list(digits)
    if not digits or any(a < 2 for a in digits):
        raise ValueError("negative partial quotients must be >= 2")
    out = [digits[0] - 1]
    i, n = 1, len(digits)
    while i < n:
        run = 0
        while i < n and digits[i] == 2:
            run += 1
            i += 1
        if i == n:
            if run:
                out.append(run + 1)
            break
        out.append(run + 1)
        out.append(digits[i] - 2)
        i += 1
    return out


def convergents(e: NcfExpansion, n: int) -> list[tuple[int, int]]:
    """``[(p_0, q_0), ..., (p_n, q_n)]``."""
    if n < 1:
        raise ValueError("need n >= 1")
    return [e.convergent(i) for i in range(n + 1)]


@dataclass(frozen=True)
class StructuralBounds:
    M: int
    N: int
    L: int
    R: Fraction

    def eq26_holds(self, value) -> bool:
        return Fraction(1, self.M) < value < self.R


def _max_two_run(stream: Sequence[int]) -> int:
    best = run = 0
    for a in stream:
        run = run + 1 if a == 2 else 0
        best = max(best, run)
    return best


def structural_bounds(preperiod: Sequence[int] = (), period: Optional[Sequence[int]] = None,
                      *, expansion: Optional[NcfExpansion] = None) -> StructuralBounds:
    """``M`` (largest digit), ``N`` (1 + longest run of 2s), ``L`` and ``R = N/(N+1)``."""
    if expansion is not None:
        if not expansion.is_periodic:
            raise UnboundedInput("structural bounds need an eventually periodic expansion")
        preperiod, period = expansion.preperiod, expansion.period
    if not period:
        raise UnboundedInput("structural bounds need an eventually periodic digit description")
    preperiod, period = list(preperiod), list(period)
    if all(a == 2 for a in period):
        raise UnboundedInput("a period of 2s has unbounded runs of 2s")
    M = max(preperiod + period)
    N = 1 + _max_two_run(preperiod + period * 3)
    R = Fraction(N, N + 1)
    rhs = (1 - R) * (1 - R * R) / (M ** N * (M * M - 1))
    L = 1
    while R ** L > rhs:
        L += 1
    return StructuralBounds(M=M, N=N, L=L, R=R)
