"""Exact quadratic surds, refinable intervals and exact comparisons.

Every digit decision in the package (ceilings of reciprocals, floors of
ratios) goes through this module so that no floating point rounding can
flip a partial quotient or a Davenport digit.
"""

from __future__ import annotations

import contextlib
import enum
import math
import os
from fractions import Fraction
from typing import Callable, Optional, Sequence, Union

import mpmath

__all__ = [
    "Surd",
    "Interval",
    "Ordering",
    "RealHandle",
    "NumericsError",
    "PrecisionExhausted",
    "NotInUnitInterval",
    "DegeneratePeriod",
    "compare",
    "floor_of",
    "ceil_of",
    "as_exact",
    "to_iv",
    "squarefree_part",
    "surd_from_periodic_ncf",
    "surd_from_periodic_rcf",
    "default_precision_bits",
]


class NumericsError(ValueError):
    """Base class for domain errors raised by the numeric kernel."""


class PrecisionExhausted(ArithmeticError):
    """An interval could not be refined enough to decide a comparison."""


class NotInUnitInterval(NumericsError):
    pass


class DegeneratePeriod(NumericsError):
    pass


def default_precision_bits() -> int:
    """Refinement floor in bits; ``NCFRAY_PRECISION`` overrides the default of 256."""
    try:
        return int(os.environ.get("NCFRAY_PRECISION", "256"))
    except ValueError:
        return 256


def _isqrt_ceil(n: int) -> int:
    r = math.isqrt(n)
    return r if r * r == n else r + 1


def squarefree_part(n: int) -> tuple[int, int]:
    """Return ``(f, m)`` with ``n == f*f*m`` and ``m`` square-free."""
    if n < 0:
        raise ValueError("negative radicand")
    if n in (0, 1):
        return 1, n
    f, m = 1, n
    p = 2
    while p * p <= m and p < 1_000_000:
        while m % (p * p) == 0:
            m //= p * p
            f *= p
        p += 1 if p == 2 else 2
    r = math.isqrt(m)
    if r * r == m:
        f *= r
        m = 1
    return f, m


def _gcd3(a: int, b: int, c: int) -> int:
    return math.gcd(math.gcd(a, b), c)


class Surd:
    """The number ``(x + y*sqrt(d)) / z`` with integers ``x, y``, ``z > 0``.

    ``d`` is square-free; ``d == 0`` marks a rational value. Instances are
    immutable and hashable, and equality is syntactic after normalisation.
    """

    __slots__ = ("x", "y", "z", "d")

    def __init__(self, x: int, y: int = 0, z: int = 1, d: int = 0):
        if z == 0:
            raise ZeroDivisionError("surd denominator is zero")
        if d and y:
            f, d = squarefree_part(d)
            y *= f
            if d == 1:
                x, y, d = x + y, 0, 0
        else:
            y, d = 0, 0
        if z < 0:
            x, y, z = -x, -y, -z
        g = _gcd3(x, y, z)
        if g > 1:
            x, y, z = x // g, y // g, z // g
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "d", d)

    def __setattr__(self, name, value):
        raise AttributeError("Surd is immutable")

    @classmethod
    def _raw(cls, x: int, y: int, z: int, d: int) -> "Surd":
        # caller guarantees d square-free (or y == 0 and d == 0)
        if z < 0:
            x, y, z = -x, -y, -z
        if y == 0:
            d = 0
        g = _gcd3(x, y, z)
        if g > 1:
            x, y, z = x // g, y // g, z // g
        s = object.__new__(cls)
        object.__setattr__(s, "x", x)
        object.__setattr__(s, "y", y)
        object.__setattr__(s, "z", z)
        object.__setattr__(s, "d", d)
        return s

    @classmethod
    def coerce(cls, v) -> "Surd":
        if isinstance(v, Surd):
            return v
        if isinstance(v, int):
            return cls._raw(v, 0, 1, 0)
        if isinstance(v, Fraction):
            return cls._raw(v.numerator, 0, v.denominator, 0)
        raise TypeError(f"cannot convert {type(v).__name__} to Surd")

    @classmethod
    def sqrt(cls, n) -> "Surd":
        """``sqrt(n)`` for a non-negative rational ``n``."""
        n = Fraction(n)
        # sqrt(p/q) = sqrt(p*q)/q
        return cls(0, 1, n.denominator, n.numerator * n.denominator)

    # -- structure -------------------------------------------------------
    @property
    def is_rational(self) -> bool:
        return self.y == 0

    def as_fraction(self) -> Fraction:
        if self.y:
            raise ValueError("irrational surd")
        return Fraction(self.x, self.z)

    def conjugate(self) -> "Surd":
        return Surd._raw(self.x, -self.y, self.z, self.d)

    def _pair(self, other) -> tuple["Surd", "Surd", int]:
        o = Surd.coerce(other)
        if self.d == o.d or o.d == 0:
            return self, o, self.d
        if self.d == 0:
            return self, o, o.d
        raise ValueError(f"radicand mismatch: {self.d} vs {o.d}")

    # -- arithmetic -------------------------------------------------------
    def __add__(self, other):
        try:
            a, b, d = self._pair(other)
        except TypeError:
            return NotImplemented
        if a.z == b.z:
            return Surd._raw(a.x + b.x, a.y + b.y, a.z, d)
        return Surd._raw(a.x * b.z + b.x * a.z, a.y * b.z + b.y * a.z, a.z * b.z, d)

    __radd__ = __add__

    def __neg__(self):
        return Surd._raw(-self.x, -self.y, self.z, self.d)

    def __pos__(self):
        return self

    def __sub__(self, other):
        try:
            o = Surd.coerce(other)
        except TypeError:
            return NotImplemented
        return self + (-o)

    def __rsub__(self, other):
        try:
            o = Surd.coerce(other)
        except TypeError:
            return NotImplemented
        return o + (-self)

    def __mul__(self, other):
        if isinstance(other, int):
            return Surd._raw(self.x * other, self.y * other, self.z, self.d)
        try:
            a, b, d = self._pair(other)
        except TypeError:
            return NotImplemented
        return Surd._raw(
            a.x * b.x + a.y * b.y * d, a.x * b.y + a.y * b.x, a.z * b.z, d
        )

    __rmul__ = __mul__

    def reciprocal(self) -> "Surd":
        n = self.x * self.x - self.y * self.y * self.d
        if n == 0:
            raise ZeroDivisionError("division by zero surd")
        # 1/((x + y r)/z) = z (x - y r) / (x^2 - y^2 d)
        return Surd._raw(self.z * self.x, -self.z * self.y, n, self.d)

    def __truediv__(self, other):
        if isinstance(other, int):
            if other == 0:
                raise ZeroDivisionError("division by zero")
            return Surd._raw(self.x, self.y, self.z * other, self.d)
        try:
            o = Surd.coerce(other)
        except TypeError:
            return NotImplemented
        return self * o.reciprocal()

    def __rtruediv__(self, other):
        try:
            o = Surd.coerce(other)
        except TypeError:
            return NotImplemented
        return o * self.reciprocal()

    def __pow__(self, n: int):
        if not isinstance(n, int):
            return NotImplemented
        if n < 0:
            return self.reciprocal() ** (-n)
        result, base = Surd._raw(1, 0, 1, 0), self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    # -- ordering ---------------------------------------------------------
    def sign(self) -> int:
        x, y = self.x, self.y
        if y == 0:
            return (x > 0) - (x < 0)
        sx = (x > 0) - (x < 0)
        sy = 1 if y > 0 else -1
        if sx == 0 or sx == sy:
            return sy
        return sx if x * x > y * y * self.d else sy

    def _cmp(self, other) -> int:
        if isinstance(other, Interval):
            return -other._cmp_exact(self)
        return (self - other).sign()

    def __eq__(self, other):
        if isinstance(other, (int, Fraction, Surd)):
            o = Surd.coerce(other)
            return (self.x, self.y, self.z, self.d) == (o.x, o.y, o.z, o.d)
        if isinstance(other, float):
            return False
        return NotImplemented

    def __hash__(self):
        if self.y == 0:
            return hash(Fraction(self.x, self.z))
        return hash((self.x, self.y, self.z, self.d))

    def __lt__(self, other):
        return self._cmp(other) < 0

    def __le__(self, other):
        return self._cmp(other) <= 0

    def __gt__(self, other):
        return self._cmp(other) > 0

    def __ge__(self, other):
        return self._cmp(other) >= 0

    def __abs__(self):
        return -self if self.sign() < 0 else self

    def __bool__(self):
        return bool(self.x or self.y)

    # -- rounding / conversion ----------------------------------------------
    def floor(self) -> int:
        if self.y >= 0:
            s = math.isqrt(self.y * self.y * self.d)
        else:
            s = -_isqrt_ceil(self.y * self.y * self.d)
        return (self.x + s) // self.z

    def ceil(self) -> int:
        return -((-self).floor())

    def __floor__(self):
        return self.floor()

    def __ceil__(self):
        return self.ceil()

    def bounds(self, bits: int) -> tuple[Fraction, Fraction]:
        """Dyadic enclosure of width ``2**-bits`` (zero for rationals)."""
        if self.y == 0:
            v = Fraction(self.x, self.z)
            return v, v
        k = (self * (1 << bits)).floor()
        return Fraction(k, 1 << bits), Fraction(k + 1, 1 << bits)

    def fixed(self, bits: int) -> int:
        """``floor(self * 2**bits)``."""
        return (self * (1 << bits)).floor()

    def _cancel_bits(self) -> int:
        # guard bits for the rounding of the terms themselves
        return max(abs(self.x).bit_length(), abs(self.y).bit_length()).bit_length() + 8

    def _stable_parts(self):
        """``(num, x, y)`` with value ``num / (z (x + y sqrt d))`` and no cancellation.

        When ``x`` and ``y sqrt d`` have opposite signs the sum may nearly
        vanish; the conjugate form moves the cancellation into the exact
        integer ``x**2 - d y**2``.
        """
        if self.y == 0 or (self.x >= 0) == (self.y > 0) or self.x == 0:
            return None
        return self.x * self.x - self.d * self.y * self.y, self.x, -self.y

    def to_mpf(self, prec: int = 113):
        with mpmath.workprec(prec + self._cancel_bits() + 20):
            parts = self._stable_parts()
            if parts is None:
                v = (mpmath.mpf(self.x) + mpmath.mpf(self.y) * mpmath.sqrt(self.d)) / self.z
            else:
                num, x, y = parts
                v = mpmath.mpf(num) / ((mpmath.mpf(x) + mpmath.mpf(y) * mpmath.sqrt(self.d)) * self.z)
        return v

    def __float__(self):
        return float(self.to_mpf(80))

    def __repr__(self):
        if self.y == 0:
            return f"Surd({Fraction(self.x, self.z)})"
        return f"Surd(({self.x} + {self.y}*sqrt({self.d}))/{self.z})"

    def __str__(self):
        if self.y == 0:
            return str(Fraction(self.x, self.z))
        sgn = "+" if self.y > 0 else "-"
        return f"({self.x} {sgn} {abs(self.y)}*sqrt({self.d}))/{self.z}"

    def decimal(self, digits: int = 30) -> str:
        return mpmath.nstr(self.to_mpf(int(digits * 3.33) + 20), digits)


ExactValue = Union[int, Fraction, Surd]


class Interval:
    """Closed enclosure ``[lo, hi]`` of a real number with exact endpoints.

    ``refine(bits)`` must return a new enclosure of width at most
    ``2**-bits``; without it the enclosure is final.
    """

    __slots__ = ("lo", "hi", "refine")

    def __init__(self, lo, hi, refine: Optional[Callable[[int], "Interval"]] = None):
        lo = _exact(lo)
        hi = _exact(hi)
        if _sign_of_diff(hi, lo) < 0:
            raise ValueError(f"empty interval [{lo}, {hi}]")
        self.lo = lo
        self.hi = hi
        self.refine = refine

    @property
    def width(self):
        return _exact(self.hi - self.lo)

    def refined(self, bits: int) -> "Interval":
        if self.refine is None:
            return self
        nxt = self.refine(bits)
        # intersect to keep enclosures nested
        lo = nxt.lo if _sign_of_diff(nxt.lo, self.lo) > 0 else self.lo
        hi = nxt.hi if _sign_of_diff(nxt.hi, self.hi) < 0 else self.hi
        return Interval(lo, hi, nxt.refine)

    def contains(self, v) -> bool:
        v = _exact(v)
        if isinstance(v, Interval):
            return _sign_of_diff(self.lo, v.lo) <= 0 and _sign_of_diff(v.hi, self.hi) <= 0
        return _sign_of_diff(self.lo, v) <= 0 and _sign_of_diff(v, self.hi) <= 0

    def _cmp_exact(self, v) -> int:
        """Best-effort ordering of the enclosed value against an exact ``v``."""
        return int(compare(self, v))

    def _magnitude_bits(self) -> int:
        top = max(abs(math.floor(self.lo)), abs(math.floor(self.hi))) + 1
        return top.bit_length()

    def __add__(self, other):
        if isinstance(other, Interval):
            ref = None
            if self.refine is not None and other.refine is not None:
                ref = lambda bits, f=self.refined, g=other.refined: f(bits + 1) + g(bits + 1)
            return Interval(self.lo + other.lo, self.hi + other.hi, ref)
        other = _exact(other)
        ref = None
        if self.refine is not None:
            ref = lambda bits, f=self.refined, c=other: f(bits) + c
        return Interval(self.lo + other, self.hi + other, ref)

    __radd__ = __add__

    def __neg__(self):
        ref = None
        if self.refine is not None:
            ref = lambda bits, f=self.refine: -f(bits)
        return Interval(-self.hi, -self.lo, ref)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        ref = None
        if isinstance(other, Interval):
            ps = [self.lo * other.lo, self.lo * other.hi, self.hi * other.lo, self.hi * other.hi]
            if self.refine is not None and other.refine is not None:
                extra = max(self._magnitude_bits(), other._magnitude_bits()) + 2

                def ref(bits, f=self.refined, g=other.refined, extra=extra):
                    return f(bits + extra) * g(bits + extra)
        else:
            other = _exact(other)
            ps = [self.lo * other, self.hi * other]
            if self.refine is not None:
                extra = (abs(math.floor(other)) + 1).bit_length()
                ref = lambda bits, f=self.refined, c=other, extra=extra: f(bits + extra) * c
        lo = ps[0]
        hi = ps[0]
        for p in ps[1:]:
            if _sign_of_diff(p, lo) < 0:
                lo = p
            if _sign_of_diff(p, hi) > 0:
                hi = p
        return Interval(lo, hi, ref)

    __rmul__ = __mul__

    def __repr__(self):
        return f"Interval({self.lo}, {self.hi})"

    def to_iv(self, prec: int = 113):
        lo = to_iv(self.lo, prec)
        hi = to_iv(self.hi, prec)
        return mpmath.iv.mpf([lo.a, hi.b])


RealHandle = Union[Fraction, Surd, Interval]


def _exact(v):
    if isinstance(v, Surd):
        return v.as_fraction() if v.y == 0 else v
    if isinstance(v, int) and not isinstance(v, bool):
        return Fraction(v)
    return v


def _sign_of_diff(a, b) -> int:
    if isinstance(a, Fraction) and isinstance(b, Fraction):
        return (a > b) - (a < b)
    return (Surd.coerce(a) - Surd.coerce(b)).sign()


def as_exact(v) -> Union[Fraction, Surd]:
    """Normalise ints and rational surds to ``Fraction``; reject intervals."""
    v = _exact(v)
    if isinstance(v, Interval):
        raise TypeError("interval has no exact value")
    if isinstance(v, (Fraction, Surd)):
        return v
    raise TypeError(f"not an exact real: {v!r}")


class Ordering(enum.IntEnum):
    LESS = -1
    EQUAL = 0
    GREATER = 1


def compare(x: RealHandle, r, *, floor_bits: Optional[int] = None) -> Ordering:
    """Exact ordering of ``x`` against ``r``.

    Intervals are refined until they separate from ``r``; if the width drops
    below ``2**-floor_bits`` while still straddling ``r`` the comparison is
    abandoned with :class:`PrecisionExhausted`.
    """
    if not isinstance(x, Interval):
        return Ordering(_sign_of_diff(_exact(x), _exact(r)))
    r = _exact(r)
    floor_bits = default_precision_bits() if floor_bits is None else floor_bits
    bits = 64
    while True:
        if _sign_of_diff(x.hi, r) < 0:
            return Ordering.LESS
        if _sign_of_diff(x.lo, r) > 0:
            return Ordering.GREATER
        if _sign_of_diff(x.lo, r) == 0 and _sign_of_diff(x.hi, r) == 0:
            return Ordering.EQUAL
        if x.refine is None or bits > floor_bits:
            raise PrecisionExhausted(f"cannot order {x!r} against {r}")
        x = x.refined(bits)
        bits *= 2


def floor_of(x: RealHandle, *, floor_bits: Optional[int] = None) -> int:
    x = _exact(x)
    if isinstance(x, Fraction):
        return math.floor(x)
    if isinstance(x, Surd):
        return x.floor()
    floor_bits = default_precision_bits() if floor_bits is None else floor_bits
    bits = 64
    while True:
        lo, hi = math.floor(x.lo), math.floor(x.hi)
        if lo == hi:
            return lo
        if x.refine is None or bits > floor_bits:
            raise PrecisionExhausted(f"cannot decide floor of {x!r}")
        x = x.refined(bits)
        bits *= 2


def ceil_of(x: RealHandle, *, floor_bits: Optional[int] = None) -> int:
    return -floor_of(-_exact(x), floor_bits=floor_bits)


def to_iv(v, prec: int = 113):
    """Enclose an exact value (or :class:`Interval`) in an ``mpmath.iv`` interval."""
    v = _exact(v)
    if isinstance(v, Interval):
        return v.to_iv(prec)
    if isinstance(v, Fraction):
        with iv_precision(prec):
            return mpmath.iv.mpf(v.numerator) / v.denominator
    with iv_precision(prec + v._cancel_bits() + 20):
        parts = v._stable_parts()
        if parts is None:
            return (mpmath.iv.mpf(v.x) + mpmath.iv.mpf(v.y) * mpmath.iv.sqrt(v.d)) / v.z
        num, x, y = parts
        return mpmath.iv.mpf(num) / ((mpmath.iv.mpf(x) + mpmath.iv.mpf(y) * mpmath.iv.sqrt(v.d)) * v.z)


@contextlib.contextmanager
def iv_precision(prec: int):
    """Temporarily raise the working precision of ``mpmath.iv``."""
    old = mpmath.iv.prec
    mpmath.iv.prec = max(old, prec)
    try:
        yield
    finally:
        mpmath.iv.prec = old


# -- periodic continued fractions ----------------------------------------

def _fixed_point(matrix: tuple[int, int, int, int]) -> list[Surd]:
    """Real fixed points of ``y -> (A y + B) / (C y + D)``."""
    A, B, C, D = matrix
    if C == 0:
        if D == A:
            return []
        return [Surd.coerce(Fraction(B, D - A))]
    disc = (D - A) ** 2 + 4 * B * C
    if disc < 0:
        return []
    root = Surd(0, 1, 1, disc) if disc else Surd.coerce(0)
    return [(Surd.coerce(A - D) + root) / (2 * C), (Surd.coerce(A - D) - root) / (2 * C)]


def _mat_mul(m, n):
    a, b, c, d = m
    e, f, g, h = n
    return (a * e + b * g, a * f + b * h, c * e + d * g, c * f + d * h)


def _ncf_matrix(digits: Sequence[int]):
    # x -> 1/(a - x)  ==  (0*x + 1)/(-x + a)
    m = (1, 0, 0, 1)
    for a in digits:
        m = _mat_mul(m, (0, 1, -1, a))
    return m


def _rcf_matrix(digits: Sequence[int]):
    # x -> 1/(a + x)
    m = (1, 0, 0, 1)
    for a in digits:
        m = _mat_mul(m, (0, 1, 1, a))
    return m


def _apply(m, y: Surd) -> Surd:
    a, b, c, d = m
    return (y * a + b) / (y * c + d)


def _ncf_prefix_ok(y: Surd, period: Sequence[int]) -> bool:
    x = y
    for a in list(period) * 3:
        if not (0 < x < 1):
            return False
        if (1 / x).ceil() != a:
            return False
        x = a - 1 / x
    return True


def surd_from_periodic_ncf(preperiod: Sequence[int], period: Sequence[int]) -> Surd:
    """Value of ``<preperiod, period, period, ...>`` (negative continued fraction)."""
    preperiod, period = list(preperiod), list(period)
    if not period:
        raise NumericsError("period must be nonempty")
    if any(a < 2 for a in preperiod + period):
        raise NumericsError("negative continued fraction digits must be >= 2")
    if all(a == 2 for a in period):
        raise DegeneratePeriod("a period of 2s converges to the rational 1")
    candidates = [y for y in _fixed_point(_ncf_matrix(period)) if 0 < y < 1]
    candidates = [y for y in candidates if _ncf_prefix_ok(y, period)]
    if not candidates:
        raise NotInUnitInterval(f"no fixed point of period {period} in (0, 1)")
    y = candidates[0]
    return _apply(_ncf_matrix(preperiod), y)


def surd_from_periodic_rcf(preperiod: Sequence[int], period: Sequence[int]) -> Surd:
    """Value of the regular continued fraction ``[0; preperiod, period, ...]``."""
    preperiod, period = list(preperiod), list(period)
    if not period or any(a < 1 for a in preperiod + period):
        raise NumericsError("regular continued fraction digits must be >= 1")
    ys = [y for y in _fixed_point(_rcf_matrix(period)) if 0 < y < 1]
    if not ys:
        raise NotInUnitInterval(f"no fixed point of period {period} in (0, 1)")
    return _apply(_rcf_matrix(preperiod), ys[0])
