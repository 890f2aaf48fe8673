"""Rational values with explicit, conservative error bounds.

A :class:`CertifiedReal` stands for an unknown real ``x`` together with an
exact rational ``value`` and an exact rational ``error_bound`` such that
``|x - value| <= error_bound``.  Arithmetic never understates the bound.

Transcendental functions go through ``mpmath.iv`` (outward-rounded interval
arithmetic); the interval endpoints are binary floats and convert to
``Fraction`` exactly.
"""

from __future__ import annotations

import decimal
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Union

from mpmath import iv, libmp

from .errors import PrecisionError, ValidationError

Rational = Union[int, Fraction]

DEFAULT_PREC = 96
MAX_PREC = 1 << 14
# Lower bound on the working precision of every refinement loop; raised by
# the command line's --precision-bits.
_prec_floor = 32


def set_precision_floor(bits: int) -> None:
    global _prec_floor
    if not 32 <= bits <= MAX_PREC:
        raise ValidationError(f"precision must be in [32, {MAX_PREC}] bits")
    _prec_floor = bits


def precision_floor() -> int:
    return _prec_floor


def _frac(x: Rational) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x)


@dataclass(frozen=True)
class CertifiedReal:
    value: Fraction
    error_bound: Fraction = Fraction(0)

    def __post_init__(self):
        object.__setattr__(self, "value", _frac(self.value))
        object.__setattr__(self, "error_bound", _frac(self.error_bound))
        if self.error_bound < 0:
            raise ValidationError("error_bound must be nonnegative")

    # -- construction -----------------------------------------------------
    @classmethod
    def exact(cls, x: Rational) -> "CertifiedReal":
        return cls(_frac(x), Fraction(0))

    @classmethod
    def from_bounds(cls, lo: Rational, hi: Rational) -> "CertifiedReal":
        lo, hi = _frac(lo), _frac(hi)
        if hi < lo:
            raise ValidationError("empty interval")
        return cls((lo + hi) / 2, (hi - lo) / 2)

    @classmethod
    def from_iv(cls, x) -> "CertifiedReal":
        a, b = x._mpi_
        lo = Fraction(*map(int, libmp.to_rational(a)))
        hi = Fraction(*map(int, libmp.to_rational(b)))
        return cls.from_bounds(lo, hi)

    # -- views --------------------------------------------------------------
    @property
    def lo(self) -> Fraction:
        return self.value - self.error_bound

    @property
    def hi(self) -> Fraction:
        return self.value + self.error_bound

    @property
    def is_exact(self) -> bool:
        return self.error_bound == 0

    def contains(self, x: Rational) -> bool:
        return self.lo <= x <= self.hi

    def to_iv(self):
        """Outward-rounded mpmath interval enclosing [lo, hi]."""
        lo, hi = self.lo, self.hi
        a = iv.mpf(lo.numerator) / lo.denominator
        if hi == lo:
            return a
        b = iv.mpf(hi.numerator) / hi.denominator
        return iv.mpf([a.a, b.b])

    def __float__(self) -> float:
        return float(self.value)

    # -- arithmetic -----------------------------------------------------------
    def _coerce(self, other) -> "CertifiedReal":
        if isinstance(other, CertifiedReal):
            return other
        if isinstance(other, (int, Fraction)):
            return CertifiedReal.exact(other)
        return NotImplemented

    def __add__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return CertifiedReal(self.value + o.value, self.error_bound + o.error_bound)

    __radd__ = __add__

    def __neg__(self):
        return CertifiedReal(-self.value, self.error_bound)

    def __sub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return CertifiedReal(self.value - o.value, self.error_bound + o.error_bound)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        err = (
            abs(self.value) * o.error_bound
            + abs(o.value) * self.error_bound
            + self.error_bound * o.error_bound
        )
        return CertifiedReal(self.value * o.value, err)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        denom_floor = abs(o.value) - o.error_bound
        if denom_floor <= 0:
            raise PrecisionError("divisor interval contains zero")
        q = self.value / o.value
        err = (self.error_bound + abs(q) * o.error_bound) / denom_floor
        return CertifiedReal(q, err)

    def __rtruediv__(self, other):
        return CertifiedReal.exact(other) / self

    def rounded(self, bits: int = 128) -> "CertifiedReal":
        """Snap ``value`` to a multiple of ``2**-bits``, absorbing the shift.

        Keeps denominators bounded when many terms are accumulated.
        """
        scale = 1 << bits
        v = Fraction(round(self.value * scale), scale)
        return CertifiedReal(v, self.error_bound + abs(v - self.value))

    # -- certified comparisons ------------------------------------------------
    def certainly_lt(self, other) -> bool:
        o = self._coerce(other)
        return self.hi < o.lo

    def certainly_le(self, other) -> bool:
        o = self._coerce(other)
        return self.hi <= o.lo

    def certainly_gt(self, other) -> bool:
        return self._coerce(other).certainly_lt(self)

    def overlaps(self, other) -> bool:
        o = self._coerce(other)
        return not (self.hi < o.lo or o.hi < self.lo)

    # -- rendering ------------------------------------------------------------
    def render(self, sig: int = 12) -> str:
        return f"{render_decimal(self.value, sig)}±{render_decimal(self.error_bound, 3)}"

    def __str__(self) -> str:
        return self.render()


def render_decimal(x: Rational, sig: int = 12) -> str:
    """Decimal rendering of an exact rational with ``sig`` significant digits."""
    x = _frac(x)
    ctx = decimal.Context(prec=sig, rounding=decimal.ROUND_HALF_EVEN, Emax=10**9, Emin=-(10**9))
    if x == 0:
        return "0"
    q = ctx.divide(_big_decimal(x.numerator), _big_decimal(x.denominator))
    return format(q, "g") if abs(q.adjusted()) < 12 else format(q, "e")


def _big_decimal(n: int) -> decimal.Decimal:
    # int -> str is capped for very large ints; go through a scaled mantissa.
    if n.bit_length() < 10_000:
        return decimal.Decimal(n)
    shift = n.bit_length() - 200
    ctx = decimal.Context(prec=80, Emax=10**9, Emin=-(10**9))
    return ctx.multiply(decimal.Decimal(n >> shift), ctx.power(decimal.Decimal(2), shift))


def render_rational(x: Rational) -> str:
    x = _frac(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


# ---------------------------------------------------------------------------
# Certified elementary functions


def refine(compute: Callable[[int], CertifiedReal], tol: Fraction, prec: int) -> CertifiedReal:
    """Evaluate ``compute`` at rising precision until the bound is <= tol."""
    tol = _frac(tol)
    if tol <= 0:
        raise ValidationError("tol must be positive")
    p = max(prec, _prec_floor)
    while True:
        r = compute(p)
        if r.error_bound <= tol:
            return r
        if p >= MAX_PREC:
            raise PrecisionError(f"could not reach tolerance {float(tol):.3g} at {p} bits")
        p *= 2


def with_prec(p: int, fn):
    old = iv.prec
    iv.prec = p
    try:
        return fn()
    finally:
        iv.prec = old


def clog(x: Union[CertifiedReal, Rational], tol: Rational = Fraction(1, 1 << 100), prec: int = DEFAULT_PREC) -> CertifiedReal:
    """Certified natural logarithm of a positive certified value."""
    x = x if isinstance(x, CertifiedReal) else CertifiedReal.exact(x)
    if x.lo <= 0:
        raise PrecisionError("log argument not certified positive")
    if x.value == 1 and x.is_exact:
        return CertifiedReal.exact(0)
    if x.is_exact and x.value.denominator == 1:
        n = x.value.numerator
        return refine(lambda p: with_prec(p, lambda: CertifiedReal.from_iv(iv.log(iv.mpf(n)))), tol, prec)
    return refine(lambda p: with_prec(p, lambda: CertifiedReal.from_iv(iv.log(x.to_iv()))), tol, prec)


def cexp(x: Union[CertifiedReal, Rational], tol: Rational = Fraction(1, 1 << 100), prec: int = DEFAULT_PREC) -> CertifiedReal:
    x = x if isinstance(x, CertifiedReal) else CertifiedReal.exact(x)
    return refine(lambda p: with_prec(p, lambda: CertifiedReal.from_iv(iv.exp(x.to_iv()))), tol, prec)


def cpow(base: Union[CertifiedReal, Rational], exponent: Rational, tol: Rational = Fraction(1, 1 << 100), prec: int = DEFAULT_PREC) -> CertifiedReal:
    """Certified ``base ** exponent`` for positive base and rational exponent."""
    e = _frac(exponent)
    b = base if isinstance(base, CertifiedReal) else CertifiedReal.exact(base)
    if b.is_exact:
        exact = _exact_rational_power(b.value, e)
        if exact is not None:
            return CertifiedReal.exact(exact)
    if b.lo <= 0:
        raise PrecisionError("power base not certified positive")

    def compute(p):
        def inner():
            ei = iv.mpf(e.numerator) / e.denominator
            return CertifiedReal.from_iv(iv.exp(ei * iv.log(b.to_iv())))
        return with_prec(p, inner)

    return refine(compute, tol, prec)


def _exact_rational_power(b: Fraction, e: Fraction):
    """``b**e`` if it is rational, else None (rational b > 0, rational e)."""
    if b <= 0:
        return None
    num = _integer_root(b.numerator, e.denominator)
    den = _integer_root(b.denominator, e.denominator)
    if num is None or den is None:
        return None
    return Fraction(num, den) ** e.numerator


def _integer_root(n: int, k: int):
    if n < 0:
        return None
    if k == 1:
        return n
    lo, hi = 0, 1 << (n.bit_length() // k + 1)
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if mid**k <= n:
            lo = mid
        else:
            hi = mid - 1
    return lo if lo**k == n else None


def cmin(a: CertifiedReal, b: CertifiedReal) -> CertifiedReal:
    """Certified min of two enclosures (the hull of the possible minima)."""
    return CertifiedReal.from_bounds(min(a.lo, b.lo), min(a.hi, b.hi))


def cmax(a: CertifiedReal, b: CertifiedReal) -> CertifiedReal:
    return CertifiedReal.from_bounds(max(a.lo, b.lo), max(a.hi, b.hi))


def decide_less(make: Callable[[Fraction], CertifiedReal], rhs: Union[CertifiedReal, Rational],
                tol: Fraction = Fraction(1, 1 << 64), min_tol: Fraction = Fraction(1, 1 << 2048)) -> bool:
    """Decide ``x < rhs`` where ``make(tol)`` encloses ``x`` to within tol.

    Tightens the tolerance until the enclosures separate.  Exact ties are
    decided as "not less".
    """
    r = rhs if isinstance(rhs, CertifiedReal) else CertifiedReal.exact(rhs)
    t = _frac(tol)
    while True:
        x = make(t)
        if x.certainly_lt(r):
            return True
        if x.lo >= r.hi:
            return False
        if x.is_exact and r.is_exact:
            return x.value < r.value
        if t < min_tol:
            raise PrecisionError("comparison undecided at minimum tolerance")
        t = t * t if t < 1 else t / 2
