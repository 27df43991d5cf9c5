"""Faithfully rounded pair arithmetic.

A :class:`PairNumber` is the unevaluated sum ``hi + lo`` of two doubles.
Sums and products of nonnegative pairs accumulate error at roughly the
``2**-106`` level, so an expression tree without inaccurate cancellation
(only sums of same-signed values, or differences of inputs) rounds to a
faithful double as long as the tree parameter ``k`` stays below
``2**26 - 2`` and nothing underflows.

The error-free transformations use Knuth's TwoSum and Dekker's TwoProduct
(Veltkamp splitting). Python 3.10 exposes no fused multiply-add, and the
split-based product returns the same exact ``(p, e)`` pair whenever it is
exact, so results do not depend on which variant computed them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

__all__ = [
    "K_LIMIT",
    "FaithfulResult",
    "PairNumber",
    "faithful_round",
    "is_faithful",
    "k_parameter",
    "pair_add",
    "pair_div",
    "pair_mul",
    "pair_sub",
    "two_prod",
    "two_prod_flagged",
    "two_sum",
]

#: Largest certified tree parameter for binary64.
K_LIMIT = 2**26 - 2

_SPLITTER = 134217729.0  # 2**27 + 1
_MIN_NORMAL = 2.0**-1022
# Below this magnitude the low part of a product no longer fits in the
# normal range, so TwoProduct can lose bits.
_PROD_TINY = 2.0**-969


def two_sum(a: float, b: float) -> tuple[float, float]:
    """Return ``(s, e)`` with ``s = fl(a + b)`` and ``s + e == a + b`` exactly."""
    s = a + b
    bb = s - a
    e = (a - (s - bb)) + (b - bb)
    return s, e


def _split(a: float) -> tuple[float, float]:
    c = _SPLITTER * a
    hi = c - (c - a)
    return hi, a - hi


def two_prod(a: float, b: float) -> tuple[float, float]:
    """Return ``(p, e)`` with ``p = fl(a * b)`` and ``p + e == a * b``.

    Exact unless the product underflows (see :func:`two_prod_flagged`) or an
    operand exceeds ``2**996`` in magnitude.
    """
    p = a * b
    ah, al = _split(a)
    bh, bl = _split(b)
    e = ((ah * bh - p) + ah * bl + al * bh) + al * bl
    return p, e


def two_prod_flagged(a: float, b: float) -> tuple[float, float, bool]:
    """:func:`two_prod` plus a flag that is set when exactness is not certain."""
    p, e = two_prod(a, b)
    underflow = a != 0.0 and b != 0.0 and abs(p) < _PROD_TINY
    return p, e, underflow


def _subnormal(x: float) -> bool:
    return x != 0.0 and abs(x) < _MIN_NORMAL


class PairNumber:
    """Unevaluated sum ``hi + lo`` of two doubles with a sticky underflow flag.

    Every arithmetic operation renormalizes its result so that
    ``|lo| <= ulp(hi) / 2``. Instances are treated as immutable.
    """

    __slots__ = ("hi", "lo", "underflow")

    def __init__(self, hi: float, lo: float = 0.0, underflow: bool = False):
        self.hi = float(hi)
        self.lo = float(lo)
        self.underflow = bool(underflow)

    @classmethod
    def from_value(cls, x) -> "PairNumber":
        """Convert an int, float, Fraction, mpq or decimal string.

        Rationals are rounded to the nearest pair, exact whenever the value
        has at most about 106 significant bits.
        """
        if isinstance(x, PairNumber):
            return x
        if isinstance(x, float):
            return cls(x)
        if isinstance(x, str):
            from .scalar import parse_decimal

            x = parse_decimal(x)
        fr = Fraction(int(x.numerator), int(x.denominator)) if not isinstance(x, int) else Fraction(x)
        hi = float(fr)
        lo = float(fr - Fraction(hi)) if math.isfinite(hi) else 0.0
        hi, lo = two_sum(hi, lo)
        return cls(hi, lo)

    def exact(self) -> Fraction:
        """The exact rational value ``hi + lo``."""
        return Fraction(self.hi) + Fraction(self.lo)

    def __float__(self) -> float:
        return self.hi + self.lo

    def __repr__(self) -> str:
        flag = ", underflow=True" if self.underflow else ""
        return f"PairNumber({self.hi!r}, {self.lo!r}{flag})"

    def __eq__(self, other) -> bool:
        if not isinstance(other, PairNumber):
            other = PairNumber.from_value(other)
        return self.hi == other.hi and self.lo == other.lo

    def __hash__(self) -> int:
        return hash((self.hi, self.lo))

    def _cmp(self, other) -> int:
        if not isinstance(other, PairNumber):
            other = PairNumber.from_value(other)
        a, b = self.exact(), other.exact()
        return (a > b) - (a < b)

    def __lt__(self, other) -> bool:
        return self._cmp(other) < 0

    def __le__(self, other) -> bool:
        return self._cmp(other) <= 0

    def __gt__(self, other) -> bool:
        return self._cmp(other) > 0

    def __ge__(self, other) -> bool:
        return self._cmp(other) >= 0

    def __neg__(self) -> "PairNumber":
        return PairNumber(-self.hi, -self.lo, self.underflow)

    def __add__(self, other):
        if not isinstance(other, PairNumber):
            return NotImplemented
        return pair_add(self, other)

    def __sub__(self, other):
        if not isinstance(other, PairNumber):
            return NotImplemented
        return pair_sub(self, other)

    def __mul__(self, other):
        if not isinstance(other, PairNumber):
            return NotImplemented
        return pair_mul(self, other)

    def __truediv__(self, other):
        if not isinstance(other, PairNumber):
            return NotImplemented
        return pair_div(self, other)


def _finish(hi: float, lo: float, flag: bool) -> PairNumber:
    hi, lo = two_sum(hi, lo)
    return PairNumber(hi, lo, flag or _subnormal(hi))


def pair_add(x: PairNumber, y: PairNumber) -> PairNumber:
    s, e = two_sum(x.hi, y.hi)
    return _finish(s, e + (x.lo + y.lo), x.underflow or y.underflow)


def pair_sub(x: PairNumber, y: PairNumber) -> PairNumber:
    s, e = two_sum(x.hi, -y.hi)
    return _finish(s, e + (x.lo - y.lo), x.underflow or y.underflow)


def pair_mul(x: PairNumber, y: PairNumber) -> PairNumber:
    p, e, uf = two_prod_flagged(x.hi, y.hi)
    return _finish(p, e + (x.hi * y.lo + x.lo * y.hi), uf or x.underflow or y.underflow)


def pair_div(x: PairNumber, y: PairNumber) -> PairNumber:
    if y.hi == 0.0:
        raise ZeroDivisionError("pair division by zero")
    q = x.hi / y.hi
    p, e, uf = two_prod_flagged(q, y.hi)
    lo = (((x.hi - p) - e) + x.lo - q * y.lo) / (y.hi + y.lo)
    return _finish(q, lo, uf or x.underflow or y.underflow or (x.hi != 0.0 and q == 0.0))


def faithful_round(x: PairNumber) -> float:
    """Round a pair to a double: ``fl(hi + lo)``."""
    return x.hi + x.lo


def is_faithful(value: float, exact) -> bool:
    """True if ``value`` is ``exact`` or one of the two doubles enclosing it."""
    exact = Fraction(exact)
    v = Fraction(value)
    if v == exact:
        return True
    if v < exact:
        return Fraction(math.nextafter(value, math.inf)) > exact
    return Fraction(math.nextafter(value, -math.inf)) < exact


def k_parameter(n1: int, n2: int) -> int:
    """Tree parameter of the pair-arithmetic Noe recursion for group sizes ``n1, n2``.

    ``n1 * n2 + 8 * (n1 + n2) - 2``. The published closed form ends in ``- 7``
    but the published value ``k(400, 400) = 166398`` needs ``- 2``; the larger
    of the two is kept since a larger ``k`` only tightens the certificate, and
    either way ``n1, n2 <= 8184`` stays within :data:`K_LIMIT`.
    """
    if n1 < 0 or n2 < 0 or n1 + n2 < 2:
        raise ValueError(f"k(n1, n2) needs n1 + n2 >= 2, got n1={n1}, n2={n2}")
    return n1 * n2 + 8 * (n1 + n2) - 2


@dataclass(frozen=True)
class FaithfulResult:
    value: float
    underflow_flag: bool
    k_used: int
    k_limit: int = K_LIMIT

    @property
    def certified(self) -> bool:
        """Whether ``value`` is guaranteed to be a faithful rounding."""
        return not self.underflow_flag and self.k_used <= self.k_limit
