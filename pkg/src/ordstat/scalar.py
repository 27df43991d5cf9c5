"""Scalar backends shared by the recursion kernels.

Kernels are written against a tiny contract: ``+ - * /`` between scalars of
one backend, comparison, and the constructors on :class:`Backend`. Three
backends conform:

* ``double``: Python floats (IEEE-754 binary64, round to nearest).
* ``pair``: :class:`~ordstat.pair.PairNumber`, faithfully rounded.
* ``rational``: ``gmpy2.mpq``, exact and always in lowest terms.

:class:`CountingBackend` wraps any of them and tallies every operation.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction

import gmpy2

from .pair import PairNumber

__all__ = [
    "DOUBLE",
    "PAIR",
    "RATIONAL",
    "Backend",
    "Counted",
    "CountingBackend",
    "OpCounter",
    "binomial_rows",
    "counted_eval",
    "get_backend",
    "parse_decimal",
    "power",
    "to_fraction",
]

_DECIMAL_RE = re.compile(r"^\s*([+-]?)(\d+)(?:\.(\d*))?(?:[eE]([+-]?\d+))?\s*$|^\s*([+-]?)\.(\d+)(?:[eE]([+-]?\d+))?\s*$")
_FRACTION_RE = re.compile(r"^\s*([+-]?\d+)\s*/\s*(\d+)\s*$")


def parse_decimal(text: str) -> gmpy2.mpq:
    """Parse a decimal literal (or ``p/q``) exactly into a rational.

    >>> parse_decimal("0.05")
    mpq(1,20)
    """
    m = _FRACTION_RE.match(text)
    if m:
        num, den = int(m.group(1)), int(m.group(2))
        if den == 0:
            raise ValueError(f"zero denominator in {text!r}")
        return gmpy2.mpq(num, den)
    m = _DECIMAL_RE.match(text)
    if not m:
        raise ValueError(f"malformed decimal literal: {text!r}")
    if m.group(2) is not None:
        sign, whole, frac, exp = m.group(1), m.group(2), m.group(3) or "", m.group(4)
    else:
        sign, whole, frac, exp = m.group(5), "0", m.group(6), m.group(7)
    value = gmpy2.mpq(int(whole + frac), 10 ** len(frac))
    if exp:
        e = int(exp)
        value = value * 10**e if e >= 0 else value / 10**-e
    return -value if sign == "-" else value


def to_fraction(x) -> Fraction:
    """Exact :class:`~fractions.Fraction` for any supported scalar or literal."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, PairNumber):
        return x.exact()
    if isinstance(x, Counted):
        return to_fraction(x.v)
    if isinstance(x, str):
        x = parse_decimal(x)
    if isinstance(x, (int, float)):
        return Fraction(x)
    return Fraction(int(x.numerator), int(x.denominator))


class Backend:
    """Constructors and conversions for one scalar type."""

    name: str = ""

    @property
    def zero(self):
        return self.from_int(0)

    @property
    def one(self):
        return self.from_int(1)

    def from_int(self, k: int):
        raise NotImplementedError

    def convert(self, x):
        raise NotImplementedError

    def to_float(self, x) -> float:
        return float(x)

    def __repr__(self) -> str:
        return f"<{type(self).__name__} {self.name}>"


class _DoubleBackend(Backend):
    name = "double"

    def from_int(self, k):
        return float(k)

    def convert(self, x):
        if isinstance(x, str):
            return float(parse_decimal(x))
        return float(x)


class _RationalBackend(Backend):
    name = "rational"

    def from_int(self, k):
        return gmpy2.mpq(k)

    def convert(self, x):
        if isinstance(x, str):
            return parse_decimal(x)
        if isinstance(x, PairNumber):
            x = x.exact()
        if isinstance(x, Fraction):
            return gmpy2.mpq(x.numerator, x.denominator)
        return gmpy2.mpq(x)


class _PairBackend(Backend):
    name = "pair"

    def from_int(self, k):
        return PairNumber.from_value(int(k))

    def convert(self, x):
        return PairNumber.from_value(x)

    def to_float(self, x) -> float:
        return x.hi + x.lo


DOUBLE = _DoubleBackend()
RATIONAL = _RationalBackend()
PAIR = _PairBackend()

_BACKENDS = {b.name: b for b in (DOUBLE, RATIONAL, PAIR)}


def get_backend(backend) -> Backend:
    if isinstance(backend, Backend):
        return backend
    try:
        return _BACKENDS[backend]
    except KeyError:
        raise ValueError(f"unknown backend {backend!r}; choose from {sorted(_BACKENDS)}") from None


@dataclass
class OpCounter:
    adds: int = 0
    subs: int = 0
    muls: int = 0
    divs: int = 0

    @property
    def total(self) -> int:
        return self.adds + self.subs + self.muls + self.divs


class Counted:
    """A scalar that reports each arithmetic operation to an :class:`OpCounter`.

    Mixing with plain numbers raises ``TypeError`` so that kernels cannot
    sneak uncounted arithmetic past the counter.
    """

    __slots__ = ("v", "c")

    def __init__(self, v, counter: OpCounter):
        self.v = v
        self.c = counter

    def _other(self, o):
        if not isinstance(o, Counted):
            raise TypeError(f"counted scalar combined with {type(o).__name__}")
        return o.v

    def __add__(self, o):
        w = self._other(o)
        self.c.adds += 1
        return Counted(self.v + w, self.c)

    def __sub__(self, o):
        w = self._other(o)
        self.c.subs += 1
        return Counted(self.v - w, self.c)

    def __mul__(self, o):
        w = self._other(o)
        self.c.muls += 1
        return Counted(self.v * w, self.c)

    def __truediv__(self, o):
        w = self._other(o)
        self.c.divs += 1
        return Counted(self.v / w, self.c)

    def __lt__(self, o):
        return self.v < self._other(o)

    def __le__(self, o):
        return self.v <= self._other(o)

    def __gt__(self, o):
        return self.v > self._other(o)

    def __ge__(self, o):
        return self.v >= self._other(o)

    def __eq__(self, o):
        return isinstance(o, Counted) and self.v == o.v

    __hash__ = None

    def __float__(self):
        return float(self.v)

    def __repr__(self):
        return f"Counted({self.v!r})"


class CountingBackend(Backend):
    """Wrap ``inner`` so every kernel operation increments :attr:`counter`."""

    def __init__(self, inner=DOUBLE, counter: OpCounter | None = None):
        self.inner = get_backend(inner)
        self.counter = counter if counter is not None else OpCounter()
        self.name = f"counted-{self.inner.name}"

    def from_int(self, k):
        return Counted(self.inner.from_int(k), self.counter)

    def convert(self, x):
        if isinstance(x, Counted):
            x = x.v
        return Counted(self.inner.convert(x), self.counter)

    def to_float(self, x) -> float:
        return self.inner.to_float(x.v)

    def unwrap(self, x):
        return x.v


def counted_eval(fn, *args, inner=DOUBLE):
    """Run ``fn(backend, *args)`` on a counting backend.

    Returns ``(value, counter)``; ``value`` is whatever ``fn`` returned,
    with counted scalars left wrapped.

    >>> value, ops = counted_eval(lambda be, a, b, c: be.convert(a) + be.convert(b) * be.convert(c), 1, 2, 3)
    >>> (ops.adds, ops.muls)
    (1, 1)
    """
    backend = CountingBackend(inner)
    value = fn(backend, *args)
    return value, backend.counter


def power(x, k: int, one):
    """``x**k`` by binary exponentiation, using only scalar multiplications."""
    if k < 0:
        raise ValueError("negative exponent")
    result = None
    base = x
    while k:
        if k & 1:
            result = base if result is None else result * base
        k >>= 1
        if k:
            base = base * base
    return one if result is None else result


def binomial_rows(n: int, backend: Backend) -> list[list]:
    """Rows ``C(i, 0..i)`` for ``i <= n`` in the working scalar.

    Generated from the top down, ``C(i, j) = C(i, j + 1) * (j + 1) / (i - j)``,
    so the rational backend stays exact and the pair backend only ever
    multiplies and divides nonnegative values.
    """
    rows = []
    for i in range(n + 1):
        row = [None] * (i + 1)
        row[i] = backend.one
        for j in range(i - 1, -1, -1):
            row[j] = row[j + 1] * backend.from_int(j + 1) / backend.from_int(i - j)
        rows.append(row)
    return rows
