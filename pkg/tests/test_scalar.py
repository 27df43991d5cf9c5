from fractions import Fraction

import gmpy2
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ordstat.pair import PairNumber
from ordstat.recursions import TransformedBoundaries, bolshev_one_group, count_operations
from ordstat.scalar import (
    DOUBLE,
    PAIR,
    RATIONAL,
    Counted,
    OpCounter,
    binomial_rows,
    counted_eval,
    get_backend,
    parse_decimal,
    power,
    to_fraction,
)


@pytest.mark.parametrize("text, value", [
    ("0.05", Fraction(1, 20)),
    ("2", Fraction(2)),
    ("0.0009765625", Fraction(1, 1024)),
    ("-1.5e-3", Fraction(-3, 2000)),
    (".25", Fraction(1, 4)),
    ("3/12", Fraction(1, 4)),
    ("1E2", Fraction(100)),
])
def test_parse_decimal(text, value):
    assert parse_decimal(text) == value


@pytest.mark.parametrize("bad", ["", "abc", "1.2.3", "1/0", "--1", "1e", "0x10"])
def test_parse_decimal_rejects(bad):
    with pytest.raises(ValueError):
        parse_decimal(bad)


@given(st.integers(-10**6, 10**6), st.integers(0, 8))
def test_decimal_round_trip(n, places):
    sign = "-" if n < 0 else ""
    digits = str(abs(n)).rjust(places + 1, "0")
    text = sign + (digits[:-places] + "." + digits[-places:] if places else digits)
    assert parse_decimal(text) == Fraction(n, 10**places)


@given(st.fractions(max_denominator=10**6), st.fractions(max_denominator=10**6).filter(lambda q: q != 0))
def test_rational_field_axioms(a, b):
    x, y = RATIONAL.convert(a), RATIONAL.convert(b)
    assert (x / y) * y == x
    assert x - x == 0
    assert x + y - y == x
    q = x / y
    assert gmpy2.gcd(q.numerator, q.denominator) == 1 and q.denominator > 0


def test_backend_lookup():
    assert get_backend("pair") is PAIR and get_backend(RATIONAL) is RATIONAL
    with pytest.raises(ValueError):
        get_backend("quad")
    assert isinstance(PAIR.one, PairNumber) and DOUBLE.zero == 0.0
    assert RATIONAL.convert("0.1") == Fraction(1, 10)


def test_counted_eval_simple():
    value, ops = counted_eval(lambda be, a, b, c: be.convert(a) + be.convert(b) * be.convert(c), 1, 2, 3)
    assert float(value) == 7.0
    assert (ops.adds, ops.subs, ops.muls, ops.divs, ops.total) == (1, 0, 1, 0, 2)


def test_counted_rejects_plain_numbers():
    c = Counted(1.0, OpCounter())
    with pytest.raises(TypeError):
        c + 1.0


def test_algorithm1_counts():
    tb = TransformedBoundaries.one_group([Fraction(i, 20) for i in range(1, 11)])
    assert count_operations("bolshev1", tb).total == 3 * 100 + 10 - 1 == 309


def test_counts_are_backend_independent():
    tb = TransformedBoundaries([Fraction(1, 8), Fraction(1, 4), Fraction(1, 2)],
                               [Fraction(1, 64), Fraction(1, 16), Fraction(1, 4)], 2, 1)
    for kernel in ("bolshev2", "steck2", "noe2"):
        a = count_operations(kernel, tb, inner="double")
        b = count_operations(kernel, tb, inner="rational")
        assert a == b


def test_power_and_binomials():
    assert power(3, 13, 1) == 3**13
    assert power(RATIONAL.convert("1/2"), 0, RATIONAL.one) == 1
    rows = binomial_rows(12, RATIONAL)
    from math import comb
    assert all(rows[i][j] == comb(i, j) for i in range(13) for j in range(i + 1))
    prow = binomial_rows(30, PAIR)[30]
    assert all(x.exact() == comb(30, j) for j, x in enumerate(prow))


def test_determinism():
    b = [Fraction(i, 37) for i in range(1, 9)]
    assert bolshev_one_group(b, DOUBLE) == bolshev_one_group(b, DOUBLE)
