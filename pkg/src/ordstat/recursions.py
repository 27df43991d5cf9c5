"""Two-group recursions for the joint cdf of order statistics.

For ``n1`` Uniform[0, 1] variables and ``n2`` variables with cdf ``F``, all
independent, the kernels compute the table

    psi[i1][i2] = P(X_{1:i} <= b_1, ..., X_{i:i} <= b_i),   i = i1 + i2,

over the first ``i1`` uniform and first ``i2`` F-distributed variables.
Inputs are the thresholds ``u = (b_1, ..., b_n)`` and ``f = (F(b_1), ...)``.

* :func:`bolshev_one_group` / :func:`bolshev_two_group`: Bolshev's recursion,
  cheap and exact in rational arithmetic, unstable in floating point.
* :func:`steck_two_group`: Steck's recursion, kept as a reference.
* :func:`noe_two_group`: Noe's recursion. Every summand is nonnegative, so
  in pair arithmetic the result is faithfully rounded.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .pair import K_LIMIT, FaithfulResult, PairNumber, k_parameter
from .scalar import (
    PAIR,
    RATIONAL,
    Backend,
    CountingBackend,
    OpCounter,
    binomial_rows,
    get_backend,
    power,
    to_fraction,
)

__all__ = [
    "BoundaryError",
    "PsiTable",
    "TransformedBoundaries",
    "bolshev_one_group",
    "bolshev_two_group",
    "count_operations",
    "enclosure",
    "enclosure_epsilon",
    "noe_two_group",
    "psi_suffix",
    "psi_table",
    "steck_two_group",
    "threshold_differences",
]


class BoundaryError(ValueError):
    """Thresholds are not a nondecreasing sequence in [0, 1]."""


def _check_monotone(values: Sequence, name: str) -> None:
    prev = Fraction(0)
    for i, v in enumerate(values):
        x = to_fraction(v)
        if x < 0 or x > 1:
            raise BoundaryError(f"{name}[{i}] = {float(x)!r} is outside [0, 1]")
        if x < prev:
            raise BoundaryError(f"{name} decreases at index {i}: {float(prev)!r} > {float(x)!r}")
        prev = x


@dataclass(frozen=True)
class TransformedBoundaries:
    """Thresholds ``u`` and their images ``f = F(u)`` for group sizes ``n1``, ``n2``.

    Entries may be floats, Fractions, mpq, PairNumbers or decimal strings;
    each kernel converts them into its working scalar.
    """

    u: tuple
    f: tuple
    n1: int
    n2: int

    def __post_init__(self):
        object.__setattr__(self, "u", tuple(self.u))
        object.__setattr__(self, "f", tuple(self.f))
        if self.n1 < 0 or self.n2 < 0:
            raise BoundaryError("group sizes must be nonnegative")
        n = self.n1 + self.n2
        if len(self.u) != n or len(self.f) != n:
            raise BoundaryError(f"expected {n} thresholds, got {len(self.u)} and {len(self.f)}")
        _check_monotone(self.u, "u")
        _check_monotone(self.f, "f")

    @property
    def n(self) -> int:
        return self.n1 + self.n2

    @classmethod
    def one_group(cls, b: Sequence) -> "TransformedBoundaries":
        return cls(tuple(b), tuple(b), len(b), 0)

    @classmethod
    def from_cdf(cls, b: Sequence, cdf, n1: int, n2: int) -> "TransformedBoundaries":
        """Build ``f`` by evaluating ``cdf`` (anything with ``eval``) at each threshold."""
        b = tuple(b)
        return cls(b, tuple(cdf.eval(x) for x in b), n1, n2)


@dataclass
class PsiTable:
    psi: list
    backend: str
    kernel: str
    underflow: np.ndarray | None = None
    k_used: int | None = None
    k_limit: int = K_LIMIT
    meta: dict = field(default_factory=dict)

    @property
    def n1(self) -> int:
        return len(self.psi) - 1

    @property
    def n2(self) -> int:
        return len(self.psi[0]) - 1

    def __getitem__(self, idx):
        i1, i2 = idx
        return self.psi[i1][i2]

    def to_numpy(self) -> np.ndarray:
        """Entries as doubles (pair entries are faithfully rounded)."""
        be = get_backend(self.backend)
        return np.array([[be.to_float(x) for x in row] for row in self.psi], dtype=float)

    def exact(self) -> list[list[Fraction]]:
        return [[to_fraction(x) for x in row] for row in self.psi]

    def faithful(self, i1: int | None = None, i2: int | None = None) -> FaithfulResult:
        """Wrap one pair-backend entry (default ``psi[n1][n2]``) with its certificate."""
        if self.backend != "pair":
            raise ValueError("faithful() only applies to pair-backend tables")
        i1 = self.n1 if i1 is None else i1
        i2 = self.n2 if i2 is None else i2
        x = self.psi[i1][i2]
        flag = bool(self.underflow[i1, i2]) if self.underflow is not None else x.underflow
        return FaithfulResult(x.hi + x.lo, flag, self.k_used or 0, self.k_limit)


def _convert(tb: TransformedBoundaries, be: Backend):
    return [be.convert(x) for x in tb.u], [be.convert(x) for x in tb.f]


def _reject_pair(be: Backend, kernel: str) -> None:
    if be is PAIR or getattr(be, "inner", None) is PAIR:
        raise ValueError(
            f"{kernel} subtracts computed intermediates, so pair arithmetic cannot "
            "certify it; use the noe kernel for the pair backend")


def bolshev_one_group(b: Sequence, backend=RATIONAL):
    """``P(U_{1:n} <= b_1, ..., U_{n:n} <= b_n)`` for ``n`` iid uniforms.

    Uses ``3n**2 + n - 1`` arithmetic operations.

    >>> from fractions import Fraction as Fr
    >>> bolshev_one_group([Fr(1, 4), Fr(1, 2)])
    mpq(3,16)
    """
    be = get_backend(backend)
    _reject_pair(be, "bolshev")
    _check_monotone(b, "b")
    one = be.one
    n = len(b)
    c = [one - be.convert(x) for x in b]
    if n == 0:
        return one
    s = [None] * n
    s[0] = c[0]
    for k in range(2, n + 1):
        kk = be.from_int(k)
        v = one
        for j in range(1, k):
            v = v - s[j - 1]
            s[j - 1] = s[j - 1] * c[j - 1] * kk / (kk - (be.from_int(j) - one))
        s[k - 1] = kk * v * c[k - 1]
    total = be.zero
    for x in s:
        total = total + x
    return one - total


def bolshev_two_group(tb: TransformedBoundaries, backend=RATIONAL) -> PsiTable:
    """Full Ψ table by the generalized Bolshev recursion.

    Coefficients are updated in place, so memory is O(n1 * n2); the loop
    structure follows the efficient generalized algorithm line by line.
    """
    be = get_backend(backend)
    _reject_pair(be, "bolshev")
    n1, n2 = tb.n1, tb.n2
    v1, v2 = _convert(tb, be)
    one = be.one
    r = [[one] * (n2 + 1) for _ in range(n1 + 1)]
    M = [[one] * (n2 + 1) for _ in range(n1 + 1)]
    M0 = [one] * (n1 + 1)
    fi = be.from_int
    for m1 in range(n1 + 1):
        for m2 in range(n2 + 1):
            for k1 in range(m1 + 1):
                for k2 in range(m2 + 1):
                    if k1 < m1 or k2 < m2:
                        r[m1][m2] = r[m1][m2] - M[k1][k2] * r[k1][k2]
                    if m2 < n2:
                        M[k1][k2] = M[k1][k2] * fi(m2 + 1) / fi(m2 + 1 - k2) * (one - v2[k1 + k2])
                if m2 < n2 and k1 < m1:
                    M[k1][m2 + 1] = M[k1 + 1][m2] * fi(k1 + 1) / fi(m1 - k1) * (one - v1[k1 + m2 + 1])
        if m1 < n1:
            for k1 in range(m1 + 1):
                M0[k1] = M0[k1] * fi(m1 + 1) / fi(m1 + 1 - k1) * (one - v1[k1])
                M[k1][0] = M0[k1]
    return PsiTable(r, be.name, "bolshev")


def steck_two_group(tb: TransformedBoundaries, backend=RATIONAL) -> PsiTable:
    """Full Ψ table by the generalized Steck recursion.

    ``psi(m1, m2) = b_m**m1 F(b_m)**m2 - sum M(k1, k2) psi(k1, k2)`` over
    ``k1 + k2 <= m - 2``. Each anti-diagonal of ``M`` starts from a closed
    form (powers by squaring) and is walked with the ratio recursion.
    """
    be = get_backend(backend)
    _reject_pair(be, "steck")
    n1, n2 = tb.n1, tb.n2
    u, f = _convert(tb, be)
    one, zero = be.one, be.zero
    fi = be.from_int
    C = binomial_rows(max(n1, n2), be)
    psi = [[zero] * (n2 + 1) for _ in range(n1 + 1)]
    psi[0][0] = one
    for m1 in range(n1 + 1):
        for m2 in range(n2 + 1):
            m = m1 + m2
            if m == 0:
                continue
            um, fm = u[m - 1], f[m - 1]
            acc = power(um, m1, one) * power(fm, m2, one)
            for s in range(m - 1):
                du = um - u[s]
                df = fm - f[s]
                if s <= m2:
                    k1, k2 = 0, s
                    coef = C[m2][s] * power(du, m1, one) * power(df, m2 - s, one)
                else:
                    k1, k2 = s - m2, m2
                    coef = C[m1][k1] * power(du, m1 - k1, one)
                degenerate = du == zero
                while True:
                    acc = acc - coef * psi[k1][k2]
                    if k2 == 0 or k1 == m1:
                        break
                    if degenerate:
                        coef = C[m1][k1 + 1] * C[m2][k2 - 1] * power(du, m1 - k1 - 1, one) * power(df, m2 - k2 + 1, one)
                    else:
                        coef = coef * df / du * fi(m1 - k1) / fi(k1 + 1) * fi(k2) / fi(m2 - k2 + 1)
                    k1, k2 = k1 + 1, k2 - 1
            psi[m1][m2] = acc
    return PsiTable(psi, be.name, "steck")


def _noe_generic(u, f, n1, n2, be):
    n = n1 + n2
    one, zero = be.one, be.zero
    psi = [[zero] * (n2 + 1) for _ in range(n1 + 1)]
    psi[0][0] = one
    if n == 0:
        return psi
    C = binomial_rows(max(n1, n2), be)
    a1 = [one]
    for _ in range(n1):
        a1.append(a1[-1] * u[0])
    a2 = [one]
    for _ in range(n2):
        a2.append(a2[-1] * f[0])
    Q = [[a1[i1] * a2[i2] for i2 in range(n2 + 1)] for i1 in range(n1 + 1)]
    for i1, i2 in ((1, 0), (0, 1)):
        if i1 <= n1 and i2 <= n2:
            psi[i1][i2] = Q[i1][i2]
    for m in range(2, n + 1):
        d1 = u[m - 1] - u[m - 2]
        d2 = f[m - 1] - f[m - 2]
        a1 = [one]
        for _ in range(n1):
            a1.append(a1[-1] * d1)
        a2 = [one]
        for _ in range(n2):
            a2.append(a2[-1] * d2)
        R1 = [[C[i][k] * a1[i - k] for k in range(i + 1)] for i in range(n1 + 1)]
        R2 = [[C[i][k] * a2[i - k] for k in range(i + 1)] for i in range(n2 + 1)]
        new = [[zero] * (n2 + 1) for _ in range(n1 + 1)]
        for i1 in range(n1 + 1):
            r1 = R1[i1]
            for i2 in range(n2 + 1):
                if i1 + i2 < m:
                    continue
                r2 = R2[i2]
                acc = None
                for k1 in range(max(0, m - 1 - i2), i1 + 1):
                    q = Q[k1]
                    inner = None
                    for k2 in range(max(0, m - 1 - k1), i2 + 1):
                        t = r2[k2] * q[k2]
                        inner = t if inner is None else inner + t
                    t = r1[k1] * inner
                    acc = t if acc is None else acc + t
                new[i1][i2] = acc
                if i1 + i2 == m:
                    psi[i1][i2] = acc
        Q = new
    return psi


def _pair_diffs(values: list[PairNumber]):
    hi = np.empty(len(values))
    lo = np.empty(len(values))
    prev = None
    for i, x in enumerate(values):
        d = x if prev is None else x - prev
        hi[i], lo[i] = d.hi, d.lo
        prev = x
    return hi, lo


def _noe_pair_jit(u, f, n1, n2, threads):
    from . import _noe_jit

    d1h, d1l = _pair_diffs(u)
    d2h, d2l = _pair_diffs(f)
    h, l, fl = _noe_jit.run(n1, n2, d1h, d1l, d2h, d2l, threads)
    return [[PairNumber(h[i, j], l[i, j], fl[i, j]) for j in range(n2 + 1)] for i in range(n1 + 1)]


def noe_two_group(tb: TransformedBoundaries, backend=PAIR, threads: int | None = None,
                  jit: bool = True) -> PsiTable:
    """Full Ψ table by the generalized Noe recursion.

    Layers ``m = 1..n`` are computed in order, keeping only the previous one.
    With the pair backend the compiled kernel runs by default (``jit=False``
    forces the pure-Python path, which yields identical bits); cells of one
    layer are independent, so ``threads > 1`` parallelizes each layer
    without changing the result.
    """
    be = get_backend(backend)
    u, f = _convert(tb, be)
    n1, n2 = tb.n1, tb.n2
    if be is PAIR and jit and tb.n > 0:
        psi = _noe_pair_jit(u, f, n1, n2, threads)
    else:
        psi = _noe_generic(u, f, n1, n2, be)
    table = PsiTable(psi, be.name, "noe")
    if be is PAIR:
        table.underflow = np.array([[x.underflow for x in row] for row in psi], dtype=bool)
        table.k_used = k_parameter(n1, n2) if tb.n >= 2 else 0
    return table


KERNELS: dict[str, Callable] = {
    "bolshev": bolshev_two_group,
    "steck": steck_two_group,
    "noe": noe_two_group,
}


def psi_table(tb: TransformedBoundaries, kernel: str = "noe", backend="pair", threads=None) -> PsiTable:
    """Dispatch to a kernel by name."""
    if kernel not in KERNELS:
        raise ValueError(f"unknown kernel {kernel!r}; choose from {sorted(KERNELS)}")
    if kernel == "noe":
        return noe_two_group(tb, backend, threads=threads)
    return KERNELS[kernel](tb, backend)


def _complement(x, be: Backend):
    # 1 - x, exact for rational and pair inputs given as doubles
    return be.one - be.convert(x)


def psi_suffix(t: Sequence, k: int, n1: int, n2: int, f_t: Sequence | None = None,
               kernel: str = "noe", backend="pair"):
    """Ψ on the reversed complementary critical values ``1 - t_m, ..., 1 - t_{k+1}``.

    ``n1`` variables are uniform and ``n2`` have cdf ``Fbar(s) = 1 - F(1 - s)``,
    whose values ``1 - F(t_i)`` come from ``f_t = (F(t_1), ..., F(t_m))``.
    Returns ``Ψ(n1, n2)`` with ``n1 + n2 = m - k``; an empty suffix gives 1.
    """
    be = get_backend(backend)
    m = len(t)
    if n1 + n2 != m - k:
        raise ValueError(f"n1 + n2 must equal m - k = {m - k}")
    if k == m:
        return be.one
    u = [_complement(t[i], be) for i in range(m - 1, k - 1, -1)]
    if f_t is None:
        if n2:
            raise ValueError("f_t is required when n2 > 0")
        fb = u
    else:
        fb = [_complement(f_t[i], be) for i in range(m - 1, k - 1, -1)]
    table = psi_table(TransformedBoundaries(u, fb, n1, n2), kernel, be)
    return table[n1, n2]


def count_operations(kernel: str, tb: TransformedBoundaries, inner="double") -> OpCounter:
    """Instrumented run of ``kernel`` in ``{"bolshev1", "bolshev2", "steck2", "noe2"}``."""
    be = CountingBackend(inner)
    if kernel == "bolshev1":
        if tb.n2:
            raise ValueError("bolshev1 is the one-group recursion; n2 must be 0")
        bolshev_one_group(tb.u, be)
    elif kernel == "bolshev2":
        bolshev_two_group(tb, be)
    elif kernel == "steck2":
        steck_two_group(tb, be)
    elif kernel == "noe2":
        noe_two_group(tb, be, jit=False)
    else:
        raise ValueError(f"unknown kernel {kernel!r}")
    return be.counter


def threshold_differences(tb: TransformedBoundaries) -> list[Fraction]:
    """``(b_1, b_2 - b_1, ..., F(b_1), F(b_2) - F(b_1), ...)`` as exact rationals."""
    out = []
    for seq in (tb.u, tb.f):
        prev = Fraction(0)
        for x in seq:
            x = to_fraction(x)
            out.append(x - prev)
            prev = x
    return out


def enclosure(table: PsiTable, eps) -> tuple[list[list[Fraction]], list[list[Fraction]]]:
    """Bounds on Ψ when every threshold difference is known to relative error ``eps``.

    Ψ(i1, i2) is a polynomial of degree ``i1 + i2`` with nonnegative
    coefficients in those differences, which gives the conservative band
    ``Ψ * ((1 - 2 eps)**i, (1 + 2 eps)**i)``.
    """
    eps = Fraction(eps)
    exact = table.exact()
    lo = [[x * (1 - 2 * eps) ** (i1 + i2) for i2, x in enumerate(row)] for i1, row in enumerate(exact)]
    hi = [[x * (1 + 2 * eps) ** (i1 + i2) for i2, x in enumerate(row)] for i1, row in enumerate(exact)]
    return lo, hi


def enclosure_epsilon(tb: TransformedBoundaries, rel_err=Fraction(1, 2**50)) -> Fraction:
    """Relative error of the threshold differences when each ``u_i`` and ``f_i``
    is only known to relative accuracy ``rel_err``.

    Returns a value ``>= 1`` (no useful bound) when a difference could vanish.
    """
    rel_err = Fraction(rel_err)
    worst = Fraction(0)
    for seq in (tb.u, tb.f):
        prev = Fraction(0)
        for x in seq:
            x = to_fraction(x)
            d = x - prev
            slack = rel_err * (x + prev)
            if slack == 0:
                prev = x
                continue
            if d <= slack:
                return Fraction(1)
            worst = max(worst, slack / (d - slack))
            prev = x
    return worst
