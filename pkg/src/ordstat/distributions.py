"""Continuous cdfs used as the second-group distribution and as p-value alternatives.

Every cdf here is a small frozen dataclass with ``eval`` (and ``quantile``
where it is needed) plus a ``spec`` string that :func:`parse_cdf` reads
back, so CLI runs can be reproduced from their output.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy import special

from .recursions import BoundaryError, TransformedBoundaries

__all__ = [
    "ChiSqAlternative",
    "NormalCdf",
    "PowerCdf",
    "SurvivalTransformedCdf",
    "UniformCdf",
    "ZTestAlternative",
    "cdf_values",
    "grid_is_monotone",
    "noncentral_chisq_cdf",
    "normal_cdf",
    "normal_quantile",
    "parse_cdf",
    "reduce_to_uniform",
    "ztest_alt_cdf",
]

SERIES_TOL = 1e-15


def normal_cdf(x: float) -> float:
    """Standard normal cdf via the complementary error function."""
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


def _normal_pdf(x: float) -> float:
    return math.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)


def normal_quantile(p: float) -> float:
    """Inverse of :func:`normal_cdf` on (0, 1), polished by one Newton step."""
    if not 0.0 < p < 1.0:
        raise ValueError(f"normal_quantile needs p in (0, 1), got {p!r}")
    x = float(special.ndtri(p))
    d = _normal_pdf(x)
    if d > 0.0:
        x -= (normal_cdf(x) - p) / d
    return x


def ztest_alt_cdf(t: float, N: int) -> float:
    """Cdf of the two-sided one-sample z-test p-value when the mean shift is ``sqrt(N)``.

    Written as ``Phi(q - s) + Phi(q + s)`` with ``q = Phi^{-1}(t/2)``, which
    avoids forming ``1 - t/2`` for small ``t``.
    """
    t = float(t)
    if t <= 0.0:
        return 0.0
    if t >= 1.0:
        return 1.0
    q = normal_quantile(t / 2.0)
    s = math.sqrt(N)
    return min(1.0, max(0.0, normal_cdf(q - s) + normal_cdf(q + s)))


def _chi2_central(x: float, nu: float) -> float:
    return float(special.gammainc(nu / 2.0, x / 2.0))


def noncentral_chisq_cdf(x: float, nu: float, mu: float) -> float:
    """Noncentral chi-squared cdf as a Poisson mixture of central ones.

    ``sum_j Pois(j; mu/2) * P(nu/2 + j, x/2)``, summed outward from the
    Poisson mode until the remaining Poisson mass drops below ``1e-15``.
    """
    if x <= 0.0:
        return 0.0
    if mu == 0.0:
        return _chi2_central(x, nu)
    lam = mu / 2.0
    mode = int(lam)
    a, z = nu / 2.0, x / 2.0

    def weight(j):
        return math.exp(-lam + j * math.log(lam) - math.lgamma(j + 1.0))

    total = 0.0
    # upward from the mode; weights shrink by lam / (j + 1)
    j = mode
    while True:
        w = weight(j)
        total += w * float(special.gammainc(a + j, z))
        r = lam / (j + 2.0)
        if r < 1.0 and w * r / (1.0 - r) < SERIES_TOL:
            break
        j += 1
    # downward; weights shrink by j / lam
    j = mode - 1
    while j >= 0:
        w = weight(j)
        total += w * float(special.gammainc(a + j, z))
        r = j / lam
        if r < 1.0 and w * r / (1.0 - r) < SERIES_TOL:
            break
        j -= 1
    return min(1.0, max(0.0, total))


def _chi2_central_quantile(p: float, nu: float) -> float:
    return 2.0 * float(special.gammaincinv(nu / 2.0, p))


@dataclass(frozen=True)
class UniformCdf:
    """``F(t) = t`` on [0, 1]; exact on rational inputs."""

    exact = True

    def eval(self, t):
        return min(max(t, 0), 1)

    def quantile(self, p):
        return p

    @property
    def spec(self) -> str:
        return "uniform"


@dataclass(frozen=True)
class PowerCdf:
    """``F(t) = t**k`` on [0, 1]; exact on rational inputs."""

    k: int = 2
    exact = True

    def eval(self, t):
        t = min(max(t, 0), 1)
        return t**self.k

    def quantile(self, p):
        return float(p) ** (1.0 / self.k)

    @property
    def spec(self) -> str:
        return f"power(k={self.k})"


@dataclass(frozen=True)
class ZTestAlternative:
    N: int = 5
    exact = False

    def eval(self, t):
        return ztest_alt_cdf(float(t), self.N)

    @property
    def spec(self) -> str:
        return f"ztest(N={self.N})"


@dataclass(frozen=True)
class ChiSqAlternative:
    """Two-sided chi-squared p-value cdf under noncentrality ``mu``.

    The p-value ``2 min(G0(X), 1 - G0(X))`` with ``X ~ chi2(nu, mu)`` and
    ``G0`` the central cdf has cdf
    ``G_mu(G0^{-1}(t/2)) + 1 - G_mu(G0^{-1}(1 - t/2))``.
    ``tail="upper"`` instead uses the one-sided p-value ``1 - G0(X)``.
    """

    nu: int = 2
    mu: float = 1.0
    tail: str = "two-sided"
    exact = False

    def eval(self, t):
        t = float(t)
        if t <= 0.0:
            return 0.0
        if t >= 1.0:
            return 1.0
        if self.tail == "upper":
            c = 2.0 * float(special.gammainccinv(self.nu / 2.0, t))
            return 1.0 - noncentral_chisq_cdf(c, self.nu, self.mu)
        lo = _chi2_central_quantile(t / 2.0, self.nu)
        hi = 2.0 * float(special.gammainccinv(self.nu / 2.0, t / 2.0))
        val = noncentral_chisq_cdf(lo, self.nu, self.mu) + (1.0 - noncentral_chisq_cdf(hi, self.nu, self.mu))
        return min(1.0, max(0.0, val))

    @property
    def spec(self) -> str:
        extra = "" if self.tail == "two-sided" else f",tail={self.tail}"
        return f"chisq(nu={self.nu},mu={self.mu!r}{extra})"


@dataclass(frozen=True)
class NormalCdf:
    """Normal cdf on the real line, for problems not yet reduced to [0, 1]."""

    loc: float = 0.0
    scale: float = 1.0
    exact = False

    def eval(self, x):
        return normal_cdf((float(x) - self.loc) / self.scale)

    def quantile(self, p):
        return self.loc + self.scale * normal_quantile(float(p))

    @property
    def spec(self) -> str:
        return f"normal(loc={self.loc!r},scale={self.scale!r})"


@dataclass(frozen=True)
class SurvivalTransformedCdf:
    """``t -> 1 - inner(1 - t)``: the cdf of ``1 - X`` when ``X ~ inner``."""

    inner: object

    @property
    def exact(self):
        return getattr(self.inner, "exact", False)

    def eval(self, t):
        return 1 - self.inner.eval(1 - t)

    @property
    def spec(self) -> str:
        return f"survival({self.inner.spec})"


_CALL_RE = re.compile(r"^\s*([a-z_]+)\s*(?:\((.*)\))?\s*$")


def _kwargs(body: str) -> dict:
    out = {}
    if not body or not body.strip():
        return out
    for part in body.split(","):
        key, sep, val = part.partition("=")
        if not sep:
            raise ValueError(f"expected key=value in cdf spec, got {part!r}")
        out[key.strip()] = val.strip()
    return out


def parse_cdf(text: str):
    """Parse ``uniform``, ``power(k=2)``, ``ztest(N=5)``, ``chisq(nu=2,mu=1)``,
    ``normal(loc=0,scale=1)`` or ``survival(<spec>)``."""
    text = text.strip()
    if text.startswith("survival(") and text.endswith(")"):
        return SurvivalTransformedCdf(parse_cdf(text[len("survival("):-1]))
    m = _CALL_RE.match(text)
    if not m:
        raise ValueError(f"cannot parse cdf spec {text!r}")
    name, kw = m.group(1), _kwargs(m.group(2))
    try:
        if name == "uniform":
            return UniformCdf()
        if name == "power":
            return PowerCdf(int(kw.get("k", 2)))
        if name == "ztest":
            return ZTestAlternative(int(kw.get("N", 5)))
        if name == "chisq":
            return ChiSqAlternative(int(kw.get("nu", 2)), float(kw.get("mu", 1.0)), kw.get("tail", "two-sided"))
        if name == "normal":
            return NormalCdf(float(kw.get("loc", 0.0)), float(kw.get("scale", 1.0)))
    except (TypeError, ValueError) as exc:
        raise ValueError(f"bad parameters in cdf spec {text!r}: {exc}") from None
    raise ValueError(f"unknown cdf {name!r}")


def reduce_to_uniform(G1, G2, b, n1: int, n2: int) -> TransformedBoundaries:
    """Map a ``(G1, G2)`` two-group problem on thresholds ``b`` to Uniform-vs-F form.

    With ``F = G2 o G1^{-1}`` the reduced thresholds are ``u_i = G1(b_i)``
    and ``f_i = F(u_i) = G2(b_i)``, so no quantile is evaluated.
    """
    u = [G1.eval(x) for x in b]
    f = [G2.eval(x) for x in b]
    try:
        return TransformedBoundaries(u, f, n1, n2)
    except BoundaryError as exc:
        raise BoundaryError(f"reduced thresholds are not monotone: {exc}") from None


def cdf_values(cdf, t, exact: bool):
    """``cdf`` at each ``t``: exact rationals if requested and supported, else doubles."""
    if exact and getattr(cdf, "exact", False):
        return [cdf.eval(Fraction(x)) for x in t]
    return [float(cdf.eval(float(x))) for x in t]


def grid_is_monotone(cdf, n: int = 10_000) -> bool:
    vals = np.array([float(cdf.eval(x)) for x in np.linspace(0.0, 1.0, n)])
    return bool(np.all(np.diff(vals) >= 0) and vals.min() >= 0 and vals.max() <= 1)
