"""Exact error-rate and power calculations for step-up multiple tests.

Two p-value models are supported:

* ``FM(m, m0, F)``: ``m0`` uniform null p-values and ``m - m0`` p-values
  with cdf ``F``, all independent.
* ``RM(m, pi0, F)``: ``m0`` is drawn from ``Binomial(m, pi0)`` first.

For a step-up procedure with critical values ``t`` the joint law of the
number of false rejections ``V`` and of all rejections ``R`` follows from a
single Ψ table on the reversed complementary critical values
``1 - t_m <= ... <= 1 - t_1``: the entries with ``i1 + i2 = m - k`` are
exactly the suffix probabilities needed for ``R = k``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .distributions import UniformCdf, cdf_values
from .recursions import TransformedBoundaries, psi_table
from .scalar import RATIONAL, Backend, binomial_rows, get_backend, to_fraction

__all__ = [
    "JointVR",
    "ModelSpec",
    "StepUpProcedure",
    "avg_power",
    "bh_thresholds",
    "fdp_distribution",
    "fdr",
    "joint_vr",
    "joint_vr_fm",
    "joint_vr_rm",
    "lambda_power",
]


@dataclass(frozen=True)
class StepUpProcedure:
    """Critical values ``0 < t_1 <= ... <= t_m < 1``."""

    t: tuple

    def __post_init__(self):
        object.__setattr__(self, "t", tuple(self.t))
        prev = Fraction(0)
        for i, x in enumerate(self.t):
            x = to_fraction(x)
            if not 0 < x < 1:
                raise ValueError(f"critical value t[{i}] = {float(x)!r} is not in (0, 1)")
            if x < prev:
                raise ValueError(f"critical values decrease at index {i}")
            prev = x

    @property
    def m(self) -> int:
        return len(self.t)


def bh_thresholds(m: int, alpha) -> StepUpProcedure:
    """Benjamini-Hochberg critical values ``t_i = i * alpha / m``.

    A Fraction (or decimal string) ``alpha`` gives exact rational values.
    """
    if m < 1:
        raise ValueError("m must be at least 1")
    if isinstance(alpha, str):
        alpha = to_fraction(alpha)
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    if isinstance(alpha, float):
        # a float alpha stands for the decimal it prints as (0.05 means 1/20);
        # each t_i is then i * alpha / m rounded once
        a = Fraction(repr(alpha))
        return StepUpProcedure(tuple(float(a * i / m) for i in range(1, m + 1)))
    alpha = to_fraction(alpha)
    return StepUpProcedure(tuple(alpha * i / m for i in range(1, m + 1)))


@dataclass(frozen=True)
class ModelSpec:
    kind: str
    m: int
    m0: int | None = None
    pi0: object = None
    F: object = field(default_factory=UniformCdf)

    def __post_init__(self):
        if self.kind not in ("FM", "RM"):
            raise ValueError("kind must be 'FM' or 'RM'")
        if self.m < 1:
            raise ValueError("m must be at least 1")
        if self.kind == "FM":
            if self.m0 is None or not 0 <= self.m0 <= self.m:
                raise ValueError(f"FM needs 0 <= m0 <= m, got m0={self.m0}, m={self.m}")
        else:
            if self.pi0 is None or not 0 <= to_fraction(self.pi0) <= 1:
                raise ValueError("RM needs pi0 in [0, 1]")

    @classmethod
    def fm(cls, m: int, m0: int, F=None) -> "ModelSpec":
        return cls("FM", m, m0=m0, F=F or UniformCdf())

    @classmethod
    def rm(cls, m: int, pi0, F=None) -> "ModelSpec":
        return cls("RM", m, pi0=pi0, F=F or UniformCdf())


@dataclass
class JointVR:
    """``p[j][k] = P(V = j, R = k)`` for ``0 <= j <= k <= m`` (zero elsewhere)."""

    p: list
    m: int
    backend: str
    m0: int | None = None
    exact_inputs: bool = True
    meta: dict = field(default_factory=dict)

    def to_numpy(self) -> np.ndarray:
        be = get_backend(self.backend)
        return np.array([[be.to_float(x) for x in row] for row in self.p], dtype=float)

    def total(self):
        be = get_backend(self.backend)
        acc = be.zero
        for row in self.p:
            for x in row:
                acc = acc + x
        return acc

    def r_marginal(self) -> list:
        be = get_backend(self.backend)
        out = []
        for k in range(self.m + 1):
            acc = be.zero
            for j in range(k + 1):
                acc = acc + self.p[j][k]
            out.append(acc)
        return out


def _powers(x, n, be):
    out = [be.one]
    for _ in range(n):
        out.append(out[-1] * x)
    return out


def _inputs(model: ModelSpec, proc: StepUpProcedure, be: Backend, exact: bool):
    if proc.m != model.m:
        raise ValueError(f"procedure has {proc.m} critical values but the model has m={model.m}")
    ft = cdf_values(model.F, proc.t, exact=exact)
    exact_inputs = all(not isinstance(x, float) for x in ft) or be is not RATIONAL
    return [be.convert(x) for x in proc.t], [be.convert(x) for x in ft], exact_inputs


def joint_vr_fm(model: ModelSpec, proc: StepUpProcedure, backend="pair", kernel: str = "noe",
                threads: int | None = None) -> JointVR:
    """Joint law of ``(V, R)`` under ``FM(m, m0, F)``.

    ``P(V=j, R=k) = C(m0, j) C(m-m0, k-j) t_k^j F(t_k)^(k-j) Ψ(m0-j, m-m0-k+j)``
    where Ψ is taken over ``m0 - j`` uniforms and ``m - m0 - k + j`` variables
    with cdf ``Fbar(s) = 1 - F(1 - s)`` at thresholds ``1 - t_m, ..., 1 - t_{k+1}``.
    """
    be = get_backend(backend)
    m, m0 = model.m, model.m0
    m1 = m - m0
    t, ft, exact_inputs = _inputs(model, proc, be, exact=be is RATIONAL)
    one, zero = be.one, be.zero
    u = [one - t[i] for i in range(m - 1, -1, -1)]
    fbar = [one - ft[i] for i in range(m - 1, -1, -1)]
    table = psi_table(TransformedBoundaries(u, fbar, m0, m1), kernel, be, threads=threads)
    C = binomial_rows(m, be)
    p = [[zero] * (m + 1) for _ in range(m + 1)]
    for k in range(m + 1):
        if k:
            tp = _powers(t[k - 1], min(k, m0), be)
            fp = _powers(ft[k - 1], min(k, m1), be)
        else:
            tp = fp = [one]
        for j in range(max(0, k - m1), min(k, m0) + 1):
            p[j][k] = C[m0][j] * C[m1][k - j] * tp[j] * fp[k - j] * table[m0 - j, m1 - k + j]
    vr = JointVR(p, m, be.name, m0=m0, exact_inputs=exact_inputs)
    vr.meta["kernel"] = kernel
    if table.underflow is not None:
        vr.meta["underflow"] = bool(table.underflow.any())
        vr.meta["k_used"] = table.k_used
    return vr


def joint_vr_rm(model: ModelSpec, proc: StepUpProcedure, backend="pair", kernel: str = "noe",
                threads: int | None = None) -> JointVR:
    """Joint law of ``(V, R)`` under ``RM(m, pi0, F)``.

    With ``G(t) = pi0 t + (1 - pi0) F(t)`` every p-value has cdf ``G`` and
    ``P(V=j, R=k) = C(m,k) C(k,j) (pi0 t_k)^j ((1-pi0) F(t_k))^(k-j) Ψ_{m-k}``,
    the one-group Ψ being taken at ``1 - G(t_m), ..., 1 - G(t_{k+1})``.
    ``1 - G`` is formed as ``pi0 (1 - t) + (1 - pi0)(1 - F(t))`` so that only
    inputs are ever subtracted.
    """
    be = get_backend(backend)
    m = model.m
    t, ft, exact_inputs = _inputs(model, proc, be, exact=be is RATIONAL)
    one, zero = be.one, be.zero
    pi0 = be.convert(model.pi0 if not isinstance(model.pi0, str) else to_fraction(model.pi0))
    pi1 = one - pi0
    u = [pi0 * (one - t[i]) + pi1 * (one - ft[i]) for i in range(m - 1, -1, -1)]
    table = psi_table(TransformedBoundaries(u, u, m, 0), kernel, be, threads=threads)
    C = binomial_rows(m, be)
    p = [[zero] * (m + 1) for _ in range(m + 1)]
    for k in range(m + 1):
        if k:
            a = _powers(pi0 * t[k - 1], k, be)
            b = _powers(pi1 * ft[k - 1], k, be)
        else:
            a = b = [one]
        for j in range(k + 1):
            p[j][k] = C[m][k] * C[k][j] * a[j] * b[k - j] * table[m - k, 0]
    vr = JointVR(p, m, be.name, exact_inputs=exact_inputs)
    vr.meta["kernel"] = kernel
    if table.underflow is not None:
        vr.meta["underflow"] = bool(table.underflow.any())
        vr.meta["k_used"] = table.k_used
    return vr


def joint_vr(model: ModelSpec, proc: StepUpProcedure, backend="pair", kernel: str = "noe",
             threads: int | None = None) -> JointVR:
    fn = joint_vr_fm if model.kind == "FM" else joint_vr_rm
    return fn(model, proc, backend, kernel, threads)


def _result(be: Backend, x):
    return x if be is RATIONAL else be.to_float(x)


def fdr(vr: JointVR):
    """``E[V / max(R, 1)]``."""
    be = get_backend(vr.backend)
    acc = be.zero
    for k in range(1, vr.m + 1):
        kk = be.from_int(k)
        for j in range(1, k + 1):
            acc = acc + be.from_int(j) / kk * vr.p[j][k]
    return _result(be, acc)


def fdp_distribution(vr: JointVR) -> list[tuple[Fraction, object]]:
    """Atoms ``(j / max(k, 1), mass)`` of the false discovery proportion, ascending."""
    be = get_backend(vr.backend)
    atoms: dict[Fraction, object] = {}
    for k in range(vr.m + 1):
        for j in range(k + 1):
            if vr.m0 is not None and (j > vr.m0 or k - j > vr.m - vr.m0):
                continue
            key = Fraction(j, max(k, 1))
            atoms[key] = atoms[key] + vr.p[j][k] if key in atoms else vr.p[j][k]
    return [(key, _result(be, atoms[key])) for key in sorted(atoms)]


def _mixture_weights(m: int, pi0, be: Backend) -> list:
    pi0 = be.convert(pi0 if not isinstance(pi0, str) else to_fraction(pi0))
    pi1 = be.one - pi0
    C = binomial_rows(m, be)[m]
    a = _powers(pi0, m, be)
    b = _powers(pi1, m, be)
    return [C[m0] * a[m0] * b[m - m0] for m0 in range(m + 1)]


def _fm_stat(model, proc, be, kernel, threads, stat):
    if model.kind == "FM":
        return stat(model.m0, joint_vr_fm(model, proc, be, kernel, threads))
    acc = be.zero
    weights = _mixture_weights(model.m, model.pi0, be)
    for m0 in range(model.m + 1):
        sub = ModelSpec.fm(model.m, m0, model.F)
        acc = acc + weights[m0] * stat(m0, joint_vr_fm(sub, proc, be, kernel, threads))
    return acc


def avg_power(model: ModelSpec, proc: StepUpProcedure, backend="pair", kernel: str = "noe",
              threads: int | None = None):
    """Expected fraction of false hypotheses rejected, ``E[(R - V) / (m - M0)]`` with 0/0 = 0."""
    be = get_backend(backend)
    m = model.m

    def stat(m0, vr):
        if m0 == m:
            return be.zero
        acc = be.zero
        for k in range(m + 1):
            for j in range(k + 1):
                if k - j:
                    acc = acc + be.from_int(k - j) * vr.p[j][k]
        return acc / be.from_int(m - m0)

    return _result(be, _fm_stat(model, proc, be, kernel, threads, stat))


def lambda_power(model: ModelSpec, proc: StepUpProcedure, lam, backend="pair", kernel: str = "noe",
                 threads: int | None = None):
    """``P((R - V) / (m - M0) >= lam)`` with 0/0 = 0, for ``lam`` in (0, 1].

    The comparison is made exactly against the real number ``lam * (m - m0)``.
    """
    be = get_backend(backend)
    lam = to_fraction(lam)
    if not 0 < lam <= 1:
        raise ValueError("lambda must lie in (0, 1]")
    m = model.m

    def stat(m0, vr):
        acc = be.zero
        if m0 == m:
            return acc
        need = lam * (m - m0)
        for k in range(m + 1):
            for j in range(k + 1):
                if k - j >= need:
                    acc = acc + vr.p[j][k]
        return acc

    return _result(be, _fm_stat(model, proc, be, kernel, threads, stat))
