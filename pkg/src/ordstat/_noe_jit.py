"""Compiled pair-arithmetic Noe recursion.

Mirrors ``recursions._noe_generic`` operation for operation so that the
compiled and the pure-Python pair runs agree bit for bit.
"""

import warnings

import numba
import numpy as np
from numba import njit, prange

_SPLITTER = 134217729.0
_MIN_NORMAL = 2.0**-1022
_PROD_TINY = 2.0**-969


@njit(inline="always")
def _two_sum(a, b):
    s = a + b
    bb = s - a
    return s, (a - (s - bb)) + (b - bb)


@njit(inline="always")
def _split(a):
    c = _SPLITTER * a
    hi = c - (c - a)
    return hi, a - hi


@njit(inline="always")
def _sub(x):
    return x != 0.0 and abs(x) < _MIN_NORMAL


@njit(inline="always")
def _padd(xh, xl, xf, yh, yl, yf):
    s, e = _two_sum(xh, yh)
    h, l = _two_sum(s, e + (xl + yl))
    return h, l, xf or yf or _sub(h)


@njit(inline="always")
def _pmul(xh, xl, xf, yh, yl, yf):
    p = xh * yh
    ah, al = _split(xh)
    bh, bl = _split(yh)
    e = ((ah * bh - p) + ah * bl + al * bh) + al * bl
    uf = xh != 0.0 and yh != 0.0 and abs(p) < _PROD_TINY
    h, l = _two_sum(p, e + (xh * yl + xl * yh))
    return h, l, uf or xf or yf or _sub(h)


@njit(inline="always")
def _pdiv(xh, xl, xf, yh, yl, yf):
    q = xh / yh
    p = q * yh
    ah, al = _split(q)
    bh, bl = _split(yh)
    e = ((ah * bh - p) + ah * bl + al * bh) + al * bl
    uf = q != 0.0 and yh != 0.0 and abs(p) < _PROD_TINY
    lo = (((xh - p) - e) + xl - q * yl) / (yh + yl)
    h, l = _two_sum(q, lo)
    return h, l, uf or xf or yf or (xh != 0.0 and q == 0.0) or _sub(h)


@njit(cache=True)
def binomials(nmax):
    """Pair-valued ``C(i, k)`` built top-down as ``C(i, k + 1) * (k + 1) / (i - k)``."""
    ch = np.zeros((nmax + 1, nmax + 1))
    cl = np.zeros((nmax + 1, nmax + 1))
    for i in range(nmax + 1):
        ch[i, i] = 1.0
        for k in range(i - 1, -1, -1):
            th, tl, tf = _pmul(ch[i, k + 1], cl[i, k + 1], False, float(k + 1), 0.0, False)
            ch[i, k], cl[i, k], tf = _pdiv(th, tl, tf, float(i - k), 0.0, False)
    return ch, cl


def _noe_body(n1, n2, d1h, d1l, d2h, d2l, ch, cl, psih, psil, psif):
    n = n1 + n2
    nmax = max(n1, n2)
    qh = np.zeros((n1 + 1, n2 + 1))
    ql = np.zeros((n1 + 1, n2 + 1))
    qf = np.zeros((n1 + 1, n2 + 1), dtype=np.bool_)
    nh = np.zeros((n1 + 1, n2 + 1))
    nl = np.zeros((n1 + 1, n2 + 1))
    nf = np.zeros((n1 + 1, n2 + 1), dtype=np.bool_)
    a1h = np.zeros(n1 + 1)
    a1l = np.zeros(n1 + 1)
    a1f = np.zeros(n1 + 1, dtype=np.bool_)
    a2h = np.zeros(n2 + 1)
    a2l = np.zeros(n2 + 1)
    a2f = np.zeros(n2 + 1, dtype=np.bool_)
    r1h = np.zeros((n1 + 1, n1 + 1))
    r1l = np.zeros((n1 + 1, n1 + 1))
    r1f = np.zeros((n1 + 1, n1 + 1), dtype=np.bool_)
    r2h = np.zeros((n2 + 1, n2 + 1))
    r2l = np.zeros((n2 + 1, n2 + 1))
    r2f = np.zeros((n2 + 1, n2 + 1), dtype=np.bool_)

    # layer 1: Q[i1, i2] = b1**i1 * F(b1)**i2
    a1h[0] = 1.0
    for j in range(1, n1 + 1):
        a1h[j], a1l[j], a1f[j] = _pmul(a1h[j - 1], a1l[j - 1], a1f[j - 1], d1h[0], d1l[0], False)
    a2h[0] = 1.0
    for j in range(1, n2 + 1):
        a2h[j], a2l[j], a2f[j] = _pmul(a2h[j - 1], a2l[j - 1], a2f[j - 1], d2h[0], d2l[0], False)
    for i1 in range(n1 + 1):
        for i2 in range(n2 + 1):
            qh[i1, i2], ql[i1, i2], qf[i1, i2] = _pmul(a1h[i1], a1l[i1], a1f[i1], a2h[i2], a2l[i2], a2f[i2])
            if i1 + i2 == 1:
                psih[i1, i2] = qh[i1, i2]
                psil[i1, i2] = ql[i1, i2]
                psif[i1, i2] = qf[i1, i2]

    for m in range(2, n + 1):
        for j in range(1, n1 + 1):
            a1h[j], a1l[j], a1f[j] = _pmul(a1h[j - 1], a1l[j - 1], a1f[j - 1], d1h[m - 1], d1l[m - 1], False)
        for j in range(1, n2 + 1):
            a2h[j], a2l[j], a2f[j] = _pmul(a2h[j - 1], a2l[j - 1], a2f[j - 1], d2h[m - 1], d2l[m - 1], False)
        for i in range(n1 + 1):
            for k in range(i + 1):
                r1h[i, k], r1l[i, k], r1f[i, k] = _pmul(
                    ch[i, k], cl[i, k], False, a1h[i - k], a1l[i - k], a1f[i - k])
        for i in range(n2 + 1):
            for k in range(i + 1):
                r2h[i, k], r2l[i, k], r2f[i, k] = _pmul(
                    ch[i, k], cl[i, k], False, a2h[i - k], a2l[i - k], a2f[i - k])
        for i1 in prange(n1 + 1):
            for i2 in range(n2 + 1):
                if i1 + i2 < m:
                    continue
                acch = 0.0
                accl = 0.0
                accf = False
                first = True
                for k1 in range(max(0, m - 1 - i2), i1 + 1):
                    inh = 0.0
                    inl = 0.0
                    inf = False
                    ifirst = True
                    for k2 in range(max(0, m - 1 - k1), i2 + 1):
                        th, tl, tf = _pmul(r2h[i2, k2], r2l[i2, k2], r2f[i2, k2], qh[k1, k2], ql[k1, k2], qf[k1, k2])
                        if ifirst:
                            inh, inl, inf = th, tl, tf
                            ifirst = False
                        else:
                            inh, inl, inf = _padd(inh, inl, inf, th, tl, tf)
                    th, tl, tf = _pmul(r1h[i1, k1], r1l[i1, k1], r1f[i1, k1], inh, inl, inf)
                    if first:
                        acch, accl, accf = th, tl, tf
                        first = False
                    else:
                        acch, accl, accf = _padd(acch, accl, accf, th, tl, tf)
                nh[i1, i2] = acch
                nl[i1, i2] = accl
                nf[i1, i2] = accf
                if i1 + i2 == m:
                    psih[i1, i2] = acch
                    psil[i1, i2] = accl
                    psif[i1, i2] = accf
        qh, nh = nh, qh
        ql, nl = nl, ql
        qf, nf = nf, qf
    return nmax


noe_pair_seq = njit(cache=True)(_noe_body)
noe_pair_par = njit(cache=True, parallel=True)(_noe_body)


def run(n1, n2, d1h, d1l, d2h, d2l, threads=1):
    """Fill and return ``(psi_hi, psi_lo, psi_flag)`` arrays."""
    ch, cl = binomials(max(n1, n2))
    psih = np.zeros((n1 + 1, n2 + 1))
    psil = np.zeros((n1 + 1, n2 + 1))
    psif = np.zeros((n1 + 1, n2 + 1), dtype=np.bool_)
    psih[0, 0] = 1.0
    if n1 + n2 == 0:
        return psih, psil, psif
    args = (n1, n2, d1h, d1l, d2h, d2l, ch, cl, psih, psil, psif)
    if threads is None or threads <= 1:
        noe_pair_seq(*args)
    else:
        with warnings.catch_warnings():
            # an old system TBB is skipped in favour of another layer; nothing to act on
            warnings.filterwarnings("ignore", message=".*TBB threading layer.*")
            numba.set_num_threads(min(threads, numba.config.NUMBA_NUM_THREADS))
            noe_pair_par(*args)
    return psih, psil, psif
