"""Rough run-time comparison: pair Noe versus rational Bolshev.

Noe costs O(l^5) arithmetic operations on n1 = n2 = l, Bolshev O(l^4),
but Bolshev's exact rationals grow with l while pair operations stay
fixed-size, so Noe wins by orders of magnitude at moderate l.
"""

import random
import time

from ordstat import RATIONAL, TransformedBoundaries, bolshev_two_group, psi_table

r = random.Random(0)
psi_table(TransformedBoundaries([0.5, 0.6], [0.5, 0.6], 1, 1), "noe", "pair")  # load the compiled kernel
print("   l   pair noe [s]   rational bolshev [s]")
for ell in (5, 10, 20, 30):
    u = sorted(r.random() for _ in range(2 * ell))
    tb = TransformedBoundaries(u, [x * x for x in u], ell, ell)
    t = time.perf_counter()
    psi_table(tb, "noe", "pair", threads=1)
    t_noe = time.perf_counter() - t
    t = time.perf_counter()
    bolshev_two_group(tb, RATIONAL)
    t_bol = time.perf_counter() - t
    print(f"{ell:>4}   {t_noe:12.5f}   {t_bol:20.5f}")
