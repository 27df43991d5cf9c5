"""Why the pair-arithmetic Noe recursion is the default.

Ten tiny thresholds followed by one large one make Bolshev's and Steck's
recursions cancel catastrophically in double precision. The rational
backend gives the exact value and the pair Noe kernel a faithful rounding.
"""

from fractions import Fraction

from ordstat import PAIR, RATIONAL, DOUBLE, TransformedBoundaries, bolshev_one_group, noe_two_group, steck_two_group
from ordstat.pair import is_faithful

b = [Fraction(1, 1024)] * 10 + [Fraction(1, 2)]
tb = TransformedBoundaries.one_group(b)

exact = bolshev_one_group(b, RATIONAL)
print("exact      ", exact, f"~ {float(exact):.6e}")

# %% double precision
for name, value in [("bolshev", bolshev_one_group(b, DOUBLE)), ("steck", steck_two_group(tb, DOUBLE)[11, 0])]:
    rel = abs(Fraction(value) - Fraction(exact)) / Fraction(exact)
    print(f"{name:<10}  {value: .6e}   relative error {float(rel):.1e}")

# %% pair arithmetic
res = noe_two_group(tb, PAIR).faithful()
print(f"pair noe     {res.value:.16e}  faithful={is_faithful(res.value, exact)}  k={res.k_used}")
