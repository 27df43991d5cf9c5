"""Exact FDR, FDP distribution and power of the Benjamini-Hochberg procedure.

p-values come from two-sided one-sample z-tests with sample size N = 5
under the alternative. Everything below is exact up to faithful rounding,
no simulation involved.
"""

import numpy as np

from ordstat import ModelSpec, ZTestAlternative, avg_power, bh_thresholds, fdp_distribution, fdr, joint_vr_fm
from ordstat.mtp import lambda_power

F = ZTestAlternative(5)
alpha = 0.05

# %% small m: average power for every number of true nulls
m = 5
proc = bh_thresholds(m, alpha)
print(" m0   FDR       m0*a/m    avg power  P(>=half found)")
for m0 in range(m + 1):
    model = ModelSpec.fm(m, m0, F)
    vr = joint_vr_fm(model, proc)
    lam = lambda_power(model, proc, 0.5)
    print(f"{m0:>3}  {fdr(vr):.6f}  {m0 * alpha / m:.6f}  {avg_power(model, proc):.6f}   {lam:.6f}")

# %% larger m: the FDP is far from concentrated at its mean
m, m0 = 50, 5
vr = joint_vr_fm(ModelSpec.fm(m, m0, F), bh_thresholds(m, alpha))
atoms = fdp_distribution(vr)
print(f"\nm={m}, m0={m0}: FDR = {fdr(vr):.6f}, P(FDP = 0) = {dict(atoms)[0]:.4f}")
values = np.array([float(v) for v, _ in atoms])
masses = np.array([w for _, w in atoms])
print("P(FDP > 0.1) =", f"{masses[values > 0.1].sum():.4f}")
print("P(FDP > 0.2) =", f"{masses[values > 0.2].sum():.4f}")
