"""Homogeneous Strichartz ratios across dyadic frequency scales.

For band-limited radial data at frequency N the ratio
||D(t) f||_{L^q L^r} / ||<grad>^(gamma-1) f||_{L^2} should stay bounded as N
varies; a loss smaller than gamma would make it grow with N.
"""
import numpy as np

from dwlab.experiments.kinds import STRICHARTZ_PAIRS, strichartz_ratios

rows = strichartz_ratios(seeds=[0, 1, 2], j_max=5, window=16.0)
for q, r in STRICHARTZ_PAIRS:
    sel = [row for row in rows if row[3] == q and row[4] == r]
    print(f"(q, r) = ({q}, {r}), gamma = {sel[0][5]:.4f}")
    for j in range(6):
        vals = [row[6] for row in sel if row[1] == j]
        print(f"    N = 2^{j}: ratio {np.mean(vals):.4f} (seed spread {max(vals) / min(vals):.3f})")
    allv = [row[6] for row in sel]
    print(f"    max/min over scales and seeds: {max(allv) / min(allv):.3f}")
