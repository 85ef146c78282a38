"""L^1 -> L^p decay of D(t) for radial data on R^3.

Low frequencies of the damped wave behave like the heat flow, so the L^2 norm
decays like t^(-3/4) and the sup norm like t^(-3/2).  The radial solution is
computed with a discrete sine transform, so no torus wrap-around is involved.
"""
import numpy as np

from dwlab.experiments.kinds import decay_slope, gaussian_profile
from dwlab.propagator import SymbolKind
from dwlab.radial import radial_norm_d3

prof = gaussian_profile(1.0, 7.0, 0.01)
ts = np.geomspace(10, 100, 10)
for p, rate in ((2, -0.75), (np.inf, -1.5)):
    norms = [radial_norm_d3(prof, SymbolKind.D, float(t), p) for t in ts]
    heat = [radial_norm_d3(prof, SymbolKind.Heat, float(t), p) for t in ts]
    print(f"p = {p}: D slope {decay_slope(ts, norms):+.4f}, heat slope {decay_slope(ts, heat):+.4f}, "
          f"predicted {rate:+.2f}")
    for t, n in zip(ts[::3], norms[::3]):
        print(f"    t = {t:7.2f}  ||D(t) f||_{p} = {n:.6e}")
