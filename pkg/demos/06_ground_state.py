"""The ground state W and the sets B and G that split data below its energy.

W(x) = (1 + |x|^2/3)^(-1/2) in d = 3 has energy mu.  Data with E < mu falls in
G if the Nehari functional K is >= 0 and in B if K < 0.
"""
import numpy as np

from dwlab import nldw
from dwlab.fields import Field, GridSpec, StatePair

print("mu(3) =", nldw.mu(3))
for d in (3, 4, 5):
    r = nldw.radial_functionals(lambda x: nldw.talenti_value(x, d), lambda x: nldw.talenti_derivative(x, d), d)
    print(f"d = {d}: K(W) = {r['K']:.2e}, J(W) - mu = {r['J'] - nldw.mu(d):.2e}")

grid = GridSpec(3, 64, 40.0)
for scale in (0.5, 1.2):
    u = nldw.boxed_talenti(grid, scale, 20.0)
    s = StatePair(u, Field.zeros(grid), 0.0)
    c = nldw.classify(s)
    print(f"{scale} * boxed W on 64^3, box 40: E - mu = {c.E - c.mu:+.4f}, K = {c.K:+.4f} -> {c}")
print("on the smaller box the cutoff costs enough gradient energy to push E above mu;")
print("the blow-up config therefore uses n = 128, half_length = 80, R = 40")
small = StatePair(Field(grid, 0.01 * np.exp(-grid.radius**2), real=True), Field.zeros(grid), 0.0)
print("small bump:", nldw.classify(small))
