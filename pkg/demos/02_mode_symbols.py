"""The per-mode damped-wave evolution and its removable branch point.

Each Fourier mode obeys v'' + v' + |xi|^2 v = 0.  Below |xi| = 1/2 the mode is
overdamped (sinh-type), above it oscillates (sin-type); the symbol is one
entire function of mu = 1/4 - |xi|^2, evaluated by a short series near mu = 0.
"""
import numpy as np

from dwlab.propagator import L_symbol, damped_symbols, propagator_matrix

t = 5.0
print(f"L(t, |xi|) at t = {t} across the branch point:")
for rho in (0.0, 0.25, 0.49, 0.4999, 0.5, 0.5001, 0.51, 1.0, 4.0):
    print(f"  |xi| = {rho:<7g} L = {L_symbol(t, rho): .12e}")

rho = np.array([0.0, 0.5, 2.0, 10.0])
s, ds, dds = damped_symbols(t, rho)
print("\nODE residual s'' + s' + |xi|^2 s per mode:", dds + ds + rho**2 * s)

a = np.array(propagator_matrix(1.0, rho)).reshape(2, 2, -1)
b = np.array(propagator_matrix(2.0, rho)).reshape(2, 2, -1)
c = np.array(propagator_matrix(3.0, rho)).reshape(2, 2, -1)
print("semigroup defect |A(3) - A(2)A(1)|:", np.abs(c - np.einsum("ijm,jkm->ikm", b, a)).max())

s_long, _, _ = damped_symbols(50.0, rho)
print("\nat t = 50 the zero mode tends to 1 while the rest decay:", s_long)
