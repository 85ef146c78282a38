"""Derivative losses of damped-wave Strichartz estimates, in exact arithmetic.

A pair (q, r) pays a Sobolev loss gamma; an inhomogeneous estimate with two
pairs pays both losses plus an extra delta when the pairs sit on different
scaling lines.  Everything below is a Fraction, never a float.
"""
from dwlab.exponents import (
    INF,
    PairQR,
    check_homogeneous,
    check_inhomogeneous,
    exponent_table_csv,
    gamma_loss,
    total_inhomogeneous_order,
)

for q, r in [(INF, 2), (4, 4), (8, 8), (2, 6), (4, 3)]:
    pair = PairQR(q, r, 3)
    verdict = check_homogeneous(pair)
    print(f"d=3 pair {pair}: gamma = {gamma_loss(pair)}, homogeneous check -> {verdict}")

# the energy endpoint is excluded for the wave part in d=4
print("d=4 wave endpoint (2, 6):", check_homogeneous(PairQR(2, 6, 4)))

rep = total_inhomogeneous_order(PairQR(4, 3, 3), PairQR(4, 6, 3))
print(f"\ninhomogeneous (4,3) x (4,6): gamma={rep.gamma} gamma~={rep.gamma_tilde} delta={rep.delta} "
      f"-> order {rep.total_order_D} for D, {rep.total_order_dtD} for dtD ({rep.branch.value})")
print("admissibility of that combination:", check_inhomogeneous(PairQR(4, 3, 3), PairQR(4, 6, 3)))

print("\ncurated table (same as `dwlab exponents`):")
print(exponent_table_csv(), end="")
