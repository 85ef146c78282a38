"""The extremal equation h'' = C h^gamma - h behind the blow-up argument.

Once C h0^(gamma-1) dominates, the orbit escapes in finite time, earlier for
larger C or h0.  The equation is conservative, so its energy
1/2 h'^2 + 1/2 h^2 - C h^(gamma+1)/(gamma+1) is a check on the integrator.
The friction variant h'' = C h^gamma - h' is the form a damped virial obeys.
"""
from dwlab.odi import OdiProblem, energy_drift, integrate_odi

ref = OdiProblem(C=1.0, gamma=2.0, h0=2.0, h1=1.0)
out, sol = integrate_odi(ref, dense=True)
print(f"reference problem: {out.outcome} at t = {out.t_escape:.10f}, energy drift {energy_drift(ref, sol):.2e}")
for C in (0.5, 1.0, 2.0, 4.0):
    row = []
    for h0 in (0.5, 1.0, 2.0):
        o = integrate_odi(OdiProblem(C, 2.0, h0, 1.0))
        row.append(f"{o.t_escape:8.4f}" if o.outcome == "BlowUp" else f"{o.outcome:>8}")
    print(f"C = {C:3}: escape times for h0 = 0.5, 1, 2 ->", " ".join(row))
print("survivor:", integrate_odi(OdiProblem(0.1, 2.0, 0.5, 0.1, t_max=50)).outcome)
print("friction variant:", integrate_odi(OdiProblem(1.0, 2.0, 2.0, 1.0, damping="friction")))
