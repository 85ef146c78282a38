"""Small data exist globally and decay.

A zero-mean bump of energy norm 1e-2 is evolved under the focusing
energy-critical flow.  The energy decreases by exactly the integrated kinetic
dissipation, and the two space-time norms level off as the solution decays.
"""
from dwlab.experiments import parse_config, run_experiment

cfg = parse_config("kind = global-decay\nn = 32\nT = 20\ndt = 0.025\nrecord_every = 4\nnorm = 1e-2\n")
status, res = run_experiment(cfg, "out/demo-global")
ms = res.info["monitor"]
print("initial data:", res.info["classification"])
for i in range(0, len(ms.t), max(1, len(ms.t) // 8)):
    print(f"  t = {ms.t[i]:6.2f}  E = {ms.E[i]:.6e}  S1 = {ms.S1[i]:.6e}  S2 = {ms.S2[i]:.6e}")
for c in res.checks:
    print(f"{'PASS' if c.passed else 'FAIL'} {c.name}: {c.value:.3g} (bound {c.bound:.3g})")
