"""Finite-time blow-up from the set B.

1.2 times a cut-off ground state has E < mu and K < 0.  The flow keeps K
negative, the virial quantity F turns positive, and the ratio
(E - mu) / I^2 with I = ||u||^2 stops increasing, which forces blow-up
through an ODE comparison.  The run takes about a minute and a half at 128^3.
"""
from pathlib import Path

from dwlab.experiments import load_config, run_experiment

cfg = load_config(Path(__file__).parent / "configs" / "blowup.cfg")
status, res = run_experiment(cfg, "out/demo-blowup")
info = res.info
print(f"t = 0: {info['classification']}, E - mu = {info['E0'] - info['mu']:.4f}, K = {info['K0']:.3f}")
print(f"halted: {info['blowup_reason']}; extrapolated blow-up time {info['blowup_time_estimate']:.5f}")
ms = info["monitor"]
for t, K, F, ratio in list(zip(ms.t, ms.K, ms.F, ms.ratio))[::4]:
    print(f"  t = {t:5.2f}  K = {K:+.4e}  F = {F:+.4e}  ratio = {ratio:.6e}")
for c in res.checks:
    print(f"{'PASS' if c.passed else 'FAIL'} {c.name}: {c.value:.4g}")
print("seeded ODI outcome:", info.get("odi_outcome"))
