"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run on its own with ``pytest tests/test_acceptance.py -s`` (or ``python tests/test_acceptance.py``);
the lines are also collected into the terminal summary of a normal pytest run.
"""
import math
import time
from fractions import Fraction

import numpy as np
import pytest

import oracles
from conftest import run_demo
from dwlab.experiments.kinds import golden_exponent_table
from dwlab.exponents import exponent_table_csv
from dwlab.fields import GridSpec
from dwlab.odi import BlowUp, OdiProblem, energy_drift, integrate_odi
from dwlab.propagator import damped_symbols, propagator_matrix

REPORT = []


def report(n, ok, msg):
    line = f"{'PASS' if ok else 'FAIL'} criterion {n}: {msg}"
    REPORT.append(line)
    print(line)
    assert ok, line


def _checks(run, *names):
    return {n: run.result.check(n) for n in names}


def _fmt_checks(checks):
    return "; ".join(f"{n}={c.value:.4g} (bound {c.bound:.3g})" for n, c in checks.items())


# -- 1 -----------------------------------------------------------------------------

def test_criterion_01_exponent_goldens():
    t0 = time.perf_counter()
    text = exponent_table_csv()
    elapsed = time.perf_counter() - t0
    gold = golden_exponent_table()
    exact = text == gold
    # independent sympy evaluation of every golden cell
    bad = 0
    for line in gold.splitlines()[1:]:
        d, q, r, qt, rt, g, gt, dl, _branch, total = line.split(",")
        d = int(d)
        bad += Fraction(g) != Fraction(str(oracles.gamma_oracle(q, r, d)))
        bad += Fraction(gt) != Fraction(str(oracles.gamma_oracle(qt, rt, d)))
        bad += Fraction(dl) != Fraction(str(oracles.delta_oracle(q, r, qt, rt, d)))
        bad += Fraction(total) != Fraction(str(oracles.total_oracle(q, r, qt, rt, d)))
    report(1, exact and bad == 0 and elapsed < 1.0,
           f"table == golden: {exact}; oracle mismatches {bad}; runtime {elapsed:.3f} s (< 1 s)")


# -- 2, 3 ----------------------------------------------------------------------------

LATTICE = GridSpec(3, 64, 2 * math.pi)


def _closed_form(t, rho2):
    """(s, s', s'') of v'' + v' + rho^2 v = 0, v(0) = 0, v'(0) = 1, for rho^2 on the quarter-integer lattice."""
    e = math.exp(-t / 2)
    s = np.empty_like(rho2)
    ds = np.empty_like(rho2)
    dds = np.empty_like(rho2)
    zero = rho2 == 0
    s[zero] = 1 - math.exp(-t)
    ds[zero] = math.exp(-t)
    dds[zero] = -math.exp(-t)
    crit = rho2 == 0.25
    s[crit] = t * e
    ds[crit] = e * (1 - t / 2)
    dds[crit] = e * (t / 4 - 1)
    osc = ~(zero | crit)
    w = np.sqrt(rho2[osc] - 0.25)
    sn, cs = np.sin(w * t), np.cos(w * t)
    s[osc] = e * sn / w
    ds[osc] = e * (cs - sn / (2 * w))
    dds[osc] = e * ((0.25 - w * w) * sn / w - cs)
    return s, ds, dds


def test_criterion_02_per_mode_ode_residual():
    # |xi|^2 is a quarter-integer here, so the lattice contains 0 and the branch point 1/4
    rho2 = LATTICE.xi2
    assert rho2.max() >= 3 * 32**2 / 4 and np.any(rho2 == 0.25)
    t0 = time.perf_counter()
    worst_res, worst_dev = 0.0, 0.0
    for t in (0.1, 1.0, 5.0, 20.0):
        s, ds, dds = damped_symbols(t, LATTICE.xi_abs)
        cs, cds, cdds = _closed_form(t, rho2)
        # residual of the mode ODE with the second derivative taken from the closed form
        res = np.abs(cdds + ds + rho2 * s) / (1 + rho2)
        dev = np.max(np.abs(np.array([s - cs, ds - cds, dds - cdds])) / (1 + rho2))
        worst_res = max(worst_res, float(res.max()))
        worst_dev = max(worst_dev, float(dev))
    elapsed = time.perf_counter() - t0
    ok = worst_res <= 1e-10 and worst_dev <= 1e-10 and elapsed < 10
    report(2, ok, f"max residual/(1+|xi|^2) {worst_res:.2e}, symbol deviation {worst_dev:.2e} "
                  f"(<= 1e-10) over the 64^3 lattice; {elapsed:.2f} s (< 10 s)")


def test_criterion_03_semigroup():
    rho = np.sqrt(np.unique(LATTICE.xi2))
    worst = 0.0
    for t1, t2 in ((0.1, 1.0), (1.0, 5.0), (5.0, 20.0), (0.3, 0.7), (20.0, 0.1)):
        a = np.array(propagator_matrix(t1, rho)).reshape(2, 2, -1)
        b = np.array(propagator_matrix(t2, rho)).reshape(2, 2, -1)
        c = np.array(propagator_matrix(t1 + t2, rho)).reshape(2, 2, -1)
        prod = np.einsum("ijm,jkm->ikm", b, a)
        worst = max(worst, float(np.max(np.abs(c - prod))))
    report(3, worst <= 1e-10, f"max per-mode |A(t1+t2) - A(t2)A(t1)| = {worst:.2e} (<= 1e-10)")


# -- 4, 5, 6 -------------------------------------------------------------------------

def test_criterion_04_decay_fits(tmp_path):
    runs = {p: run_demo("decay-fit", tmp_path / f"p{p}", p=p) for p in ("2", "inf")}
    s2 = runs["2"].result.check("slope_q1_p2")
    sinf = runs["inf"].result.check("slope_q1_pinf")
    ok2 = abs(s2.value + 0.75) <= 0.08
    okinf = abs(sinf.value + 1.5) <= 0.1
    slow = max(r.seconds for r in runs.values())
    report(4, ok2 and okinf and slow < 60 and all(r.status == 0 for r in runs.values()),
           f"slope (1,2) = {s2.value:.4f} (-0.75 +/- 0.08); slope (1,inf) = {sinf.value:.4f} (-1.5 +/- 0.1); "
           f"slowest run {slow:.1f} s (< 60 s)")


def test_criterion_05_high_frequency_decay(tmp_path):
    run = run_demo("linear-highfreq", tmp_path)
    slope = run.result.info["slope"]
    report(5, slope <= -0.25 + 0.01 and run.status == 0,
           f"slope of log ||A(t) P_>1 data||_(H1xL2) on [0,20] = {slope:.4f} (<= -0.24)")


def test_criterion_06_strichartz_ratio(strichartz_run):
    run = strichartz_run
    checks = _checks(run, "ratio_spread_q4_r4", "ratio_spread_q8_r8", "ratio_spread_q2_r6")
    ok = all(c.passed and c.value <= 8 for c in checks.values()) and run.seconds < 300
    report(6, ok, f"max/min over scales 2^0..2^6 and seeds {run.result.info['seeds'][0]}.."
                  f"{run.result.info['seeds'][-1]}: {_fmt_checks(checks)}; {run.seconds:.1f} s (< 300 s)")


# -- 7, 8, 9 -------------------------------------------------------------------------

def test_criterion_07_energy_dissipation(lwp_run, global_decay_run):
    parts, ok = [], True
    for name, run, dt, T in (("lwp-contraction", lwp_run, 0.02, 1.0), ("global-decay", global_decay_run, 0.0125, 50.0)):
        ms = run.result.info["monitor"]
        bound = max(1e-6 * abs(ms.E[0]), 5 * dt**2 * T)
        val = ms.max_dissipation_residual
        ok &= val <= bound and run.status == 0
        parts.append(f"{name} {val:.2e} (<= {bound:.2e})")
    report(7, ok, "integrated identity residual: " + "; ".join(parts))


def test_criterion_07_blowup_run_is_reported_not_gated(blowup_run):
    # the blow-up run halts flagged, so it is outside "accepted" runs; its residual is shown for the record
    ms = blowup_run.result.info["monitor"]
    r = np.abs(ms.dissipation_residual)
    bound = max(1e-6 * abs(ms.E[0]), 5 * 0.05**2 * float(ms.t[-1]))
    inside = ms.t[np.flatnonzero(r > bound)[0] - 1] if np.any(r > bound) else ms.t[-1]
    line = (f"INFO criterion 7: blow-up run (flagged, not gated): residual within {bound:.2e} up to t = {inside:g}, "
            f"{np.nanmax(r[:-1]):.2e} at t <= {ms.t[-2]:g}, halt near {blowup_run.result.info['blowup_time_estimate']:.4f}")
    REPORT.append(line)
    print(line)
    assert blowup_run.result.check("blowup_flag").passed


def test_criterion_08_small_data_global(global_decay_run):
    run = global_decay_run
    checks = _checks(run, "no_blowup", "terminal_energy_ratio", "S1_plateau", "S2_plateau")
    ok = all(c.passed for c in checks.values()) and run.seconds < 600
    report(8, ok, f"{_fmt_checks(checks)}; {run.seconds:.1f} s (< 600 s)")


def test_criterion_09_blowup(blowup_run):
    run = blowup_run
    checks = _checks(run, "initial_in_B", "blowup_flag", "K_negative", "F_positive_after_onset",
                     "ratio_nonincreasing_after_onset")
    info = run.result.info
    ok = all(c.passed for c in checks.values()) and run.seconds < 600
    report(9, ok, f"t=0 {info['classification']} (E-mu={info['E0'] - info['mu']:.4f}, K={info['K0']:.3f}); "
                  f"halt {info['blowup_reason']} near t={info['blowup_time_estimate']:.5f}; "
                  f"{_fmt_checks(checks)}; {run.seconds:.1f} s (< 600 s)")


# -- 10, 11 -----------------------------------------------------------------------------

def test_criterion_10_odi_engine():
    prob = OdiProblem(1.0, 2.0, 2.0, 1.0)
    out, sol = integrate_odi(prob, dense=True)
    drift = energy_drift(prob, sol)
    half = integrate_odi(prob, rtol=5e-11)
    ref = oracles.odi_escape_time(1, 2, 2, 1, prob.threshold)
    stab = abs(half.t_escape - out.t_escape)
    miss = abs(out.t_escape - ref)
    ok = isinstance(out, BlowUp) and drift <= 1e-8 and stab <= 1e-6 and miss <= 1e-6
    report(10, ok, f"energy drift {drift:.2e} (<= 1e-8); t_escape {out.t_escape:.10f}, "
                   f"halving change {stab:.2e}, oracle {ref:.10f} diff {miss:.2e} (<= 1e-6)")


def test_criterion_11_picard_vs_stepper(lwp_run):
    c = lwp_run.result.check("picard_vs_stepper_L2")
    conv = lwp_run.result.check("picard_converged")
    report(11, c.passed and conv.passed and c.bound == 10 * max(1e-10, 0.02**2),
           f"sup_t ||u_picard - u_step||_L2 = {c.value:.2e} (<= {c.bound:.1e}); "
           f"iterations {lwp_run.result.info['iterations']}, last difference {conv.value:.1e}")


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-s", "-q"]))
