import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from dwlab.odi import BlowUp, OdiProblem, Rejected, Survived, energy_drift, extremal_energy, integrate_odi, odi_csv

REF = OdiProblem(C=1.0, gamma=2.0, h0=2.0, h1=1.0)


def test_reference_problem_blows_up_at_oracle_time():
    out = integrate_odi(REF)
    assert isinstance(out, BlowUp) and out.outcome == "BlowUp"
    ref = oracles.odi_escape_time(1, 2, 2, 1, 1e6)
    assert out.t_escape == pytest.approx(ref, abs=1e-6)
    half = integrate_odi(REF, rtol=5e-11)
    assert abs(half.t_escape - out.t_escape) <= 1e-6


def test_energy_conserved():
    out, sol = integrate_odi(REF, dense=True)
    assert energy_drift(REF, sol) <= 1e-8
    G = extremal_energy(sol.y[0], sol.y[1], REF.C, REF.gamma)
    h, dh = sol.y
    terms = np.maximum.reduce([0.5 * dh**2, 0.5 * h**2, REF.C * h**3 / 3])
    assert np.max(np.abs(G - G[0]) / np.maximum(terms, abs(G[0]))) <= 1e-8


@pytest.mark.parametrize("kw,needle", [
    (dict(C=0.0), "C"),
    (dict(C=-1.0), "C"),
    (dict(gamma=1.0), "gamma"),
    (dict(h0=0.0), "h0"),
    (dict(h1=0.0), "h1"),
    (dict(h1=-0.5), "h1"),
    (dict(threshold=1.0), "threshold"),
    (dict(t_max=0.0), "t_max"),
    (dict(damping="viscous"), "damping"),
    (dict(C=math.nan), "non-finite"),
])
def test_rejections(kw, needle):
    params = dict(C=1.0, gamma=2.0, h0=2.0, h1=1.0)
    params.update(kw)
    out = integrate_odi(OdiProblem(**params))
    assert isinstance(out, Rejected) and out.outcome == "Rejected"
    assert needle in out.reason


def test_survival_below_dominance():
    # C h0^{g-1} small and small slope: the orbit stays in the potential well
    out = integrate_odi(OdiProblem(C=0.1, gamma=2.0, h0=0.5, h1=0.1, t_max=50))
    assert isinstance(out, Survived) and out.t_max == 50


def test_monotone_comparison_grid():
    Cs = [0.5, 1.0, 2.0, 4.0]
    hs = [0.5, 1.0, 2.0, 4.0]

    def t(C, h0):
        out = integrate_odi(OdiProblem(C, 2.0, h0, 1.0))
        return out.t_escape if isinstance(out, BlowUp) else math.inf

    table = {(C, h): t(C, h) for C in Cs for h in hs}
    for h in hs:
        col = [table[(C, h)] for C in Cs]
        assert all(b <= a for a, b in zip(col, col[1:]))
    for C in Cs:
        row = [table[(C, h)] for h in hs]
        assert all(b <= a for a, b in zip(row, row[1:]))


@settings(max_examples=25, deadline=None)
@given(st.floats(0.2, 5.0), st.floats(1.2, 3.0), st.floats(0.3, 4.0), st.floats(0.05, 3.0))
def test_dominance_implies_blowup(C, gamma, h0, h1):
    p = OdiProblem(C, gamma, h0, h1)
    if C * h0 ** (gamma - 1) < 2:
        return
    out = integrate_odi(p)
    assert isinstance(out, BlowUp) and out.t_escape < 100
    ref = oracles.odi_escape_time(C, gamma, h0, h1, p.threshold)
    assert out.t_escape == pytest.approx(ref, rel=1e-6, abs=1e-7)


def test_friction_variant():
    p = OdiProblem(1.0, 2.0, 2.0, 1.0, damping="friction")
    out = integrate_odi(p)
    assert isinstance(out, BlowUp)
    # friction only slows the escape of the undamped flow h'' = C h^2
    from scipy.integrate import solve_ivp

    def hit(t, y):
        return y[0] - 1e6

    hit.terminal = True
    sol = solve_ivp(lambda t, y: [y[1], y[0] ** 2], (0, 100), [2.0, 1.0], events=hit, rtol=1e-11, atol=1e-14)
    assert sol.t_events[0][0] < out.t_escape


def test_csv_format():
    rows = [(REF, integrate_odi(REF)), (OdiProblem(0.0, 2.0, 1.0, 1.0), integrate_odi(OdiProblem(0.0, 2.0, 1.0, 1.0)))]
    text = odi_csv(rows)
    lines = text.split("\n")
    assert lines[0] == "C,gamma,h0,h1,outcome,t_escape"
    assert lines[1].startswith("1.0,2.0,2.0,1.0,BlowUp,")
    assert lines[2] == "0.0,2.0,1.0,1.0,Rejected,"
    assert text.endswith("\n")
