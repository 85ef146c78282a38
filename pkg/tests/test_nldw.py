import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from dwlab import nldw
from dwlab.fields import BoundaryDecayWarning, Field, GridSpec, Lp, Sobolev, StatePair, norm_spatial
from dwlab.propagator import evolve_linear

G32 = GridSpec(3, 32, 2 * math.pi)


def gaussian_state(grid, amp, width=1.0, v_amp=0.0):
    r2 = grid.radius**2
    u = Field(grid, amp * np.exp(-r2 / width**2), real=True)
    v = Field(grid, v_amp * np.exp(-r2 / width**2), real=True)
    return StatePair(u, v, 0.0)


# -- nonlinearity ----------------------------------------------------------------

def test_nonlinearity_examples():
    g = GridSpec(1, 8, 1.0)
    assert np.all(nldw.nonlinearity(Field.zeros(g), d=3).values == 0)
    two = Field(g, np.full(8, 2.0))
    assert np.all(nldw.nonlinearity(two, d=3).values == 32)
    assert np.all(nldw.nonlinearity(two, d=3, lam=-1).values == -32)
    assert np.all(nldw.nonlinearity(two, d=3, lam=0).values == 0)
    i = Field(g, np.full(8, 1j))
    assert np.allclose(nldw.nonlinearity(i, d=3).values, 1j)
    assert np.allclose(nldw.nonlinearity(two, d=4).values, 8)  # |u|^2 u
    assert np.allclose(nldw.nonlinearity(two, d=5).values, 2 * 2 ** (4 / 3))
    with pytest.raises(ValueError):
        nldw.nonlinearity(two, d=6)
    with pytest.raises(ValueError):
        nldw.nonlinearity(two, d=3, lam=2)


def test_strichartz_exponents():
    assert nldw.strichartz_exponents(3) == (8.0, 4.0)


# -- functionals -----------------------------------------------------------------------

def test_functionals_zero():
    f = nldw.functionals(StatePair.zeros(G32))
    assert (f.E, f.J, f.K, f.H, f.I, f.Iprime) == (0, 0, 0, 0, 0, 0)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.1, 3.0))
def test_H_identity_random_fields(seed, amp):
    g = GridSpec(3, 16, 3.0)
    rng = np.random.default_rng(seed)
    s = StatePair(Field(g, amp * rng.normal(size=g.shape)), Field(g, rng.normal(size=g.shape)))
    f = nldw.functionals(s)  # raises ArithmeticError if the cross-check fails
    assert abs(f.H - (f.J - f.K / 6)) <= 1e-10 * (1 + abs(f.J))
    assert f.H == pytest.approx(f.grad2 / 3, rel=1e-14)


@pytest.mark.parametrize("lam", [0.5, 2.0])
def test_K_scaling(lam):
    s = gaussian_state(G32, 0.7)
    f1 = nldw.functionals(s)
    fl = nldw.functionals(StatePair(s.u * lam, s.v))
    assert fl.K == pytest.approx(lam**2 * f1.grad2 - lam**6 * f1.potential, rel=1e-12)
    # independent evaluation of the two terms
    U = s.u.spectrum().coeffs
    grad2 = float(np.sum(G32.xi2 * np.abs(U) ** 2))
    pot = norm_spatial(s.u, Lp(6)) ** 6
    assert fl.K == pytest.approx(lam**2 * grad2 - lam**6 * pot, rel=1e-10)


def test_I_and_Iprime():
    s = gaussian_state(G32, 0.5, v_amp=0.2)
    f = nldw.functionals(s)
    assert f.I == pytest.approx(0.5 * norm_spatial(s.u, Lp(2)) ** 2, rel=1e-12)
    assert f.Iprime == pytest.approx(G32.cell_volume * np.sum(s.u.values.real * s.v.values.real), rel=1e-12)


# -- Talenti and mu -------------------------------------------------------------------------

@pytest.mark.parametrize("d", [3, 4, 5])
def test_mu_against_beta_closed_form(d):
    assert nldw.mu(d) == pytest.approx(oracles.mu_oracle(d), rel=1e-8)


@pytest.mark.parametrize("d", [3, 4, 5])
def test_talenti_radial_functionals(d):
    W = nldw.talenti(d)
    assert W(0.0) == 1.0
    rf = nldw.radial_functionals(W, W.derivative, d)
    assert abs(rf["K"]) <= 1e-6 * rf["grad2"]
    assert rf["J"] == pytest.approx(nldw.mu(d), rel=1e-6)
    assert rf["H"] == pytest.approx(nldw.mu(d), rel=1e-6)


def test_talenti_grid_requirements():
    with pytest.warns(BoundaryDecayWarning):
        nldw.talenti(3, GridSpec(3, 16, 4.0))
    with pytest.raises(ValueError):
        nldw.talenti(4, GridSpec(3, 16, 4.0))
    with pytest.raises(ValueError):
        nldw.talenti(6)


def test_talenti_elliptic_residual():
    # -Lap(W G) = G W^5 - 2 grad W . grad G - W Lap G for a Gaussian window G;
    # the window makes the sampled field smooth and periodic so the spectral Laplacian is exact
    grid = GridSpec(3, 128, 16.0)
    sigma = 2.5
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", BoundaryDecayWarning)
        W = nldw.talenti(3, grid).values.real
    r = grid.radius
    Gw = np.exp(-(r**2) / (2 * sigma**2))
    dW = nldw.talenti_derivative(r, 3)
    dG = -r / sigma**2 * Gw
    lapG = (r**2 / sigma**4 - 3 / sigma**2) * Gw
    lhs = Field(grid, W * Gw).spectrum().multiply(grid.xi2).field().values.real
    rhs = Gw * W**5 - 2 * dW * dG - W * lapG
    scale = norm_spatial(Field(grid, Gw * W**5), Lp(2))
    assert norm_spatial(Field(grid, lhs - rhs), Lp(2)) <= 1e-6 * scale


def test_boxed_talenti_support():
    g = GridSpec(3, 32, 8.0)
    f = nldw.boxed_talenti(g)  # R = L/4 = 2, supported in |x| <= 4
    assert np.all(f.values[g.radius >= 4.0] == 0)
    assert f.values.real.max() == pytest.approx(1.2, rel=1e-12)  # the origin is a grid point


# -- classification ----------------------------------------------------------------------

def test_classify_examples():
    assert nldw.classify(StatePair.zeros(G32)).label == "InG"
    small = gaussian_state(G32, 0.01)
    assert nldw.classify(small).label == "InG"
    big = gaussian_state(G32, 0.1, v_amp=5.0)
    c = nldw.classify(big)
    assert c.label == "Neither" and "E >= mu" in c.reason
    assert str(c).startswith("Neither(")


def test_classify_boxed_talenti_in_B():
    g = GridSpec(3, 128, 80.0)
    c = nldw.classify(StatePair(nldw.boxed_talenti(g, 1.2, 40.0), Field.zeros(g)))
    assert c.label == "InB"
    assert c.E < c.mu and c.K < 0


def test_classify_tolerance_band(monkeypatch):
    s = gaussian_state(G32, 0.3)
    E = nldw.functionals(s).E
    monkeypatch.setattr(nldw, "mu", lambda d=3: E + 1e-8)
    assert nldw.classify(s).reason == "within mu tolerance"


# -- time stepper -----------------------------------------------------------------------

def test_zero_data_stays_zero():
    tr = nldw.integrate_nldw(StatePair.zeros(G32), 0.5, 0.02)
    assert not tr.blowup
    assert all(np.all(s.u.values == 0) and np.all(s.v.values == 0) for s in tr.states)
    assert len(tr.times) == 26


def test_linear_coupling_matches_evolve_linear():
    s = gaussian_state(G32, 2.0, v_amp=1.0)
    tr = nldw.integrate_nldw(s, 1.0, 0.02, lam=0)
    for t in (0.2, 0.5, 1.0):
        ref = evolve_linear(s, t)
        got = tr.state_at(t)
        assert np.max(np.abs(got.u.values - ref.u.values)) <= 1e-8
        assert np.max(np.abs(got.v.values - ref.v.values)) <= 1e-8


def test_linear_dissipation_identity():
    s = gaussian_state(G32, 1.0, v_amp=0.5)
    tr = nldw.integrate_nldw(s, 10.0, 0.02, lam=0)
    ms = nldw.monitor_series(tr)
    assert ms.max_dissipation_residual <= 1e-6 * ms.E[0]


def test_v2_rate_diagnostic_matches_finite_differences():
    s = gaussian_state(G32, 0.8, v_amp=0.5)
    tr = nldw.integrate_nldw(s, 0.4, 0.005)
    v2, rate = tr.diag("v2"), tr.diag("v2_rate")
    fd = (v2[2:] - v2[:-2]) / (2 * 0.005)
    assert np.max(np.abs(fd - rate[1:-1])) <= 1e-3 * np.max(np.abs(rate))


def test_second_order_convergence():
    s = gaussian_state(G32, 0.6)
    ends = [nldw.integrate_nldw(s, 1.0, dt).final_state for dt in (0.025, 0.0125, 0.00625)]
    d1 = norm_spatial(ends[0].u - ends[1].u, Sobolev(1))
    d2 = norm_spatial(ends[1].u - ends[2].u, Sobolev(1))
    assert 3.5 <= d1 / d2 <= 4.5


def test_defocusing_flow_dissipates():
    s = gaussian_state(G32, 1.5, width=0.8)
    tr = nldw.integrate_nldw(s, 2.0, 0.01, lam=-1)
    ms = nldw.monitor_series(tr)
    assert not tr.blowup
    assert np.all(np.diff(ms.E) <= 1e-12 * ms.E[0])
    assert ms.max_dissipation_residual <= max(1e-6 * ms.E[0], 5 * 0.01**2 * 2.0)


def test_focusing_large_data_blows_up():
    s = gaussian_state(G32, 6.0)
    tr = nldw.integrate_nldw(s, 2.0, 0.02)
    assert tr.blowup
    assert tr.halt_state is not None and tr.halt_state.time < 0.1
    assert tr.blowup_time_estimate is not None
    assert tr.blowup_time_estimate >= tr.halt_state.time - 1e-9
    assert tr.times[-1] <= tr.halt_state.time


def test_threshold_halt():
    s = gaussian_state(G32, 6.0)
    tr = nldw.integrate_nldw(s, 2.0, 0.02, opts=nldw.IntegratorOptions(blowup_threshold=50.0))
    assert tr.blowup and "exceeds" in tr.blowup_reason


def test_stepper_preconditions():
    s = gaussian_state(G32, 0.1)
    with pytest.raises(ValueError):
        nldw.integrate_nldw(s, 1.0, 0.1)  # CFL
    with pytest.raises(ValueError):
        nldw.integrate_nldw(s, 1.0, 0.015)  # not a whole number of steps
    with pytest.raises(ValueError):
        nldw.integrate_nldw(s, 1.0, 0.02, lam=0.5)
    wide = GridSpec(3, 32, 3.0)
    with pytest.warns(BoundaryDecayWarning):
        tr = nldw.integrate_nldw(gaussian_state(wide, 0.1, width=2.0), 0.02, 0.01)
    assert tr.warnings


def test_record_and_store_every():
    s = gaussian_state(G32, 0.3)
    opts = nldw.IntegratorOptions(record_every=5, store_every=2)
    tr = nldw.integrate_nldw(s, 1.0, 0.01, opts=opts)
    assert np.allclose(np.diff(tr.times), 0.05)
    assert tr.dt == pytest.approx(0.05)
    assert np.allclose(np.diff(tr.state_times[:-1]), 0.1)
    assert tr.state_times[-1] == pytest.approx(1.0)
    with pytest.raises(KeyError):
        tr.state_at(0.05)


# -- Picard ------------------------------------------------------------------------------

def test_picard_zero_data():
    res = nldw.picard_solve(StatePair.zeros(G32), 0.2, dt=0.02)
    assert res.iterations == 1
    assert res.differences == [0.0]


def test_picard_contracts_and_matches_stepper():
    s = gaussian_state(G32, 0.8)
    res = nldw.picard_solve(s, 1.0, dt=0.02, tol=1e-10)
    assert res.iterations >= 2
    assert all(f <= 0.5 for f in res.contraction_factors)
    tr = nldw.integrate_nldw(s, 1.0, 0.02)
    gap = max(norm_spatial(a.u - b.u, Lp(2)) for a, b in zip(res.trajectory.states, tr.states))
    assert gap <= 10 * max(1e-10, 0.02**2)


def test_picard_rejects_large_free_norm():
    with pytest.raises(ValueError):
        nldw.picard_solve(gaussian_state(G32, 3.0), 1.0, dt=0.02, delta=0.1)
    with pytest.raises(ValueError):
        nldw.picard_solve(gaussian_state(G32, 0.1), 1.01, dt=0.02)


def test_picard_no_convergence_error():
    s = gaussian_state(G32, 0.8)
    with pytest.raises(nldw.PicardDivergence):
        nldw.picard_solve(s, 1.0, dt=0.02, tol=1e-30, max_iter=3)


def test_picard_divergence_on_large_data():
    s = gaussian_state(G32, 4.0)
    with pytest.raises(nldw.PicardDivergence, match="smaller"):
        nldw.picard_solve(s, 1.0, dt=0.02, delta=1e9, max_iter=50)


# -- monitors -------------------------------------------------------------------------

def test_monitor_series_structure():
    s = gaussian_state(G32, 0.5, v_amp=0.3)
    tr = nldw.integrate_nldw(s, 1.0, 0.02)
    ms = nldw.monitor_series(tr)
    assert np.all(ms.I >= 0)
    assert np.all(np.diff(ms.S1) >= 0) and np.all(np.diff(ms.S2) >= 0)
    f0 = nldw.functionals(s)
    assert ms.E[0] == pytest.approx(f0.E, rel=1e-12)
    assert ms.K[0] == pytest.approx(f0.K, rel=1e-12)
    assert ms.Iprime[0] == pytest.approx(f0.Iprime, rel=1e-12)
    text = ms.to_csv()
    lines = text.split("\n")
    assert lines[0] == ",".join(nldw.MONITOR_COLUMNS)
    assert text.endswith("\n") and "\r" not in text
    assert len(lines) == len(ms.t) + 2
    assert all(line.endswith(",0") for line in lines[1:-1])


def test_monitor_blowup_flag_on_last_row():
    tr = nldw.integrate_nldw(gaussian_state(G32, 6.0), 2.0, 0.02, opts=nldw.IntegratorOptions(record_every=1))
    rows = nldw.monitor_series(tr).to_csv().strip().split("\n")[1:]
    assert rows[-1].endswith(",1")
    assert all(r.endswith(",0") for r in rows[:-1])


def test_monitor_S1_matches_spacetime_norm():
    from dwlab.fields import norm_spacetime

    s = gaussian_state(G32, 0.5)
    tr = nldw.integrate_nldw(s, 0.5, 0.02)
    ms = nldw.monitor_series(tr)
    assert ms.S1[-1] == pytest.approx(norm_spacetime(tr, 8, 8), rel=1e-10)
