"""One driver per experiment kind.

Each driver takes a validated :class:`ExperimentConfig` and returns an
:class:`ExperimentResult` holding CSV tables, pass/fail checks and the valid
time horizon of the run.
"""
from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from .. import exponents, nldw, odi, radial
from ..fields import (
    Field,
    GridSpec,
    High,
    Sobolev,
    StatePair,
    norm_spatial,
    project,
)
from ..propagator import SymbolKind, evolve_linear
from .config import ExperimentConfig

log = logging.getLogger(__name__)

STRICHARTZ_PAIRS = ((4, 4), (8, 8), (2, 6))


def make_rng(seed: int) -> np.random.Generator:
    """Philox-4x64-10 counter-based generator keyed by ``SeedSequence(seed)``."""
    return np.random.Generator(np.random.Philox(seed))


@dataclass
class Check:
    name: str
    passed: bool
    value: float
    bound: float
    detail: str = ""


@dataclass
class ExperimentResult:
    kind: str
    tables: dict = field(default_factory=dict)
    checks: list = field(default_factory=list)
    horizon: float | None = None
    info: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def check(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)


def _start(cfg: ExperimentConfig, res: ExperimentResult | None, horizon: float | None = None) -> ExperimentResult:
    """Result object the runner fills in place, so tables written before a failure survive it."""
    if res is None:
        res = ExperimentResult(cfg.kind)
    res.horizon = horizon
    return res


def fmt(x) -> str:
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    if isinstance(x, str):
        return x
    return repr(float(x))


def table(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


# -- exponents-table --------------------------------------------------------------

def golden_exponent_table() -> str:
    return resources.files("dwlab").joinpath("data/exponents_golden.csv").read_text(encoding="utf-8")


def run_exponents_table(cfg: ExperimentConfig, res: ExperimentResult | None = None) -> ExperimentResult:
    text = exponents.exponent_table_csv()
    res = _start(cfg, res)
    res.tables["exponents.csv"] = text
    gold = golden_exponent_table()
    mismatched = [
        i for i, (a, b) in enumerate(zip(text.splitlines(), gold.splitlines())) if a != b
    ] + ([-1] if len(text.splitlines()) != len(gold.splitlines()) else [])
    detail = "rows differing from the golden file: " + ",".join(map(str, mismatched)) if mismatched else ""
    res.checks.append(Check("golden_table", not mismatched, len(mismatched), 0, detail))
    return res


# -- decay-fit ----------------------------------------------------------------------

def gaussian_profile(sigma: float, rho_max: float, dr: float) -> radial.RadialProfile:
    return radial.RadialProfile.from_function(
        lambda r: np.exp(-np.asarray(r) ** 2 / (2 * sigma**2)), rho_max, dr=dr, tag="gaussian"
    )


def decay_slope(ts, norms) -> float:
    return float(np.polyfit(np.log(ts), np.log(norms), 1)[0])


def run_decay_fit(cfg: ExperimentConfig, res: ExperimentResult | None = None) -> ExperimentResult:
    p = cfg.params
    pexp = np.inf if p["p"] == "inf" else 2.0
    prof = gaussian_profile(p["sigma"], p["rho_max"], p["dr"])
    line = radial._line_for(prof, p["t_max"], None, None)
    horizon = line.R - prof.rho_max
    res = _start(cfg, res, horizon)
    if p["t_max"] > horizon:
        raise ValueError(f"fit window ends at {p['t_max']} beyond the valid horizon {horizon:g}")
    ts = np.geomspace(p["t_min"], p["t_max"], p["n_times"])
    norms = np.array([radial.radial_norm_d3(prof, SymbolKind.D, float(t), pexp) for t in ts])
    slope = decay_slope(ts, norms)
    rate = -1.5 * (1.0 - (0.0 if pexp == np.inf else 1.0 / pexp))
    tol = 0.1 if pexp == np.inf else 0.08
    res.tables["decay.csv"] = table(["t", "norm"], zip(ts, norms))
    res.tables["fit.csv"] = table(["q", "p", "slope", "rate", "tolerance"], [(1, p["p"], slope, rate, tol)])
    res.checks.append(Check(f"slope_q1_p{p['p']}", abs(slope - rate) <= tol, slope, tol,
                            f"expected {rate:g} +/- {tol:g}"))
    return res


# -- strichartz-ratio ----------------------------------------------------------------

def strichartz_ratios(seeds, j_max: int = 6, window: float = 16.0, pairs=STRICHARTZ_PAIRS):
    """Rows (seed, j, N, q, r, gamma, ratio) of ||D f||_{L^q L^r} / ||<grad>^{gamma-1} f||_{L^2}."""
    gam = {pr: float(exponents.gamma_loss(exponents.PairQR(pr[0], pr[1], 3))) for pr in pairs}
    r_max = max(r for _, r in pairs)
    rows = []
    for seed in seeds:
        rng = make_rng(seed)
        for j in range(j_max + 1):
            N = 2.0**j
            line = radial.line_for_band(N, window, r_max)
            kF = radial.band_limited_spectrum(line, N, rng)
            num = radial.spacetime_norms_d3(line, kF, pairs, T=window, dt_fine=min(0.01, 0.1 / N))
            for pr in pairs:
                den = line.l2_norm_spectral(kF, (1.0 + line.k**2) ** (gam[pr] - 1.0))
                rows.append((seed, j, N, pr[0], pr[1], gam[pr], num[pr] / den))
    return rows


def run_strichartz_ratio(cfg: ExperimentConfig, res: ExperimentResult | None = None) -> ExperimentResult:
    p = cfg.params
    seeds = [cfg.seed + i for i in range(p["n_seeds"])]
    rows = strichartz_ratios(seeds, p["j_max"], p["window"])
    res = _start(cfg, res, p["window"])
    res.info["seeds"] = seeds
    res.tables["strichartz.csv"] = table(["seed", "j", "N", "q", "r", "gamma", "ratio"], rows)
    summary = []
    for q, r in STRICHARTZ_PAIRS:
        vals = np.array([row[6] for row in rows if row[3] == q and row[4] == r])
        spread = float(vals.max() / vals.min())
        summary.append((q, r, vals.min(), vals.max(), spread))
        res.checks.append(Check(f"ratio_spread_q{q}_r{r}", spread <= p["bound"], spread, p["bound"]))
    res.tables["strichartz_summary.csv"] = table(["q", "r", "min", "max", "max_over_min"], summary)
    return res


# -- linear-highfreq -------------------------------------------------------------------

def wave_packets(grid: GridSpec, rng, count: int, sigma: float) -> Field:
    """Sum of Gaussian packets with random centres (|x_i| <= 1), directions and |k| in [2.5, 4]."""
    vals = np.zeros(grid.shape)
    for _ in range(count):
        centre = rng.uniform(-1.0, 1.0, grid.d) / math.sqrt(grid.d)
        direction = rng.normal(size=grid.d)
        direction /= np.linalg.norm(direction)
        k = rng.uniform(2.5, 4.0) * direction
        phase = rng.uniform(0, 2 * np.pi)
        amp = rng.uniform(0.5, 1.5)
        r2 = sum((c - x0) ** 2 for c, x0 in zip(grid.coords, centre))
        arg = sum(kk * c for kk, c in zip(k, grid.coords)) + phase
        vals = vals + amp * np.exp(-r2 / (2 * sigma**2)) * np.cos(arg)
    return Field(grid, vals, real=True)


def energy_norm(s: StatePair) -> float:
    return math.hypot(norm_spatial(s.u, Sobolev(1.0)), norm_spatial(s.v, Sobolev(0.0)))


def run_linear_highfreq(cfg: ExperimentConfig, res: ExperimentResult | None = None) -> ExperimentResult:
    p = cfg.params
    grid = GridSpec(p["d"], p["n"], p["half_length"])
    rng = make_rng(cfg.seed)
    u0 = project(wave_packets(grid, rng, p["packets"], p["sigma"]).spectrum(), High).field()
    v0 = project(wave_packets(grid, rng, p["packets"], p["sigma"]).spectrum(), High).field()
    s0 = StatePair(u0, v0, 0.0)
    res = _start(cfg, res, grid.valid_horizon)
    ts = np.arange(0.0, p["T"] + 0.5 * p["dt"], p["dt"])
    e0 = energy_norm(s0)
    norms = np.array([energy_norm(evolve_linear(s0, float(t))) for t in ts]) / e0
    slope = float(np.polyfit(ts, np.log(norms), 1)[0])
    C = float(np.max(norms * np.exp(ts / 4)))
    res.tables["highfreq.csv"] = table(["t", "relative_energy_norm"], zip(ts, norms))
    res.info.update(slope=slope, constant=C)
    res.checks.append(Check("log_norm_slope", slope <= -0.25 + 0.01, slope, -0.24))
    res.checks.append(Check("within_horizon", p["T"] <= grid.valid_horizon, p["T"], grid.valid_horizon))
    return res


# -- nonlinear runs ----------------------------------------------------------------

def log_bump(grid: GridSpec, sigma: float) -> Field:
    """Laplacian-of-Gaussian profile (zero mean, so the torus zero mode is not excited)."""
    r2 = grid.radius**2
    s2 = sigma**2
    return Field(grid, (r2 / s2 - grid.d) * np.exp(-r2 / (2 * s2)), real=True)


def small_data(grid: GridSpec, sigma: float, norm: float) -> StatePair:
    u = log_bump(grid, sigma)
    s = StatePair(u, Field.zeros(grid), 0.0)
    return StatePair(u * (norm / energy_norm(s)), Field.zeros(grid), 0.0)


def dissipation_check(ms: nldw.MonitorSeries, dt: float, T: float) -> Check:
    bound = max(1e-6 * abs(ms.E[0]), 5 * dt**2 * T)
    val = ms.max_dissipation_residual
    return Check("energy_dissipation_identity", val <= bound, val, bound)


def monitor_csv(ms: nldw.MonitorSeries) -> str:
    return ms.to_csv()


def run_lwp_contraction(cfg: ExperimentConfig, res: ExperimentResult | None = None) -> ExperimentResult:
    p = cfg.params
    grid = GridSpec(3, p["n"], p["half_length"])
    s0 = small_data(grid, p["sigma"], p["norm"])
    res = _start(cfg, res, grid.valid_horizon)
    traj = nldw.integrate_nldw(s0, p["T"], p["dt"])
    ms = nldw.monitor_series(traj)
    res.tables["monitor.csv"] = monitor_csv(ms)
    res.info["monitor"] = ms
    pic = nldw.picard_solve(s0, p["T"], tol=p["tol"], max_iter=p["max_iter"], dt=p["dt"], delta=p["delta"])
    err = max(
        norm_spatial(a.u - b.u, Sobolev(0.0)) for a, b in zip(pic.trajectory.states, traj.states)
    )
    bound = 10 * max(p["tol"], p["dt"] ** 2)
    factors = [float("nan")] + list(pic.contraction_factors)
    res.tables["picard.csv"] = table(["iteration", "difference", "contraction_factor"],
                                     [(i + 1, dd, f) for i, (dd, f) in enumerate(zip(pic.differences, factors))])
    res.checks.append(Check("picard_converged", pic.differences[-1] < p["tol"], pic.differences[-1], p["tol"]))
    res.checks.append(Check("picard_vs_stepper_L2", err <= bound, err, bound))
    res.checks.append(dissipation_check(ms, p["dt"], p["T"]))
    res.info.update(iterations=pic.iterations, free_norm=pic.free_norm)
    return res


def run_global_decay(cfg: ExperimentConfig, res: ExperimentResult | None = None) -> ExperimentResult:
    p = cfg.params
    grid = GridSpec(3, p["n"], p["half_length"])
    s0 = small_data(grid, p["sigma"], p["norm"])
    res = _start(cfg, res, grid.valid_horizon)
    opts = nldw.IntegratorOptions(record_every=p["record_every"], store_every=10**9)
    traj = nldw.integrate_nldw(s0, p["T"], p["dt"], opts=opts)
    ms = nldw.monitor_series(traj)
    res.tables["monitor.csv"] = monitor_csv(ms)
    res.info["monitor"] = ms
    terminal = energy_norm(traj.final_state) / energy_norm(s0)
    i = int(np.searchsorted(ms.t, ms.t[0] + 0.1 * (ms.t[-1] - ms.t[0])))
    grow1 = float(ms.S1[-1] / ms.S1[i] - 1.0)
    grow2 = float(ms.S2[-1] / ms.S2[i] - 1.0)
    res.checks.append(Check("no_blowup", not traj.blowup, float(traj.blowup), 0, traj.blowup_reason))
    res.checks.append(Check("terminal_energy_ratio", terminal < 1e-3, terminal, 1e-3))
    res.checks.append(Check("S1_plateau", grow1 < 0.01, grow1, 0.01, "increase over [T/10, T]"))
    res.checks.append(Check("S2_plateau", grow2 < 0.01, grow2, 0.01, "increase over [T/10, T]"))
    res.checks.append(dissipation_check(ms, p["dt"], p["T"]))
    res.info.update(classification=str(nldw.classify(s0)))
    return res


def odi_seed(ms: nldw.MonitorSeries, d: int = 3):
    """(t1, C, I(t1), I'(t1)) for the ratio-onset time t1, or None."""
    if ms.ratio_onset is None:
        return None
    i = int(np.searchsorted(ms.t, ms.ratio_onset))
    I1, dI1, E1 = float(ms.I[i]), float(ms.Iprime[i]), float(ms.E[i])
    C = (2 * d / (d - 2)) * (ms.mu - E1) / I1 ** ((d - 1) / (d - 2))
    return float(ms.t[i]), C, I1, dI1


def run_blowup(cfg: ExperimentConfig, res: ExperimentResult | None = None) -> ExperimentResult:
    p = cfg.params
    grid = GridSpec(3, p["n"], p["half_length"])
    s0 = StatePair(nldw.boxed_talenti(grid, p["scale"], p["R"]), Field.zeros(grid), 0.0)
    res = _start(cfg, res, grid.valid_horizon)
    cls = nldw.classify(s0)
    log.info("initial data: E = %.9g, K = %.9g, mu = %.9g -> %s", cls.E, cls.K, cls.mu, cls)
    res.info.update(E0=cls.E, K0=cls.K, mu=cls.mu, classification=str(cls))
    res.checks.append(Check("initial_in_B", cls.label == "InB", cls.E - cls.mu, 0.0, f"K = {cls.K:.6g}"))
    opts = nldw.IntegratorOptions(blowup_threshold=p["threshold"], min_substep=p["min_substep"], store_every=10**9)
    traj = nldw.integrate_nldw(s0, p["T"], p["dt"], opts=opts)
    ms = nldw.monitor_series(traj)
    res.tables["monitor.csv"] = monitor_csv(ms)
    res.info["monitor"] = ms
    res.info.update(blowup_reason=traj.blowup_reason, blowup_time_estimate=traj.blowup_time_estimate,
                    halt_time=traj.halt_state.time if traj.halt_state else None)
    res.checks.append(Check("blowup_flag", traj.blowup, float(traj.blowup), 1, traj.blowup_reason))
    res.checks.append(Check("K_negative", bool(np.all(ms.K < 0)), float(ms.K.max()), 0.0))
    if ms.F_onset is None:
        res.checks.append(Check("F_positive_after_onset", False, float("nan"), 0.0, "F never stays positive"))
    else:
        after = ms.t >= ms.F_onset
        res.checks.append(Check("F_positive_after_onset", bool(np.all(ms.F[after] > 0)),
                                float(ms.F[after].min()), 0.0, f"onset t0 = {ms.F_onset:g}"))
    if ms.ratio_onset is None:
        res.checks.append(Check("ratio_nonincreasing_after_onset", False, float("nan"), 0.0, "no onset"))
    else:
        after = ms.t >= ms.ratio_onset
        steps = np.diff(ms.ratio[after])
        worst = float(steps.max()) if steps.size else 0.0
        res.checks.append(Check("ratio_nonincreasing_after_onset", worst <= 0.0, worst, 0.0,
                                f"onset t1 = {ms.ratio_onset:g}"))
    seed = odi_seed(ms)
    if seed is not None:
        t1, C, I1, dI1 = seed
        prob = odi.OdiProblem(C, 2.0, I1, dI1, threshold=1e6 * I1, t_max=1e4, damping="friction")
        out = odi.integrate_odi(prob)
        res.tables["odi_seed.csv"] = table(["t1", "C", "I", "Iprime", "outcome", "t_escape"],
                                           [(t1, C, I1, dI1, out.outcome, getattr(out, "t_escape", float("nan")))])
        res.info.update(odi_outcome=out.outcome)
    return res


# -- odi-demo ---------------------------------------------------------------------------

def run_odi_demo(cfg: ExperimentConfig, res: ExperimentResult | None = None) -> ExperimentResult:
    p = cfg.params
    res = _start(cfg, res)
    pairs, drifts, halving = [], [], []
    grid = {}
    for C in p["C"]:
        for h0 in p["h0"]:
            prob = odi.OdiProblem(C, p["gamma"], h0, p["h1"], threshold=p["threshold"], t_max=p["t_max"])
            out, sol = odi.integrate_odi(prob, rtol=p["rtol"], dense=True)
            pairs.append((prob, out))
            grid[(C, h0)] = out
            if sol is not None:
                drifts.append(odi.energy_drift(prob, sol))
            if isinstance(out, odi.BlowUp):
                half = odi.integrate_odi(prob, rtol=p["rtol"] / 2)
                halving.append(abs(half.t_escape - out.t_escape))
    res.tables["odi.csv"] = odi.odi_csv(pairs)
    drift = max(drifts) if drifts else 0.0
    res.checks.append(Check("energy_drift", drift <= 1e-8, drift, 1e-8, "relative to term magnitudes"))
    stab = max(halving) if halving else 0.0
    res.checks.append(Check("tolerance_halving", stab <= 1e-6, stab, 1e-6))

    def t_of(out):
        return out.t_escape if isinstance(out, odi.BlowUp) else math.inf

    mono_bad = 0
    Cs, hs = sorted(p["C"]), sorted(p["h0"])
    for h0 in hs:
        ts = [t_of(grid[(C, h0)]) for C in Cs]
        mono_bad += sum(b > a for a, b in zip(ts, ts[1:]))
    for C in Cs:
        ts = [t_of(grid[(C, h0)]) for h0 in hs]
        mono_bad += sum(b > a for a, b in zip(ts, ts[1:]))
    res.checks.append(Check("monotone_comparison", mono_bad == 0, mono_bad, 0))
    dominant = [(pr, out) for pr, out in pairs if pr.C * pr.h0 ** (pr.gamma - 1) >= 2]
    ok = all(isinstance(out, odi.BlowUp) and out.t_escape < pr.t_max for pr, out in dominant)
    res.checks.append(Check("dominance_blowup", ok, len(dominant), len(dominant)))
    return res


RUNNERS = {
    "exponents-table": run_exponents_table,
    "decay-fit": run_decay_fit,
    "strichartz-ratio": run_strichartz_ratio,
    "linear-highfreq": run_linear_highfreq,
    "lwp-contraction": run_lwp_contraction,
    "global-decay": run_global_decay,
    "blowup": run_blowup,
    "odi-demo": run_odi_demo,
}
