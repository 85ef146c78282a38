"""Energy-critical nonlinear damped wave flow on the periodic box.

    u_tt - Lap u + u_t = lam |u|^{4/(d-2)} u

The time stepper propagates the linear part exactly per Fourier mode and
treats the Duhamel term with the trapezoid rule.  Because D(0) = 0 the
trapezoid increment for ``u`` only needs the nonlinearity at the start of the
step; the ``v`` increment then uses the freshly computed end-point value, so
the scheme is explicit.
"""
from __future__ import annotations

import csv
import io
import logging
import math
import warnings
from collections import deque
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.fft as sfft
from scipy.integrate import romb

from .fields import (
    BoundaryDecayWarning,
    Field,
    GridSpec,
    StatePair,
    boundary_max,
    chi_le1,
    lp_norm,
    time_norm,
)
from .propagator import damped_symbols, propagator_matrix

__all__ = [
    "nonlinearity",
    "Functionals",
    "functionals",
    "talenti_value",
    "talenti_derivative",
    "talenti",
    "boxed_talenti",
    "mu",
    "radial_functionals",
    "Classification",
    "classify",
    "IntegratorOptions",
    "Trajectory",
    "integrate_nldw",
    "PicardDivergence",
    "PicardResult",
    "picard_solve",
    "MonitorSeries",
    "monitor_series",
    "strichartz_exponents",
]

log = logging.getLogger(__name__)

MU_TOL = 1e-6


def _power(d: int) -> float:
    if d not in (3, 4, 5):
        raise ValueError(f"nonlinearity dimension must be 3, 4 or 5, got {d}")
    return 4.0 / (d - 2)


def strichartz_exponents(d: int):
    """(2(d+1)/(d-2), 2(d+1)/(d-1)): exponents of the S1 and S2 accumulators."""
    return 2.0 * (d + 1) / (d - 2), 2.0 * (d + 1) / (d - 1)


def _nl(values, d, lam):
    if lam == 0:
        return np.zeros_like(values)
    p = _power(d)
    a = np.abs(values)
    if p == 4.0:
        a2 = a * a
        return lam * (a2 * a2) * values
    return lam * a**p * values


def nonlinearity(u: Field, d: int | None = None, lam: float = 1.0) -> Field:
    """Pointwise lam |u|^{4/(d-2)} u."""
    d = u.grid.d if d is None else d
    _power(d)
    if lam not in (1, -1, 0):
        raise ValueError(f"coupling must be +1, -1 or 0, got {lam}")
    return Field(u.grid, _nl(u.values, d, lam), real=u.real)


# -- functionals ----------------------------------------------------------------

class _Transform:
    """Orthonormal grid transform; real fields use the half spectrum (rfftn)."""

    def __init__(self, grid: GridSpec, real: bool):
        self.grid, self.real = grid, real
        self.scale = np.sqrt(grid.cell_volume)
        if real:
            n = grid.n
            xi_last = grid.frequency_spacing * np.fft.rfftfreq(n, d=1.0 / n)
            full = [grid.frequency_spacing * np.fft.fftfreq(n, d=1.0 / n)] * (grid.d - 1)
            ks = np.meshgrid(*(full + [xi_last]), indexing="ij", sparse=True)
            self.xi2 = np.broadcast_to(sum(k**2 for k in ks), grid.shape[:-1] + (n // 2 + 1,)).copy()
            w = np.full(n // 2 + 1, 2.0)
            w[0] = w[-1] = 1.0
            self.weight = np.broadcast_to(w, self.xi2.shape)
        else:
            self.xi2 = grid.xi2
            self.weight = None
        self.xi_abs = np.sqrt(self.xi2)

    def fwd(self, values):
        if self.real:
            return self.scale * sfft.rfftn(np.real(values), norm="ortho", workers=-1)
        return self.scale * sfft.fftn(values, norm="ortho", workers=-1)

    def inv(self, coeffs):
        if self.real:
            return sfft.irfftn(coeffs, s=self.grid.shape, norm="ortho", workers=-1) / self.scale
        return sfft.ifftn(coeffs, norm="ortho", workers=-1) / self.scale

    def dot(self, A, B) -> float:
        """Re <B, A> over the full lattice."""
        prod = (A * np.conj(B)).real
        return float(np.sum(prod if self.weight is None else self.weight * prod))

    def sq(self, A, mult=None) -> float:
        a = A.real**2 + A.imag**2
        if mult is not None:
            a = mult * a
        return float(np.sum(a if self.weight is None else self.weight * a))


@dataclass(frozen=True)
class Functionals:
    E: float
    J: float
    K: float
    H: float
    I: float
    Iprime: float
    grad2: float = 0.0
    kinetic2: float = 0.0
    potential: float = 0.0


def _functionals_from(grad2, v2, pot, l2u, iprime, d, lam=1.0):
    c = (d - 2) / (2 * d)
    J = 0.5 * grad2 - c * pot
    K = grad2 - pot
    H = grad2 / d
    H_alt = J - c * K
    if abs(H - H_alt) > 1e-10 * (1 + abs(J)):
        raise ArithmeticError(f"H cross-check failed: {H} vs {H_alt}")
    E = 0.5 * grad2 + 0.5 * v2 - lam * c * pot
    return Functionals(E=E, J=J, K=K, H=H, I=0.5 * l2u, Iprime=iprime, grad2=grad2, kinetic2=v2, potential=pot)


def functionals(s: StatePair, d: int | None = None, lam: float = 1.0) -> Functionals:
    """E, J, K, H, I = ||u||^2/2 and I' = Re<u, v> by grid quadrature.

    ``lam`` only enters E (the flow's energy); J, K, H are the focusing
    functionals used by the variational characterization.
    """
    grid = s.grid
    d = grid.d if d is None else d
    _power(d)
    U = s.u.spectrum().coeffs
    V = s.v.spectrum().coeffs
    grad2 = float(np.sum(grid.xi2 * np.abs(U) ** 2))
    v2 = float(np.vdot(V, V).real)
    l2u = float(np.vdot(U, U).real)
    iprime = float(np.vdot(V, U).real)
    pot = lp_norm(s.u.values, grid.cell_volume, 2 * d / (d - 2)) ** (2 * d / (d - 2))
    return _functionals_from(grad2, v2, pot, l2u, iprime, d, lam)


# -- Talenti function and mu --------------------------------------------------------

def talenti_value(r, d: int = 3):
    return (1.0 + np.asarray(r, dtype=float) ** 2 / (d * (d - 2))) ** (-(d - 2) / 2.0)


def talenti_derivative(r, d: int = 3):
    r = np.asarray(r, dtype=float)
    return -(r / d) * (1.0 + r**2 / (d * (d - 2))) ** (-d / 2.0)


@dataclass(frozen=True)
class TalentiRadial:
    """W as a radial function on R^d (it is not in L^2 for d <= 4, so it is not a RadialProfile)."""

    d: int

    def __call__(self, r):
        return talenti_value(r, self.d)

    def derivative(self, r):
        return talenti_derivative(r, self.d)


def talenti(d: int = 3, grid: GridSpec | None = None):
    """W sampled on ``grid`` (d = 3 only) or, with ``grid=None``, its radial form."""
    if grid is None:
        if d not in (3, 4, 5):
            raise ValueError(f"radial Talenti function needs d in 3..5, got {d}")
        return TalentiRadial(d)
    if d != 3 or grid.d != 3:
        raise ValueError("grid Talenti function is provided for d = 3 on a 3-D grid")
    tail = _talenti_gradient_tail(d, grid.half_length)
    if tail > 1e-4:
        warnings.warn(
            f"box truncation drops {tail:.3g} of ||grad W||^2 (> 1e-4)", BoundaryDecayWarning, stacklevel=2
        )
    return Field(grid, talenti_value(grid.radius, d), real=True)


def boxed_talenti(grid: GridSpec, scale: float = 1.2, R: float | None = None) -> Field:
    """scale * chi(|x|/R) * W with R = L/4 by default; supported in |x| <= 2R."""
    R = grid.half_length / 4 if R is None else R
    r = grid.radius
    return Field(grid, scale * chi_le1(r / R) * talenti_value(r, 3), real=True)


def _sphere_area(d: int) -> float:
    return 2 * math.pi ** (d / 2) / math.gamma(d / 2)


def _mapped_romberg(integrand, tail_limit, k: int = 14) -> float:
    """int_0^inf integrand(r) dr via r = s/(1-s) and Romberg on [0, 1]."""
    s = np.linspace(0.0, 1.0, 2**k + 1)
    g = np.empty_like(s)
    inner = s < 1.0
    r = s[inner] / (1.0 - s[inner])
    g[inner] = integrand(r) / (1.0 - s[inner]) ** 2
    g[~inner] = tail_limit
    return float(romb(g, dx=s[1] - s[0]))


def _talenti_gradient_integral(d: int) -> float:
    """||grad W||^2 over R^d."""
    a = d * (d - 2)
    tail = float(a ** ((d - 2) / 2.0) * (d - 2)) ** 2 if d == 3 else 0.0
    val = _mapped_romberg(lambda r: talenti_derivative(r, d) ** 2 * r ** (d - 1), tail)
    return _sphere_area(d) * val


def _talenti_gradient_tail(d: int, R: float) -> float:
    """Fraction of ||grad W||^2 carried by |x| > R (radial quadrature on [R, inf))."""
    total = _talenti_gradient_integral(d)
    s = np.linspace(0.0, 1.0, 2**12 + 1)
    inner = s < 1.0
    g = np.empty_like(s)
    r = R + s[inner] / (1.0 - s[inner])
    g[inner] = talenti_derivative(r, d) ** 2 * r ** (d - 1) / (1.0 - s[inner]) ** 2
    g[~inner] = float(d * (d - 2)) ** (d - 2) * (d - 2) ** 2 if d == 3 else 0.0
    return _sphere_area(d) * float(romb(g, dx=s[1] - s[0])) / total


@lru_cache(maxsize=None)
def mu(d: int = 3) -> float:
    """mu = J(W) = (1/d) ||grad W||^2 by radial quadrature with Richardson extrapolation."""
    _power(d)
    return _talenti_gradient_integral(d) / d


def radial_functionals(phi, dphi, d: int, k: int = 14) -> dict:
    """J, K, H, ||grad phi||^2 and ||phi||_{2d/(d-2)}^{2d/(d-2)} for a radial phi on R^d.

    ``phi`` and ``dphi`` are callables of r.  Both integrands must decay fast
    enough that their mapped versions vanish at r = inf (true for W when
    d >= 4 and for any profile decaying faster than r^{-(d-2)}); the d = 3
    Talenti tail is handled by sampling just short of s = 1.
    """
    _power(d)
    pexp = 2 * d / (d - 2)
    area = _sphere_area(d)

    def mapped(fn):
        s = np.linspace(0.0, 1.0, 2**k + 1)
        g = np.zeros_like(s)
        inner = s < 1.0
        r = s[inner] / (1.0 - s[inner])
        g[inner] = fn(r) / (1.0 - s[inner]) ** 2
        # extrapolate the end-point value from the last interior samples
        g[-1] = 3 * g[-2] - 3 * g[-3] + g[-4]
        return area * float(romb(g, dx=s[1] - s[0]))

    grad2 = mapped(lambda r: dphi(r) ** 2 * r ** (d - 1))
    pot = mapped(lambda r: np.abs(phi(r)) ** pexp * r ** (d - 1))
    c = (d - 2) / (2 * d)
    return {
        "grad2": grad2,
        "potential": pot,
        "J": 0.5 * grad2 - c * pot,
        "K": grad2 - pot,
        "H": grad2 / d,
    }


@dataclass(frozen=True)
class Classification:
    label: str  # "InB", "InG" or "Neither"
    E: float
    K: float
    mu: float
    reason: str = ""

    def __str__(self):
        return f"{self.label}({self.reason})" if self.reason else self.label


def classify(s: StatePair, d: int | None = None) -> Classification:
    """Membership in B = {E < mu, K < 0} or G = {E < mu, K >= 0}."""
    d = s.grid.d if d is None else d
    f = functionals(s, d)
    m = mu(d)
    if abs(f.E - m) < MU_TOL:
        return Classification("Neither", f.E, f.K, m, "within mu tolerance")
    if f.E >= m:
        return Classification("Neither", f.E, f.K, m, "E >= mu")
    return Classification("InB" if f.K < 0 else "InG", f.E, f.K, m)


# -- time stepping ---------------------------------------------------------------

@dataclass
class IntegratorOptions:
    blowup_threshold: float = 1e6
    record_every: int = 1  # record diagnostics every this many outer steps
    store_every: int | None = None  # keep full states every this many records (None: all)
    nonlinear_cfl: float = 0.1  # substep h <= c / sqrt((1+p) |u|_inf^p)
    min_substep: float = 1e-12
    check_cfl: bool = True
    check_boundary: bool = True


_DIAG_KEYS = ("grad2", "v2", "v2_rate", "l2u", "iprime", "pot", "s1_integrand", "s2_integrand", "sup_u")


@dataclass
class Trajectory:
    grid: GridSpec
    lam: float
    d: int
    dt: float  # spacing of the recorded samples
    times: list = field(default_factory=list)
    diagnostics: dict = field(default_factory=lambda: {k: [] for k in _DIAG_KEYS})
    state_times: list = field(default_factory=list)
    states: list = field(default_factory=list)
    blowup: bool = False
    blowup_reason: str = ""
    blowup_time_estimate: float | None = None
    halt_state: StatePair | None = None
    warnings: list = field(default_factory=list)

    def diag(self, key) -> np.ndarray:
        return np.asarray(self.diagnostics[key], dtype=float)

    @property
    def final_state(self) -> StatePair:
        return self.states[-1]

    def state_at(self, t: float) -> StatePair:
        i = int(np.argmin(np.abs(np.asarray(self.state_times) - t)))
        if abs(self.state_times[i] - t) > 1e-9 * max(1.0, abs(t)):
            raise KeyError(f"no stored state at t = {t}")
        return self.states[i]


class _Stepper:
    """Spectral-space stepper holding cached per-substep multipliers."""

    def __init__(self, grid: GridSpec, dt: float, d: int, lam: float, real: bool):
        self.grid, self.dt, self.d, self.lam = grid, dt, d, lam
        self.tr = _Transform(grid, real)
        self.cell = grid.cell_volume
        self._cache = {}
        self.jb = (1.0 + self.tr.xi2) ** 0.25
        self.q1, self.q2 = strichartz_exponents(d)

    def multipliers(self, m: int):
        if m not in self._cache:
            h = self.dt / m
            a11, a12, a21, a22 = propagator_matrix(h, self.tr.xi_abs)
            self._cache[m] = (h, a11, a12, a21, a22)
            if len(self._cache) > 6:
                self._cache.pop(next(iter(self._cache)))
        return self._cache[m]

    def nl_hat(self, u):
        if self.lam == 0:
            return np.zeros(self.tr.xi2.shape, dtype=complex)
        return self.tr.fwd(_nl(u, self.d, self.lam))

    def substep(self, U, V, Nh, m):
        h, a11, a12, a21, a22 = self.multipliers(m)
        Vk = V + 0.5 * h * Nh
        U1 = a11 * U + a12 * Vk
        V1 = a21 * U + a22 * Vk
        u1 = self.tr.inv(U1)
        N1 = self.nl_hat(u1)
        V1 += 0.5 * h * N1
        return U1, V1, u1, N1

    def diagnostics(self, U, V, u, Nh=None):
        tr = self.tr
        au = np.abs(u)
        pexp = 2 * self.d / (self.d - 2)
        s2 = tr.inv(self.jb * U)
        # d/dt ||v||^2 = 2 Re <v, Lap u - v + N(u)>
        acc = -tr.xi2 * U - V
        if self.lam != 0:
            acc = acc + (self.nl_hat(u) if Nh is None else Nh)
        return {
            "grad2": tr.sq(U, tr.xi2),
            "v2": tr.sq(V),
            "v2_rate": 2.0 * tr.dot(acc, V),
            "l2u": tr.sq(U),
            "iprime": tr.dot(V, U),
            "pot": float(self.cell * np.sum(au**pexp)),
            "s1_integrand": float(self.cell * np.sum(au**self.q1)),
            "s2_integrand": float(self.cell * np.sum(np.abs(s2) ** self.q2)),
            "sup_u": float(au.max()),
        }

    def state(self, U, V, t):
        real = self.tr.real
        return StatePair(Field(self.grid, self.tr.inv(U), real=real), Field(self.grid, self.tr.inv(V), real=real), t)


def _check_dt(grid: GridSpec, dt: float):
    fastest = float(grid.xi_abs.max())
    if dt * fastest > 0.5 * (1 + 1e-12):
        raise ValueError(
            f"dt = {dt:g} does not resolve the fastest mode: dt*|xi|_max = {dt * fastest:.3g} > 0.5"
        )


def _estimate_blowup_time(history, p: float):
    """Fit |u|_inf^{-p/2} ~ a (T* - t) on the last recorded substeps."""
    if len(history) < 3:
        return None
    t = np.array([h[0] for h in history])
    M = np.array([h[1] for h in history])
    ok = np.isfinite(M) & (M > 0)
    if ok.sum() < 3:
        return None
    y = M[ok] ** (-p / 2.0)
    slope, icpt = np.polyfit(t[ok], y, 1)
    if slope >= 0:
        return None
    return float(-icpt / slope)


def integrate_nldw(
    s0: StatePair,
    T: float,
    dt: float,
    lam: float = 1.0,
    opts: IntegratorOptions | None = None,
    d: int | None = None,
) -> Trajectory:
    """Advance ``s0`` to time ``s0.time + T``; records every ``opts.record_every`` steps."""
    opts = opts or IntegratorOptions()
    grid = s0.grid
    d = grid.d if d is None else d
    p = _power(d)
    if lam not in (1, -1, 0):
        raise ValueError(f"coupling must be +1, -1 or 0, got {lam}")
    if not (T >= 0 and dt > 0):
        raise ValueError("need T >= 0 and dt > 0")
    if opts.check_cfl:
        _check_dt(grid, dt)
    nsteps = int(round(T / dt))
    if abs(nsteps * dt - T) > 1e-9 * max(1.0, T):
        raise ValueError(f"T = {T} is not a whole number of steps of dt = {dt}")

    traj = Trajectory(grid=grid, lam=lam, d=d, dt=dt * opts.record_every)
    if opts.check_boundary:
        for name, f in (("u0", s0.u), ("u1", s0.v)):
            b = boundary_max(f)
            if b > 1e-10:
                msg = f"{name} is {b:.3g} at the box boundary (> 1e-10)"
                traj.warnings.append(msg)
                warnings.warn(msg, BoundaryDecayWarning, stacklevel=2)

    real = s0.u.real and s0.v.real
    stepper = _Stepper(grid, dt, d, lam, real)
    U = stepper.tr.fwd(s0.u.values)
    V = stepper.tr.fwd(s0.v.values)
    u = stepper.tr.inv(U)
    Nh = stepper.nl_hat(u)
    t0 = s0.time
    history = deque(maxlen=40)
    n_records = 0

    def record(step, U, V, u, Nh):
        nonlocal n_records
        t = t0 + step * dt
        traj.times.append(t)
        for k, val in stepper.diagnostics(U, V, u, Nh).items():
            traj.diagnostics[k].append(val)
        every = opts.store_every
        if every is None or n_records % every == 0:
            traj.state_times.append(t)
            traj.states.append(stepper.state(U, V, t))
        n_records += 1

    record(0, U, V, u, Nh)
    sup = float(np.abs(u).max())
    for step in range(1, nsteps + 1):
        t_sub = t0 + (step - 1) * dt
        done = 0  # completed fraction of the outer step, in units of dt / m
        m = 1
        halted = ""
        while True:
            if lam != 0 and sup > 0:
                h_nl = opts.nonlinear_cfl / math.sqrt((1 + p) * sup**p)
                while dt / m > h_nl:
                    # refine by powers of two so the remainder stays a whole number of substeps
                    m *= 2
                    done *= 2
            if done >= m:
                break
            if dt / m < opts.min_substep:
                halted = f"substep {dt / m:.3g} below floor {opts.min_substep:g}"
                break
            U1, V1, u1, N1 = stepper.substep(U, V, Nh, m)
            sup1 = float(np.abs(u1).max())
            if not np.isfinite(sup1) or not np.all(np.isfinite(V1)):
                halted = "non-finite values"
                break
            U, V, u, Nh, sup = U1, V1, u1, N1, sup1
            done += 1
            t_sub = t0 + (step - 1) * dt + dt * done / m
            history.append((t_sub, sup))
            if sup > opts.blowup_threshold:
                halted = f"|u|_inf = {sup:.3g} exceeds {opts.blowup_threshold:g}"
                break
        if halted:
            traj.blowup = True
            traj.blowup_reason = halted
            traj.halt_state = stepper.state(U, V, t_sub)
            traj.blowup_time_estimate = _estimate_blowup_time(list(history), p)
            log.info("blow-up flagged at t = %.6g: %s", t_sub, halted)
            break
        if step % opts.record_every == 0:
            record(step, U, V, u, Nh)
    if not traj.blowup and traj.state_times and traj.state_times[-1] != traj.times[-1]:
        traj.state_times.append(traj.times[-1])
        traj.states.append(stepper.state(U, V, traj.times[-1]))
    return traj


# -- Picard iteration ---------------------------------------------------------------

class PicardDivergence(RuntimeError):
    pass


@dataclass
class PicardResult:
    trajectory: Trajectory
    iterations: int
    differences: list
    contraction_factors: list
    free_norm: float


def _xnorm(tr: _Transform, coeff_list, d, dt):
    """S1-type and S2-type space-time norms of a sampled function given by its coefficients."""
    q1, q2 = strichartz_exponents(d)
    jb = (1.0 + tr.xi2) ** 0.25
    cell = tr.grid.cell_volume
    a1, a2 = [], []
    for C in coeff_list:
        a1.append(lp_norm(tr.inv(C), cell, q1))
        a2.append(lp_norm(tr.inv(jb * C), cell, q2))
    return time_norm(a1, dt, q1), time_norm(a2, dt, q2)


def picard_solve(
    s0: StatePair,
    T: float,
    lam: float = 1.0,
    tol: float = 1e-10,
    max_iter: int = 50,
    dt: float = 0.02,
    delta: float = 1.0,
    d: int | None = None,
) -> PicardResult:
    """Fixed point of u = free(t) + int_0^t D(t-s) N(u(s)) ds on the sample grid t_j = j dt.

    Starts from the free evolution; stops once successive iterates differ by
    less than ``tol`` in both Strichartz-type space-time norms.
    """
    grid = s0.grid
    d = grid.d if d is None else d
    _power(d)
    M = int(round(T / dt))
    if M < 1 or abs(M * dt - T) > 1e-9 * max(1.0, T):
        raise ValueError(f"T = {T} is not a positive whole number of steps of dt = {dt}")
    real = s0.u.real and s0.v.real
    stepper = _Stepper(grid, dt, d, lam, real)
    tr = stepper.tr
    rho = tr.xi_abs
    U0 = tr.fwd(s0.u.values)
    V0 = tr.fwd(s0.v.values)

    Dm, dDm = [], []
    free_u, free_v = [], []
    for j in range(M + 1):
        s, ds, dds = damped_symbols(j * dt, rho)
        Dm.append(s)
        dDm.append(ds)
        free_u.append((s + ds) * U0 + s * V0)
        free_v.append((ds + dds) * U0 + ds * V0)

    q1, _ = strichartz_exponents(d)
    free_s1, _ = _xnorm(tr, free_u, d, dt)
    if free_s1 > delta:
        raise ValueError(
            f"free evolution has L^{q1:g}_(t,x) norm {free_s1:.3g} > delta = {delta:g}; shorten T or shrink the data"
        )

    def duhamel(Nh, kernel):
        out = []
        for j in range(M + 1):
            acc = np.zeros_like(U0)
            if j > 0:
                for i in range(j + 1):
                    wt = 0.5 * dt if i in (0, j) else dt
                    acc += wt * kernel[j - i] * Nh[i]
            out.append(acc)
        return out

    def nl_of(coeffs):
        with np.errstate(over="ignore", invalid="ignore"):
            return [stepper.nl_hat(tr.inv(C)) for C in coeffs]

    u_k = free_u
    diffs, factors = [], []
    bad_streak = 0
    it = 0
    Nh = nl_of(u_k) if lam != 0 else None
    while it < max_iter:
        it += 1
        if lam == 0:
            u_next = free_u
        else:
            inc = duhamel(Nh, Dm)
            u_next = [f + a for f, a in zip(free_u, inc)]
        with np.errstate(over="ignore", invalid="ignore"):
            n1, n2 = _xnorm(tr, [a - b for a, b in zip(u_next, u_k)], d, dt)
        diff = n1 + n2
        if not math.isfinite(diff):
            raise PicardDivergence(
                f"iterates became non-finite at iteration {it}; use a smaller T or smaller data"
            )
        if diffs:
            factor = diff / diffs[-1] if diffs[-1] > 0 else 0.0
            factors.append(factor)
            bad_streak = bad_streak + 1 if factor >= 1 else 0
            if bad_streak >= 3:
                raise PicardDivergence(
                    f"contraction factor >= 1 for 3 consecutive iterations ({factors[-3:]}); "
                    "use a smaller T or smaller data"
                )
        diffs.append(diff)
        u_k = u_next
        if lam != 0:
            Nh = nl_of(u_k)
        if diff < tol:
            break
    else:
        raise PicardDivergence(
            f"no convergence to tol = {tol:g} in {max_iter} iterations (last difference {diffs[-1]:.3g}); "
            "use a smaller T or smaller data"
        )

    v_inc = duhamel(Nh, dDm) if lam != 0 else [0.0] * (M + 1)
    traj = Trajectory(grid=grid, lam=lam, d=d, dt=dt)
    for j in range(M + 1):
        Vj = free_v[j] + v_inc[j]
        uj = tr.inv(u_k[j])
        t = s0.time + j * dt
        traj.times.append(t)
        for k, val in stepper.diagnostics(u_k[j], Vj, uj).items():
            traj.diagnostics[k].append(val)
        traj.state_times.append(t)
        traj.states.append(stepper.state(u_k[j], Vj, t))
    return PicardResult(traj, it, diffs, factors, free_s1)


# -- monitors ------------------------------------------------------------------------

MONITOR_COLUMNS = ("t", "E", "J", "K", "H", "I", "Iprime", "F", "ratio", "S1", "S2", "blowup_flag")


@dataclass
class MonitorSeries:
    t: np.ndarray
    E: np.ndarray
    J: np.ndarray
    K: np.ndarray
    H: np.ndarray
    I: np.ndarray
    Iprime: np.ndarray
    F: np.ndarray
    ratio: np.ndarray
    S1: np.ndarray
    S2: np.ndarray
    kinetic2: np.ndarray
    Isecond: np.ndarray
    blowup: bool
    blowup_time_estimate: float | None
    mu: float
    dissipation_residual: np.ndarray
    lemma_margin: np.ndarray
    F_onset: float | None
    ratio_onset: float | None

    @property
    def max_dissipation_residual(self) -> float:
        return float(np.max(np.abs(self.dissipation_residual)))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(MONITOR_COLUMNS)
        n = len(self.t)
        for i in range(n):
            flag = int(self.blowup and i == n - 1)
            w.writerow([_fmt(x) for x in (self.t[i], self.E[i], self.J[i], self.K[i], self.H[i], self.I[i],
                                          self.Iprime[i], self.F[i], self.ratio[i], self.S1[i], self.S2[i])]
                       + [flag])
        return buf.getvalue()


def _fmt(x) -> str:
    return repr(float(x))


def _cumtrapz(y, dt):
    out = np.zeros_like(y)
    if y.size > 1:
        out[1:] = np.cumsum(0.5 * dt * (y[1:] + y[:-1]))
    return out


def _cumtrapz_hermite(y, dy, dt):
    """Cumulative trapezoid with the Euler-Maclaurin end correction (fourth order)."""
    out = np.zeros_like(y)
    if y.size > 1:
        out[1:] = np.cumsum(0.5 * dt * (y[1:] + y[:-1]) - dt * dt / 12.0 * (dy[1:] - dy[:-1]))
    return out


def _tail_onset(t, ok):
    """Earliest sample time after which ``ok`` holds at every later sample."""
    if ok.size == 0 or not ok[-1]:
        return None
    bad = np.nonzero(~ok)[0]
    i = 0 if bad.size == 0 else bad[-1] + 1
    return float(t[i])


def monitor_series(traj: Trajectory, d: int | None = None) -> MonitorSeries:
    d = traj.d if d is None else d
    t = np.asarray(traj.times, dtype=float)
    if t.size < 1:
        raise ValueError("empty trajectory")
    dt = traj.dt
    grad2, v2, l2u = traj.diag("grad2"), traj.diag("v2"), traj.diag("l2u")
    iprime, pot = traj.diag("iprime"), traj.diag("pot")
    c = (d - 2) / (2 * d)
    J = 0.5 * grad2 - c * pot
    K = grad2 - pot
    H = grad2 / d
    if np.any(np.abs(H - (J - c * K)) > 1e-10 * (1 + np.abs(J))):
        raise ArithmeticError("H cross-check failed along the trajectory")
    E = 0.5 * grad2 + 0.5 * v2 - traj.lam * c * pot
    I = 0.5 * l2u
    m = mu(d)
    alpha = 1 + d / (d - 2)
    F = iprime + alpha * (E - m)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = (E - m) / I ** ((d - 1) / (d - 2))
    q1, q2 = strichartz_exponents(d)
    S1 = _cumtrapz(traj.diag("s1_integrand"), dt) ** (1 / q1)
    S2 = _cumtrapz(traj.diag("s2_integrand"), dt) ** (1 / q2)
    dissipation = E - E[0] + _cumtrapz_hermite(v2, traj.diag("v2_rate"), dt)
    Isecond = np.gradient(iprime, dt) if t.size > 2 else np.zeros_like(t)
    margin = Isecond + iprime - (alpha * v2 + (2 * d / (d - 2)) * (m - E))
    margin[0] = margin[-1] = np.nan if t.size > 2 else 0.0
    F_on = _tail_onset(t, F > 0)
    r_on = None
    if F_on is not None:
        after = (t >= F_on) & (iprime > 0) & (I > 0)
        idx = np.nonzero(after)[0]
        r_on = float(t[idx[0]]) if idx.size else None
    return MonitorSeries(
        t=t, E=E, J=J, K=K, H=H, I=I, Iprime=iprime, F=F, ratio=ratio, S1=S1, S2=S2, kinetic2=v2,
        Isecond=Isecond, blowup=traj.blowup, blowup_time_estimate=traj.blowup_time_estimate, mu=m,
        dissipation_residual=dissipation, lemma_margin=margin, F_onset=F_on, ratio_onset=r_on,
    )
