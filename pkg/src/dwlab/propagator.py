"""Exact per-mode solution operators of the linear damped wave equation.

Each Fourier mode of ``u'' - Lap u + u' = 0`` obeys ``v'' + v' + rho^2 v = 0``.
With ``mu = 1/4 - rho^2`` the sinh/sin multiplier ``L(t, rho)`` is entire in
``mu``; near ``mu = 0`` it is evaluated from its power series.
"""
from __future__ import annotations

import enum
import math

import numpy as np

from .fields import High, Spectrum, StatePair, band_symbol

__all__ = [
    "SymbolKind",
    "SERIES_THRESHOLD",
    "L_symbol",
    "damped_symbols",
    "propagator_matrix",
    "symbol",
    "apply_propagator",
    "evolve_linear",
]

SERIES_THRESHOLD = 1e-4
_SERIES_TERMS = 8


class SymbolKind(enum.Enum):
    D = "D"
    dtD = "dtD"
    dttD = "dttD"
    Heat = "Heat"
    HalfWavePlus = "HalfWavePlus"
    HalfWaveMinus = "HalfWaveMinus"


def _series(mu, t):
    """(L, dL/dt) from sum mu^k t^(2k+1)/(2k+1)! and sum mu^k t^(2k)/(2k)!."""
    z = mu * t * t
    L = np.zeros_like(z)
    dL = np.zeros_like(z)
    term = np.ones_like(z)
    for k in range(_SERIES_TERMS):
        dL = dL + term / math.factorial(2 * k)
        L = L + term / math.factorial(2 * k + 1)
        term = term * z
    return t * L, dL


def L_symbol(t, rho, derivative: int = 0):
    """L(t, rho), its first or second time derivative.

    ``derivative`` 0 gives L, 1 gives cosh(t sqrt(mu)) (cos on the wave side),
    2 gives mu * L.
    """
    if derivative not in (0, 1, 2):
        raise ValueError(f"derivative must be 0, 1 or 2, got {derivative}")
    t_arr, rho_arr = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(rho, dtype=float))
    mu = 0.25 - rho_arr**2
    L = np.empty(mu.shape)
    dL = np.empty(mu.shape)
    near = np.abs(mu) * t_arr**2 < SERIES_THRESHOLD
    heat = (~near) & (mu > 0)
    wave = (~near) & (mu < 0)
    if near.any():
        L[near], dL[near] = _series(mu[near], t_arr[near])
    if heat.any():
        w = np.sqrt(mu[heat])
        L[heat] = np.sinh(t_arr[heat] * w) / w
        dL[heat] = np.cosh(t_arr[heat] * w)
    if wave.any():
        w = np.sqrt(-mu[wave])
        L[wave] = np.sin(t_arr[wave] * w) / w
        dL[wave] = np.cos(t_arr[wave] * w)
    out = (L, dL, mu * L)[derivative]
    return out if out.ndim else float(out)


def damped_symbols(t, rho):
    """Symbols of D(t), dtD(t), dttD(t): s = exp(-t/2) L and its time derivatives.

    The sinh side is assembled from decaying exponentials so large ``t`` never
    overflows.  The second derivative comes from the mode ODE,
    ``s'' = -s' - rho^2 s``.
    """
    t_arr, rho_arr = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(rho, dtype=float))
    if np.any(t_arr < 0):
        raise ValueError("t must be >= 0")
    mu = 0.25 - rho_arr**2
    s = np.empty(mu.shape)
    ds = np.empty(mu.shape)
    near = np.abs(mu) * t_arr**2 < SERIES_THRESHOLD
    heat = (~near) & (mu > 0)
    wave = (~near) & (mu < 0)
    if near.any():
        damp = np.exp(-0.5 * t_arr[near])
        L, dL = _series(mu[near], t_arr[near])
        s[near] = damp * L
        ds[near] = damp * (dL - 0.5 * L)
    if heat.any():
        w = np.sqrt(mu[heat])
        tt = t_arr[heat]
        slow = np.exp(-tt * (0.5 - w))
        fast = np.exp(-tt * (0.5 + w))
        Ld = (slow - fast) / (2 * w)  # exp(-t/2) sinh(t w) / w
        dLd = 0.5 * (slow + fast)  # exp(-t/2) cosh(t w)
        s[heat] = Ld
        ds[heat] = dLd - 0.5 * Ld
    if wave.any():
        w = np.sqrt(-mu[wave])
        tt = t_arr[wave]
        damp = np.exp(-0.5 * tt)
        Ld = damp * np.sin(tt * w) / w
        s[wave] = Ld
        ds[wave] = damp * np.cos(tt * w) - 0.5 * Ld
    dds = -ds - rho_arr**2 * s
    if s.ndim == 0:
        return float(s), float(ds), float(dds)
    return s, ds, dds


def propagator_matrix(t, rho):
    """Entries (a11, a12, a21, a22) of the per-mode state evolution A(t)."""
    s, ds, dds = damped_symbols(t, rho)
    return s + ds, s, ds + dds, ds


def symbol(kind: SymbolKind, t: float, rho):
    """Lattice values of the multiplier for ``kind`` at time ``t``."""
    kind = SymbolKind(kind)
    if t < 0:
        raise ValueError("t must be >= 0")
    if kind in (SymbolKind.D, SymbolKind.dtD, SymbolKind.dttD):
        s, ds, dds = damped_symbols(t, rho)
        return {SymbolKind.D: s, SymbolKind.dtD: ds, SymbolKind.dttD: dds}[kind]
    rho = np.asarray(rho, dtype=float)
    if kind is SymbolKind.Heat:
        return np.exp(-t * rho**2)
    omega = np.sqrt(np.maximum(rho**2 - 0.25, 0.0))
    sign = 1.0 if kind is SymbolKind.HalfWavePlus else -1.0
    return np.exp(sign * 1j * t * omega)


def apply_propagator(kind: SymbolKind, x: Spectrum, t: float) -> Spectrum:
    kind = SymbolKind(kind)
    if kind in (SymbolKind.HalfWavePlus, SymbolKind.HalfWaveMinus):
        hi = band_symbol(x.grid, High)
        total = x.energy()
        residue = float(np.sum(np.abs((1.0 - hi) * x.coeffs) ** 2))
        if total > 0 and residue > 1e-12 * total:
            raise ValueError(
                f"half-wave propagator needs data in the high band; "
                f"{residue / total:.3g} of the energy lies below it"
            )
        return x.multiply(hi * symbol(kind, t, x.grid.xi_abs), real_symbol=False)
    return x.multiply(symbol(kind, t, x.grid.xi_abs))


def evolve_linear(s: StatePair, t: float) -> StatePair:
    """Apply A(t) to (u, v): the free damped-wave flow over a time ``t``."""
    if t < 0:
        raise ValueError("t must be >= 0")
    grid = s.grid
    a11, a12, a21, a22 = propagator_matrix(t, grid.xi_abs)
    U = s.u.spectrum().coeffs
    V = s.v.spectrum().coeffs
    real = s.u.real and s.v.real
    u_new = Spectrum(grid, a11 * U + a12 * V, real=real).field()
    v_new = Spectrum(grid, a21 * U + a22 * V, real=real).field()
    return StatePair(u_new, v_new, s.time + t)
