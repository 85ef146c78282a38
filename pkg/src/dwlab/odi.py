"""Scalar blow-up engine for the differential inequality h'' + h >= C h^gamma.

The extremal equality ``h'' = C h^gamma - h`` is integrated with scipy's
DOP853 embedded Runge-Kutta pair.  Escape is the first time ``h`` reaches the
threshold, located on the dense output of the final step.

``damping="friction"`` swaps the linear term for ``-h'``, which is the form
the virial quantity of a damped flow obeys (``I'' + I' >= C I^gamma``).
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

__all__ = [
    "OdiProblem",
    "BlowUp",
    "Survived",
    "Rejected",
    "integrate_odi",
    "extremal_energy",
    "energy_drift",
    "odi_csv",
]

@dataclass(frozen=True)
class OdiProblem:
    C: float
    gamma: float
    h0: float
    h1: float
    threshold: float = 1e6
    t_max: float = 100.0
    damping: str = "mass"  # "mass": h'' = C h^g - h ; "friction": h'' = C h^g - h'


@dataclass(frozen=True)
class BlowUp:
    t_escape: float
    outcome: str = "BlowUp"


@dataclass(frozen=True)
class Survived:
    t_max: float
    outcome: str = "Survived"


@dataclass(frozen=True)
class Rejected:
    reason: str
    outcome: str = "Rejected"


def _validate(p: OdiProblem):
    checks = (
        (p.C > 0, f"C = {p.C} must be > 0"),
        (p.gamma > 1, f"gamma = {p.gamma} must be > 1"),
        (p.h0 > 0, f"h0 = {p.h0} must be > 0"),
        (p.h1 > 0, f"h1 = {p.h1} must be > 0"),
        (p.threshold > p.h0, "threshold must exceed h0"),
        (p.t_max > 0, "t_max must be > 0"),
        (p.damping in ("mass", "friction"), f"unknown damping {p.damping!r}"),
    )
    if not all(math.isfinite(x) for x in (p.C, p.gamma, p.h0, p.h1)):
        return "non-finite parameter"
    for ok, msg in checks:
        if not ok:
            return msg
    return None


def extremal_energy(h, dh, C, gamma):
    """G = h'^2/2 + h^2/2 - C h^(gamma+1)/(gamma+1), conserved by the mass-damped extremal flow."""
    h = np.asarray(h, dtype=float)
    return 0.5 * np.asarray(dh) ** 2 + 0.5 * h**2 - C * np.abs(h) ** (gamma + 1) / (gamma + 1)


def energy_drift(p: OdiProblem, sol) -> float:
    """max |G(t) - G(0)| relative to the size of G's individual terms along the path."""
    h, dh = sol.y
    G = extremal_energy(h, dh, p.C, p.gamma)
    scale = 0.5 * dh**2 + 0.5 * h**2 + p.C * np.abs(h) ** (p.gamma + 1) / (p.gamma + 1)
    return float(np.max(np.abs(G - G[0]) / np.maximum(abs(G[0]), scale)))


def _rhs(p: OdiProblem):
    C, g = p.C, p.gamma
    if p.damping == "mass":
        def f(t, y):
            h, dh = y
            return [dh, C * abs(h) ** (g - 1) * h - h]
    else:
        def f(t, y):
            h, dh = y
            return [dh, C * abs(h) ** (g - 1) * h - dh]
    return f


def integrate_odi(p: OdiProblem, rtol: float = 1e-10, atol: float | None = None, dense: bool = False):
    """Integrate the extremal equation; returns BlowUp, Survived or Rejected.

    With ``dense=True`` a ``(result, sol)`` pair is returned, where ``sol`` is
    scipy's OdeResult (useful for energy-drift diagnostics).
    """
    why = _validate(p)
    if why:
        res = Rejected(why)
        return (res, None) if dense else res
    atol = rtol * 1e-3 if atol is None else atol

    def hit(t, y):
        return y[0] - p.threshold

    hit.terminal = True
    hit.direction = 1
    sol = solve_ivp(
        _rhs(p), (0.0, p.t_max), [p.h0, p.h1], method="DOP853", rtol=rtol, atol=atol,
        events=hit, dense_output=dense,
    )
    if sol.status == 1 and len(sol.t_events[0]):
        res = BlowUp(float(sol.t_events[0][0]))
    elif sol.status == -1:
        # step size collapsed: vertical asymptote at working precision
        res = BlowUp(float(sol.t[-1]))
    else:
        res = Survived(p.t_max)
    return (res, sol) if dense else res


def odi_csv(rows) -> str:
    """CSV of (problem, result) pairs with columns C, gamma, h0, h1, outcome, t_escape."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["C", "gamma", "h0", "h1", "outcome", "t_escape"])
    for p, r in rows:
        t = repr(r.t_escape) if isinstance(r, BlowUp) else ""
        w.writerow([repr(float(p.C)), repr(float(p.gamma)), repr(float(p.h0)), repr(float(p.h1)), r.outcome, t])
    return buf.getvalue()
