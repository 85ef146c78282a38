"""Exact exponent algebra for damped-wave Strichartz estimates.

Everything here is computed with :class:`fractions.Fraction`; the only
non-rational value is the symbolic infinity :data:`INF`, used for a time
exponent ``q = inf``.  Formulas are written in terms of reciprocals so that
``1/inf = 0`` never needs special casing downstream.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Union

__all__ = [
    "INF",
    "Infinity",
    "ExtRational",
    "PairQR",
    "Branch",
    "LossReport",
    "Rejection",
    "TableInvariantError",
    "ext",
    "recip",
    "conjugate",
    "render",
    "gamma_loss",
    "check_homogeneous",
    "check_inhomogeneous",
    "is_wave_admissible",
    "delta_loss",
    "total_inhomogeneous_order",
    "CURATED_PAIRS",
    "exponent_table_rows",
    "exponent_table_csv",
]

HALF = Fraction(1, 2)


class Infinity:
    """The symbol +inf.  A singleton; compares above every rational."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "INF"

    def __str__(self):
        return "inf"

    def __eq__(self, other):
        return other is self

    def __hash__(self):
        return hash("dwlab-inf")

    def __lt__(self, other):
        return False

    def __le__(self, other):
        return other is self

    def __gt__(self, other):
        return other is not self

    def __ge__(self, other):
        return True


INF = Infinity()
ExtRational = Union[Fraction, Infinity]


def ext(x) -> ExtRational:
    """Coerce ``x`` (int, Fraction, "p/q" string, "inf", or INF) to an ExtRational.

    Floats are refused: a float exponent has already lost the information
    needed for the boundary classifications.
    """
    if x is INF:
        return INF
    if isinstance(x, str):
        s = x.strip().lower()
        if s in ("inf", "infinity", "+inf"):
            return INF
        return Fraction(s)
    if isinstance(x, float):
        raise TypeError(f"float exponent {x!r} refused; pass an int, Fraction or 'p/q' string")
    return Fraction(x)


def recip(x: ExtRational) -> Fraction:
    """1/x with 1/inf = 0."""
    if x is INF:
        return Fraction(0)
    return 1 / Fraction(x)


def conjugate(x: ExtRational) -> ExtRational:
    """Hölder conjugate x' with 1/x + 1/x' = 1."""
    inv = 1 - recip(x)
    return INF if inv == 0 else 1 / inv


def render(x) -> str:
    if x is INF:
        return "inf"
    return str(Fraction(x))


@dataclass(frozen=True)
class PairQR:
    """Time/space exponent pair ``(q, r)`` in dimension ``d``."""

    q: ExtRational
    r: ExtRational
    d: int

    def __post_init__(self):
        object.__setattr__(self, "q", ext(self.q))
        object.__setattr__(self, "r", ext(self.r))
        if int(self.d) != self.d or self.d < 2:
            raise ValueError(f"dimension must be an integer >= 2, got {self.d}")
        if self.r is INF:
            raise ValueError("r = inf is not allowed (need 2 <= r < inf)")
        if self.q is not INF and self.q < 2:
            raise ValueError(f"q must satisfy 2 <= q <= inf, got {render(self.q)}")
        if self.r < 2:
            raise ValueError(f"r must satisfy 2 <= r < inf, got {render(self.r)}")

    @property
    def inv_q(self) -> Fraction:
        return recip(self.q)

    @property
    def sigma(self) -> Fraction:
        """1/2 - 1/r."""
        return HALF - recip(self.r)

    def __str__(self):
        return f"({render(self.q)},{render(self.r)})"


class Branch(enum.Enum):
    STRICT = "Strict"
    SCALING_CRITICAL = "ScalingCritical"
    TRIVIAL_ENERGY = "TrivialEnergy"


@dataclass(frozen=True)
class Rejection:
    """Outcome of a failed admissibility check; ``condition`` names the violated test."""

    condition: str
    detail: str = ""

    def __bool__(self):
        return False

    def __str__(self):
        return f"{self.condition}: {self.detail}" if self.detail else self.condition


@dataclass(frozen=True)
class Acceptance:
    reason: str
    branch: Branch | None = None

    def __bool__(self):
        return True


class TableInvariantError(AssertionError):
    """Raised if a delta-table cell marked as impossible is ever selected."""


@dataclass(frozen=True)
class LossReport:
    pair: PairQR
    tilde: PairQR
    gamma: Fraction
    gamma_tilde: Fraction
    delta: Fraction
    branch: Branch
    total_order_D: Fraction = field(init=False)
    total_order_dtD: Fraction = field(init=False)

    def __post_init__(self):
        total = self.gamma + self.gamma_tilde + self.delta - 1
        object.__setattr__(self, "total_order_D", total)
        object.__setattr__(self, "total_order_dtD", total + 1)

    def order(self, kind: str = "D") -> Fraction:
        if kind == "D":
            return self.total_order_D
        if kind == "dtD":
            return self.total_order_dtD
        raise ValueError(f"kind must be 'D' or 'dtD', got {kind!r}")


def gamma_loss(pair: PairQR) -> Fraction:
    """Derivative loss max{d(1/2-1/r) - 1/q, (d+1)/2 (1/2-1/r)}."""
    d, s = pair.d, pair.sigma
    return max(d * s - pair.inv_q, Fraction(d + 1, 2) * s)


def is_wave_admissible(pair: PairQR) -> bool:
    """(d-1)/2 (1/2 - 1/r) >= 1/q."""
    return Fraction(pair.d - 1, 2) * pair.sigma >= pair.inv_q


def _is_heat_endpoint(pair: PairQR) -> bool:
    return pair.d >= 3 and pair.q == 2 and pair.r == Fraction(2 * pair.d, pair.d - 2)


def _is_wave_endpoint(pair: PairQR) -> bool:
    return pair.d >= 4 and pair.q == 2 and pair.r == Fraction(2 * (pair.d - 1), pair.d - 3)


def check_homogeneous(pair: PairQR) -> Acceptance | Rejection:
    """Homogeneous estimate condition d/2 (1/2 - 1/r) >= 1/q.

    The heat endpoint (2, 2d/(d-2)), d >= 3, is accepted explicitly; it sits on
    the equality line anyway, but is reported under its own reason.
    """
    if _is_heat_endpoint(pair):
        return Acceptance("heat endpoint")
    lhs = Fraction(pair.d, 2) * pair.sigma
    if lhs >= pair.inv_q:
        return Acceptance("d/2(1/2-1/r) >= 1/q")
    return Rejection("d/2(1/2-1/r) >= 1/q", f"{lhs} < {pair.inv_q}")


def check_inhomogeneous(pair: PairQR, tilde: PairQR) -> Acceptance | Rejection:
    """Classify a pair of pairs for the inhomogeneous estimate.

    Checks run in a fixed order: wave-endpoint exclusions (first slot, then
    tilde), then the strict sum condition, the scaling-critical equality, and
    finally the trivial energy case.  Range checks already happened when the
    pairs were built.
    """
    if pair.d != tilde.d:
        raise ValueError(f"dimension mismatch: {pair.d} != {tilde.d}")
    d = pair.d
    for slot, p in (("(q,r)", pair), ("(q~,r~)", tilde)):
        if _is_wave_endpoint(p):
            return Rejection(
                "wave endpoint excluded",
                f"{slot} = (2, 2(d-1)/(d-3)) = {p} for d = {d}",
            )
    lhs = Fraction(d, 2) * (pair.sigma + tilde.sigma)
    rhs = pair.inv_q + tilde.inv_q
    if lhs > rhs:
        return Acceptance("strict sum condition", Branch.STRICT)
    if lhs == rhs:
        inv_qt_conj = 1 - tilde.inv_q
        # 1 < q~' < q < inf, read through reciprocals
        if inv_qt_conj < 1 and inv_qt_conj > pair.inv_q and pair.inv_q > 0:
            return Acceptance("scaling-critical equality", Branch.SCALING_CRITICAL)
    if pair.q is INF and pair.r == 2 and tilde.q is INF and tilde.r == 2:
        return Acceptance("(q,r) = (q~,r~) = (inf,2)", Branch.TRIVIAL_ENERGY)
    if lhs == rhs:
        return Rejection(
            "scaling-critical side condition 1 < q~' < q < inf",
            f"q = {render(pair.q)}, q~' = {render(conjugate(tilde.q))}",
        )
    return Rejection("sum condition d/2(s+s~) >= 1/q+1/q~", f"{lhs} < {rhs}")


def delta_loss(pair: PairQR, tilde: PairQR) -> Fraction:
    """Extra derivative loss from the delta table.

    Rows pick the wave-admissibility of (q,r) and (q~,r~); the column compares
    (1/q~)(1/2-1/r) with (1/q)(1/2-1/r~).  Equality of the two gives 0.
    """
    verdict = check_inhomogeneous(pair, tilde)
    if not verdict:
        raise ValueError(f"inhomogeneous estimate not available for {pair}, {tilde}: {verdict}")
    d = pair.d
    a, at = pair.sigma, tilde.sigma
    iq, iqt = pair.inv_q, tilde.inv_q
    left, right = iqt * a, iq * at
    if left == right:
        return Fraction(0)
    left_column = left < right
    wave, wave_t = is_wave_admissible(pair), is_wave_admissible(tilde)
    c = Fraction(d - 1, 2)

    if wave and wave_t:
        return Fraction(0)
    if wave and not wave_t:
        if left_column:
            raise TableInvariantError(f"impossible cell (row 2, left) reached for {pair}, {tilde}")
        # (q~/q){1/q~ - (d-1)/2 (1/2-1/r~)}; here q~ < inf so 1/q~ > 0
        return (iq / iqt) * (iqt - c * at)
    if not wave and wave_t:
        if not left_column:
            raise TableInvariantError(f"impossible cell (row 3, right) reached for {pair}, {tilde}")
        # (q/q~){1/q - (d-1)/2 (1/2-1/r)}; here q < inf so 1/q > 0
        return (iqt / iq) * (iq - c * a)
    # both strictly heat-side: q, q~ finite
    if left_column:
        return iqt * c * (at / iqt - a / iq)
    return iq * c * (a / iq - at / iqt)


def total_inhomogeneous_order(pair: PairQR, tilde: PairQR, kind: str = "D") -> LossReport:
    verdict = check_inhomogeneous(pair, tilde)
    if not verdict:
        raise ValueError(f"inhomogeneous estimate not available for {pair}, {tilde}: {verdict}")
    if kind not in ("D", "dtD"):
        raise ValueError(f"kind must be 'D' or 'dtD', got {kind!r}")
    return LossReport(
        pair=pair,
        tilde=tilde,
        gamma=gamma_loss(pair),
        gamma_tilde=gamma_loss(tilde),
        delta=delta_loss(pair, tilde),
        branch=verdict.branch,
    )


# (d, q, r, q~, r~); the first four are the worked examples of the docs.
CURATED_PAIRS = [
    (3, 4, 4, 4, 4),
    (3, INF, 2, INF, 2),
    (3, 4, 3, 4, 6),
    (3, 4, 6, 8, 4),
    (3, 8, 8, 8, 8),
    (3, 4, 3, 4, 3),
    (3, 8, 4, 3, 5),
    (3, 4, 3, 3, 5),
    (4, Fraction(10, 3), Fraction(10, 3), Fraction(10, 3), Fraction(10, 3)),
    (5, 3, 3, 4, 4),
]

TABLE_HEADER = ["d", "q", "r", "q_tilde", "r_tilde", "gamma", "gamma_tilde", "delta", "branch", "total"]


def exponent_table_rows(pairs=None):
    rows = []
    for d, q, r, qt, rt in CURATED_PAIRS if pairs is None else pairs:
        rep = total_inhomogeneous_order(PairQR(q, r, d), PairQR(qt, rt, d))
        rows.append([
            str(d), render(rep.pair.q), render(rep.pair.r), render(rep.tilde.q), render(rep.tilde.r),
            render(rep.gamma), render(rep.gamma_tilde), render(rep.delta),
            rep.branch.value, render(rep.total_order_D),
        ])
    return rows


def exponent_table_csv(pairs=None) -> str:
    lines = [",".join(TABLE_HEADER)]
    lines += [",".join(row) for row in exponent_table_rows(pairs)]
    return "\n".join(lines) + "\n"
