"""Periodic-box spectral discretization.

The box is ``[-L, L)^d`` with ``n`` points per axis.  Spectral coefficients
are taken with respect to the orthonormal Fourier basis of the box, so that
Parseval reads ``||f||_{L^2(box)} = ||c||_{l^2}`` with no extra factors.
"""
from __future__ import annotations

import struct
import warnings
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence, Union

import numpy as np
import scipy.fft as sfft

__all__ = [
    "GridSpec",
    "Field",
    "Spectrum",
    "StatePair",
    "BoundaryDecayWarning",
    "chi_le1",
    "chi_gt1",
    "Low",
    "High",
    "Dyadic",
    "dyadic_range",
    "project",
    "band_symbol",
    "Lp",
    "Sobolev",
    "HomSobolevLp",
    "norm_spatial",
    "lp_norm",
    "time_norm",
    "norm_spacetime",
    "boundary_max",
    "check_boundary_decay",
    "write_field",
    "read_field",
]


class BoundaryDecayWarning(UserWarning):
    """Field does not decay at the box boundary; periodic wrap-around may contaminate results."""


def _fft(a):
    return sfft.fftn(a, norm="ortho", workers=-1)


def _ifft(a):
    return sfft.ifftn(a, norm="ortho", workers=-1)


@dataclass(frozen=True)
class GridSpec:
    d: int
    n: int
    half_length: float

    def __post_init__(self):
        if self.d not in (1, 2, 3):
            raise ValueError(f"grid dimension must be 1, 2 or 3, got {self.d}")
        if self.n < 8 or self.n & (self.n - 1):
            raise ValueError(f"points per axis must be a power of two >= 8, got {self.n}")
        if not self.half_length > 0:
            raise ValueError(f"half_length must be positive, got {self.half_length}")

    @property
    def shape(self):
        return (self.n,) * self.d

    @property
    def spacing(self) -> float:
        return 2 * self.half_length / self.n

    @property
    def cell_volume(self) -> float:
        return self.spacing ** self.d

    @property
    def volume(self) -> float:
        return (2 * self.half_length) ** self.d

    @property
    def frequency_spacing(self) -> float:
        return np.pi / self.half_length

    @property
    def nyquist(self) -> float:
        return np.pi * self.n / (2 * self.half_length)

    @property
    def valid_horizon(self) -> float:
        """Time after which unit-speed waves wrap around the periodic box."""
        return 2 * self.half_length

    @cached_property
    def axis(self) -> np.ndarray:
        return -self.half_length + self.spacing * np.arange(self.n)

    @cached_property
    def coords(self):
        return np.meshgrid(*([self.axis] * self.d), indexing="ij", sparse=True)

    @cached_property
    def radius(self) -> np.ndarray:
        r2 = sum(c**2 for c in self.coords)
        return np.sqrt(np.broadcast_to(r2, self.shape))

    @cached_property
    def wavenumbers(self):
        k = np.fft.fftfreq(self.n, d=1.0 / self.n)
        xi = self.frequency_spacing * k
        return np.meshgrid(*([xi] * self.d), indexing="ij", sparse=True)

    @cached_property
    def xi2(self) -> np.ndarray:
        """|xi|^2 on the lattice, full shape, FFT ordering."""
        return np.broadcast_to(sum(k**2 for k in self.wavenumbers), self.shape).copy()

    @cached_property
    def xi_abs(self) -> np.ndarray:
        return np.sqrt(self.xi2)


@dataclass(frozen=True, eq=False)
class Field:
    """Complex samples on the grid; ``real`` tags a real-valued field."""

    grid: GridSpec
    values: np.ndarray
    real: bool = False

    def __post_init__(self):
        vals = np.asarray(self.values)
        if vals.shape != self.grid.shape:
            raise ValueError(f"values of shape {vals.shape} do not match grid {self.grid.shape}")
        real = self.real or not np.iscomplexobj(vals)
        vals = np.array(vals, dtype=np.complex128)
        if real:
            vals.imag = 0.0
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "real", real)

    @classmethod
    def from_function(cls, grid: GridSpec, func, real: bool | None = None) -> "Field":
        vals = func(*np.broadcast_arrays(*grid.coords))
        return cls(grid, vals, real=bool(real) if real is not None else not np.iscomplexobj(vals))

    @classmethod
    def zeros(cls, grid: GridSpec) -> "Field":
        return cls(grid, np.zeros(grid.shape), real=True)

    def spectrum(self) -> "Spectrum":
        return Spectrum(self.grid, np.sqrt(self.grid.cell_volume) * _fft(self.values), real=self.real)

    def __add__(self, other: "Field") -> "Field":
        _same_grid(self, other)
        return Field(self.grid, self.values + other.values, real=self.real and other.real)

    def __sub__(self, other: "Field") -> "Field":
        _same_grid(self, other)
        return Field(self.grid, self.values - other.values, real=self.real and other.real)

    def __mul__(self, c) -> "Field":
        return Field(self.grid, self.values * c, real=self.real and np.isrealobj(c))

    __rmul__ = __mul__

    def __neg__(self) -> "Field":
        return Field(self.grid, -self.values, real=self.real)


@dataclass(frozen=True, eq=False)
class Spectrum:
    grid: GridSpec
    coeffs: np.ndarray
    real: bool = False

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=np.complex128)
        if c.shape != self.grid.shape:
            raise ValueError(f"coefficients of shape {c.shape} do not match grid {self.grid.shape}")
        c.flags.writeable = False
        object.__setattr__(self, "coeffs", c)

    def field(self) -> Field:
        vals = _ifft(self.coeffs) / np.sqrt(self.grid.cell_volume)
        return Field(self.grid, vals, real=self.real)

    def multiply(self, symbol, real_symbol: bool = True) -> "Spectrum":
        """Apply a Fourier multiplier given by its values on the lattice."""
        return Spectrum(self.grid, self.coeffs * symbol, real=self.real and real_symbol)

    def energy(self) -> float:
        return float(np.vdot(self.coeffs, self.coeffs).real)

    def __add__(self, other: "Spectrum") -> "Spectrum":
        _same_grid(self, other)
        return Spectrum(self.grid, self.coeffs + other.coeffs, real=self.real and other.real)

    def __sub__(self, other: "Spectrum") -> "Spectrum":
        _same_grid(self, other)
        return Spectrum(self.grid, self.coeffs - other.coeffs, real=self.real and other.real)

    def __mul__(self, c) -> "Spectrum":
        return Spectrum(self.grid, self.coeffs * c, real=self.real and np.isrealobj(c))

    __rmul__ = __mul__


@dataclass(frozen=True, eq=False)
class StatePair:
    """Snapshot ``(u, du/dt)`` at ``time``."""

    u: Field
    v: Field
    time: float = 0.0

    def __post_init__(self):
        _same_grid(self.u, self.v)

    @property
    def grid(self) -> GridSpec:
        return self.u.grid

    @classmethod
    def zeros(cls, grid: GridSpec, time: float = 0.0) -> "StatePair":
        z = Field.zeros(grid)
        return cls(z, z, time)


def _same_grid(a, b):
    if a.grid != b.grid:
        raise ValueError(f"grid mismatch: {a.grid} vs {b.grid}")


# -- smooth cutoffs -----------------------------------------------------------

def _psi(t):
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    pos = t > 0
    out[pos] = np.exp(-1.0 / t[pos])
    return out


def chi_le1(s):
    """Smooth even plateau: 1 on |s| <= 1, 0 on |s| >= 2, monotone in between."""
    a = np.abs(np.asarray(s, dtype=float))
    num = _psi(2.0 - a)
    out = num / (num + _psi(a - 1.0))
    return out if out.ndim else float(out)


def chi_gt1(s):
    return 1.0 - chi_le1(s)


# -- Littlewood-Paley ---------------------------------------------------------

@dataclass(frozen=True)
class _Band:
    name: str


Low = _Band("Low")
High = _Band("High")


@dataclass(frozen=True)
class Dyadic:
    N: float

    def __post_init__(self):
        if not self.N > 0:
            raise ValueError(f"dyadic frequency must be positive, got {self.N}")
        j = np.log2(self.N)
        if abs(j - round(j)) > 1e-12:
            raise ValueError(f"dyadic frequency must be a power of two, got {self.N}")


def dyadic_range(grid: GridSpec) -> list[float]:
    """Dyadic N with frequency_spacing <= N <= nyquist."""
    lo = int(np.ceil(np.log2(grid.frequency_spacing) - 1e-12))
    hi = int(np.floor(np.log2(grid.nyquist) + 1e-12))
    return [2.0**j for j in range(lo, hi + 1)]


def band_symbol(grid: GridSpec, band) -> np.ndarray:
    xi = grid.xi_abs
    if band is Low:
        return chi_le1(xi)
    if band is High:
        return chi_gt1(xi)
    if isinstance(band, Dyadic):
        N = band.N
        if N > grid.nyquist * (1 + 1e-12):
            raise ValueError(f"P_N with N = {N} above the Nyquist frequency {grid.nyquist:.6g}")
        if N < grid.frequency_spacing * (1 - 1e-12):
            raise ValueError(f"P_N with N = {N} below the frequency spacing {grid.frequency_spacing:.6g}")
        return chi_le1(xi / N) - chi_le1(2 * xi / N)
    raise TypeError(f"unknown band {band!r}")


def project(x: Spectrum, band) -> Spectrum:
    return x.multiply(band_symbol(x.grid, band))


# -- norms ---------------------------------------------------------------------

@dataclass(frozen=True)
class Lp:
    p: float


@dataclass(frozen=True)
class Sobolev:
    """<grad>^s then L^2."""

    s: float


@dataclass(frozen=True)
class HomSobolevLp:
    """|grad|^s then L^p."""

    s: float
    p: float


def lp_norm(values: np.ndarray, cell_volume: float, p: float) -> float:
    a = np.abs(values)
    if p == np.inf:
        return float(a.max()) if a.size else 0.0
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    if p == 2:
        return float(np.sqrt(cell_volume * np.vdot(a, a).real))
    return float((cell_volume * np.sum(a**p)) ** (1.0 / p))


def norm_spatial(x: Union[Field, Spectrum], kind) -> float:
    if isinstance(x, Spectrum):
        spec, fld = x, None
    else:
        spec, fld = None, x
    grid = x.grid
    if isinstance(kind, Lp):
        if fld is None:
            fld = spec.field()
        return lp_norm(fld.values, grid.cell_volume, kind.p)
    if spec is None:
        spec = fld.spectrum()
    if isinstance(kind, Sobolev):
        w = (1.0 + grid.xi2) ** (kind.s / 2.0)
        return float(np.linalg.norm(w * spec.coeffs))
    if isinstance(kind, HomSobolevLp):
        if kind.s < 0:
            zero = abs(spec.coeffs.flat[0])
            if zero > 1e-12 * max(np.linalg.norm(spec.coeffs), 1e-300):
                raise ValueError("negative homogeneous order needs data with vanishing zero mode")
        with np.errstate(divide="ignore"):
            w = np.where(grid.xi2 > 0, grid.xi2 ** (kind.s / 2.0), 0.0 if kind.s != 0 else 1.0)
        vals = spec.multiply(w).field().values
        return lp_norm(vals, grid.cell_volume, kind.p)
    raise TypeError(f"unknown norm kind {kind!r}")


def time_norm(values: Sequence[float], dt: float, q: float) -> float:
    """Outer L^q_t over uniformly spaced samples (composite trapezoid; max for q = inf)."""
    a = np.abs(np.asarray(values, dtype=float))
    if a.size == 0:
        raise ValueError("empty time series")
    if q == np.inf:
        return float(a.max())
    if a.size == 1:
        return 0.0
    w = a**q
    return float((dt * (w.sum() - 0.5 * (w[0] + w[-1]))) ** (1.0 / q))


def norm_spacetime(series, q: float, r: float, dt: float | None = None) -> float:
    """L^q(I; L^r) of a uniformly sampled trajectory.

    ``series`` is either an object exposing ``times`` and ``states`` (a
    Trajectory) or a sequence of Fields, in which case ``dt`` is required.
    """
    if hasattr(series, "states"):
        fields = [s.u for s in series.states]
        times = np.asarray(getattr(series, "state_times", series.times), dtype=float)
        if len(times) == 0:
            raise ValueError("empty trajectory")
        if len(times) > 1:
            steps = np.diff(times)
            if not np.allclose(steps, steps[0], rtol=1e-9, atol=1e-12):
                raise ValueError("trajectory is not uniformly sampled")
            dt = float(steps[0])
        else:
            dt = 0.0
    else:
        fields = list(series)
        if not fields:
            raise ValueError("empty trajectory")
        if dt is None and len(fields) > 1:
            raise ValueError("dt is required for a bare sequence of fields")
    inner = [norm_spatial(f, Lp(r)) for f in fields]
    return time_norm(inner, dt or 0.0, q)


# -- boundary decay ----------------------------------------------------------

def boundary_max(f: Field) -> float:
    """Max |f| over the box faces x_i = -L (the periodic seam)."""
    vals = np.abs(f.values)
    return max(float(np.take(vals, 0, axis=ax).max()) for ax in range(f.grid.d))


def check_boundary_decay(f: Field, tol: float = 1e-10, name: str = "field") -> float:
    b = boundary_max(f)
    if b > tol:
        warnings.warn(
            f"{name} is {b:.3g} at the box boundary (> {tol:g}); periodic wrap-around may contaminate results",
            BoundaryDecayWarning,
            stacklevel=2,
        )
    return b


# -- binary dump ---------------------------------------------------------------

_MAGIC = b"DWF1"
_HEADER = struct.Struct("<4s4Id")
FLAG_REAL = 1


def write_field(path, f: Field) -> None:
    """Write ``f`` in the DWF1 format (little endian, row-major, interleaved re/im)."""
    flags = FLAG_REAL if f.real else 0
    head = _HEADER.pack(_MAGIC, f.grid.d, f.grid.n, 0, flags, float(f.grid.half_length))
    body = np.ascontiguousarray(f.values).astype("<c16").tobytes()
    with open(path, "wb") as fh:
        fh.write(head)
        fh.write(body)


def read_field(path) -> Field:
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _HEADER.size:
        raise ValueError("truncated DWF1 header")
    magic, d, n, _reserved, flags, lam = _HEADER.unpack_from(raw)
    if magic != _MAGIC:
        raise ValueError(f"bad magic {magic!r}, expected {_MAGIC!r}")
    grid = GridSpec(d, n, lam)
    count = n**d
    body = raw[_HEADER.size:]
    if len(body) != 16 * count:
        raise ValueError(f"DWF1 body holds {len(body)} bytes, expected {16 * count}")
    vals = np.frombuffer(body, dtype="<c16").reshape(grid.shape)
    return Field(grid, vals.astype(np.complex128), real=bool(flags & FLAG_REAL))
