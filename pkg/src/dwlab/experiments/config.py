"""Flat ``key = value`` experiment configs.

Grammar: one assignment per line, ``#`` starts a comment, blank lines are
ignored, keys are identifiers (case-sensitive) and may appear once.  Values are
typed against the schema of the selected kind; any field not given takes the
kind's default.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

KINDS = (
    "exponents-table",
    "decay-fit",
    "strichartz-ratio",
    "linear-highfreq",
    "lwp-contraction",
    "global-decay",
    "blowup",
    "odi-demo",
)

_KEY = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")
U64_MAX = 2**64 - 1


class ConfigError(ValueError):
    def __init__(self, name: str, message: str):
        super().__init__(f"{name}: {message}")
        self.field = name


def parse_text(text: str) -> dict:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}", f"expected 'key = value', got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if not _KEY.match(key):
            raise ConfigError(key or f"line {lineno}", "invalid key")
        if key in out:
            raise ConfigError(key, f"duplicate key (line {lineno})")
        if value == "":
            raise ConfigError(key, "empty value")
        out[key] = value
    return out


# -- typed fields ------------------------------------------------------------------

def _int(lo=None, hi=None):
    def conv(s):
        v = int(s, 10)
        if lo is not None and v < lo or hi is not None and v > hi:
            raise ValueError(f"must lie in [{lo}, {hi}]")
        return v
    return conv


def _float(lo=None, hi=None, open_lo=False, allow_inf=False):
    def conv(s):
        v = float(s)
        if math.isnan(v) or (math.isinf(v) and not allow_inf):
            raise ValueError("must be finite")
        if lo is not None and (v < lo or (open_lo and v == lo)):
            raise ValueError(f"must be {'>' if open_lo else '>='} {lo}")
        if hi is not None and v > hi:
            raise ValueError(f"must be <= {hi}")
        return v
    return conv


def _choice(*opts):
    def conv(s):
        if s not in opts:
            raise ValueError(f"must be one of {', '.join(opts)}")
        return s
    return conv


def _pow2(lo=8, hi=512):
    def conv(s):
        v = int(s, 10)
        if v < lo or v > hi or v & (v - 1):
            raise ValueError(f"must be a power of two in [{lo}, {hi}]")
        return v
    return conv


def _float_list(s):
    vals = [float(x) for x in s.replace(",", " ").split()]
    if not vals:
        raise ValueError("empty list")
    return vals


_COMMON = {
    "kind": (_choice(*KINDS), None),
    "seed": (_int(0, U64_MAX), 0),
}

_TORUS = {
    "d": (_int(1, 3), 3),
}

SCHEMAS = {
    "exponents-table": {},
    "decay-fit": {
        "p": (_choice("2", "inf"), "2"),
        "sigma": (_float(0, open_lo=True), 1.0),
        "rho_max": (_float(0, open_lo=True), 7.0),
        "dr": (_float(0, open_lo=True), 0.01),
        "t_min": (_float(0, open_lo=True), 10.0),
        "t_max": (_float(0, open_lo=True), 100.0),
        "n_times": (_int(3, 1000), 19),
    },
    "strichartz-ratio": {
        "n_seeds": (_int(1, 1000), 20),
        "j_max": (_int(0, 8), 6),
        "window": (_float(1, open_lo=False), 16.0),
        "bound": (_float(1), 8.0),
    },
    "linear-highfreq": {
        **_TORUS,
        "n": (_pow2(), 64),
        "half_length": (_float(0, open_lo=True), 10.0),
        "T": (_float(0, open_lo=True), 20.0),
        "dt": (_float(0, open_lo=True), 0.25),
        "packets": (_int(1, 64), 4),
        "sigma": (_float(0, open_lo=True), 1.2),
    },
    "lwp-contraction": {
        **_TORUS,
        "n": (_pow2(), 32),
        "half_length": (_float(0, open_lo=True), 2 * math.pi),
        "T": (_float(0, open_lo=True), 1.0),
        "dt": (_float(0, open_lo=True), 0.02),
        "norm": (_float(0, open_lo=True), 1e-2),
        "sigma": (_float(0, open_lo=True), 0.8),
        "tol": (_float(0, open_lo=True), 1e-10),
        "delta": (_float(0, open_lo=True), 1.0),
        "max_iter": (_int(1, 1000), 50),
    },
    "global-decay": {
        **_TORUS,
        "n": (_pow2(), 64),
        "half_length": (_float(0, open_lo=True), 2 * math.pi),
        "T": (_float(0, open_lo=True), 50.0),
        "dt": (_float(0, open_lo=True), 0.0125),
        "record_every": (_int(1, 10**6), 4),
        "norm": (_float(0, open_lo=True), 1e-2),
        "sigma": (_float(0, open_lo=True), 0.8),
    },
    "blowup": {
        **_TORUS,
        "n": (_pow2(), 128),
        "half_length": (_float(0, open_lo=True), 80.0),
        "T": (_float(0, open_lo=True), 20.0),
        "dt": (_float(0, open_lo=True), 0.05),
        "scale": (_float(0, open_lo=True), 1.2),
        "R": (_float(0, open_lo=True), 40.0),
        "threshold": (_float(1, open_lo=True), 1e6),
        "min_substep": (_float(0, open_lo=True), 1e-12),
    },
    "odi-demo": {
        "C": (_float_list, [0.5, 1.0, 2.0, 4.0]),
        "h0": (_float_list, [0.5, 1.0, 2.0]),
        "h1": (_float(), 1.0),
        "gamma": (_float(1, open_lo=True), 2.0),
        "t_max": (_float(0, open_lo=True), 100.0),
        "threshold": (_float(1, open_lo=True), 1e6),
        "rtol": (_float(0, open_lo=True), 1e-10),
    },
}


@dataclass
class ExperimentConfig:
    kind: str
    seed: int = 0
    params: dict = field(default_factory=dict)
    source_text: str = ""

    def __getitem__(self, key):
        return self.params[key]

    def resolved(self) -> dict:
        return {"kind": self.kind, "seed": self.seed, **self.params}


def from_mapping(raw: dict, source_text: str = "", seed_override: int | None = None) -> ExperimentConfig:
    if "kind" not in raw:
        raise ConfigError("kind", f"missing required field; choose one of {', '.join(KINDS)}")
    try:
        kind = _COMMON["kind"][0](raw["kind"])
    except ValueError as exc:
        raise ConfigError("kind", str(exc)) from None
    schema = SCHEMAS[kind]
    params = {}
    for key in raw:
        if key not in schema and key not in _COMMON:
            raise ConfigError(key, f"unknown field for kind {kind}")
    for key, (conv, default) in schema.items():
        if key in raw:
            try:
                params[key] = conv(raw[key])
            except ValueError as exc:
                raise ConfigError(key, f"{raw[key]!r}: {exc}") from None
        else:
            params[key] = default
    seed = 0
    if "seed" in raw:
        try:
            seed = _COMMON["seed"][0](raw["seed"])
        except ValueError as exc:
            raise ConfigError("seed", f"{raw['seed']!r}: {exc}") from None
    if seed_override is not None:
        if not (0 <= seed_override <= U64_MAX):
            raise ConfigError("seed", "must be an unsigned 64-bit integer")
        seed = seed_override
    cfg = ExperimentConfig(kind, seed, params, source_text)
    _cross_validate(cfg)
    return cfg


def parse_config(text: str, seed_override: int | None = None) -> ExperimentConfig:
    return from_mapping(parse_text(text), text, seed_override)


def load_config(path, seed_override: int | None = None) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    return parse_config(text, seed_override)


def _cross_validate(cfg: ExperimentConfig):
    """Module preconditions that involve several fields, checked before any compute."""
    p = cfg.params
    k = cfg.kind
    if k == "decay-fit" and p["t_min"] >= p["t_max"]:
        raise ConfigError("t_min", "must be < t_max")
    if "T" in p and "dt" in p:
        steps = p["T"] / p["dt"]
        if abs(steps - round(steps)) > 1e-9 * max(1.0, steps):
            raise ConfigError("dt", f"T = {p['T']} is not a whole number of steps of {p['dt']}")
    if "n" in p and "dt" in p and k != "linear-highfreq":
        spacing = 2 * p["half_length"] / p["n"]
        fastest = math.sqrt(p["d"]) * math.pi / spacing
        if p["dt"] * fastest > 0.5 * (1 + 1e-12):
            raise ConfigError("dt", f"dt*|xi|_max = {p['dt'] * fastest:.3g} exceeds 0.5 on this grid")
    if k in ("global-decay", "blowup", "lwp-contraction") and p["d"] != 3:
        raise ConfigError("d", "nonlinear runs use the 3-D torus")
    if k == "blowup" and 2 * p["R"] > p["half_length"] * (1 + 1e-12):
        raise ConfigError("R", "cutoff support 2R must fit inside the box (2R <= half_length)")
    if k == "odi-demo":
        if any(c <= 0 for c in p["C"]):
            raise ConfigError("C", "all values must be > 0")
        if any(h <= 0 for h in p["h0"]):
            raise ConfigError("h0", "all values must be > 0")
        if p["h1"] <= 0:
            raise ConfigError("h1", "must be > 0")
    if k == "linear-highfreq" and p["T"] > 2 * p["half_length"] * (1 + 1e-12):
        raise ConfigError("T", f"exceeds the valid horizon 2*half_length = {2 * p['half_length']:g}")
