"""Run a configured experiment and write its artifacts."""
from __future__ import annotations

import hashlib
import logging
import os
from pathlib import Path

from .. import __version__
from .config import ExperimentConfig
from .kinds import RUNNERS, Check, ExperimentResult, fmt, table

log = logging.getLogger(__name__)

EXIT_PASS, EXIT_VALIDATION, EXIT_ASSERTION = 0, 1, 2


def git_blob_sha1(data: bytes) -> str:
    """Content hash identical to ``git hash-object``."""
    return hashlib.sha1(b"blob %d\0" % len(data) + data).hexdigest()


def manifest_text(cfg: ExperimentConfig, result: ExperimentResult | None, status: str) -> str:
    lines = [
        "# dwlab experiment manifest",
        f"dwlab_version = {__version__}",
        f"config_sha1 = {git_blob_sha1(cfg.source_text.encode('utf-8'))}",
        "rng = philox4x64-10 (numpy SeedSequence keyed by seed)",
    ]
    for key, value in cfg.resolved().items():
        if isinstance(value, list):
            value = " ".join(fmt(v) for v in value)
        else:
            value = fmt(value) if not isinstance(value, str) else value
        lines.append(f"{key} = {value}")
    horizon = None if result is None else result.horizon
    lines.append(f"valid_horizon = {'none' if horizon is None else fmt(horizon)}")
    lines.append(f"status = {status}")
    if result is not None:
        for name in sorted(result.tables):
            lines.append(f"output = {name}")
    return "\n".join(lines) + "\n"


def summary_csv(checks) -> str:
    return table(["check", "passed", "value", "bound", "detail"],
                 [(c.name, "pass" if c.passed else "fail", c.value, c.bound, c.detail) for c in checks])


def _write(out: Path, name: str, text: str):
    with open(out / name, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def run_experiment(cfg: ExperimentConfig, out_dir) -> tuple[int, ExperimentResult | None]:
    """Run ``cfg``, write manifest, CSVs and summary into ``out_dir``; return (exit status, result)."""
    out = Path(out_dir)
    os.makedirs(out, exist_ok=True)
    result = ExperimentResult(cfg.kind)
    try:
        RUNNERS[cfg.kind](cfg, result)
    except (ValueError, ArithmeticError, RuntimeError) as exc:
        log.error("%s failed: %s", cfg.kind, exc)
        result.checks.append(Check("runtime", False, float("nan"), float("nan"), str(exc)))
    for name, text in result.tables.items():
        _write(out, name, text)
    _write(out, "summary.csv", summary_csv(result.checks))
    status = "pass" if result.passed else "fail"
    _write(out, "manifest.txt", manifest_text(cfg, result, status))
    return (EXIT_PASS if result.passed else EXIT_ASSERTION), result
