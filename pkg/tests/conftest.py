import sys
import time
from dataclasses import dataclass
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from dwlab.experiments import load_config, parse_config, run_experiment  # noqa: E402

ROOT = Path(__file__).resolve().parents[1]
CONFIGS = ROOT / "demos" / "configs"


@dataclass
class Run:
    status: int
    result: object
    out: Path
    seconds: float


def run_config(cfg, out: Path) -> Run:
    t0 = time.perf_counter()
    status, result = run_experiment(cfg, out)
    return Run(status, result, out, time.perf_counter() - t0)


def run_demo(kind: str, out: Path, **overrides) -> Run:
    if overrides:
        text = (CONFIGS / f"{kind}.cfg").read_text()
        lines = [ln for ln in text.splitlines() if ln.split("=", 1)[0].strip() not in overrides]
        lines += [f"{k} = {v}" for k, v in overrides.items()]
        cfg = parse_config("\n".join(lines) + "\n")
    else:
        cfg = load_config(CONFIGS / f"{kind}.cfg")
    return run_config(cfg, out)


@pytest.fixture(scope="session")
def blowup_run(tmp_path_factory):
    return run_demo("blowup", tmp_path_factory.mktemp("blowup"))


@pytest.fixture(scope="session")
def global_decay_run(tmp_path_factory):
    return run_demo("global-decay", tmp_path_factory.mktemp("global-decay"))


@pytest.fixture(scope="session")
def strichartz_run(tmp_path_factory):
    return run_demo("strichartz-ratio", tmp_path_factory.mktemp("strichartz"))


@pytest.fixture(scope="session")
def lwp_run(tmp_path_factory):
    return run_demo("lwp-contraction", tmp_path_factory.mktemp("lwp"))


def pytest_terminal_summary(terminalreporter):
    try:
        import test_acceptance
    except ImportError:
        return
    if test_acceptance.REPORT:
        terminalreporter.section("acceptance criteria")
        for line in sorted(test_acceptance.REPORT, key=lambda s: (int(s.split("criterion ")[1].split(":")[0]), s.startswith("INFO"))):
            terminalreporter.write_line(line)
