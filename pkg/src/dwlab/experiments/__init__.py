"""Config-driven experiments binding the library modules together."""
from .config import KINDS, ConfigError, ExperimentConfig, load_config, parse_config
from .kinds import RUNNERS, Check, ExperimentResult, make_rng
from .runner import EXIT_ASSERTION, EXIT_PASS, EXIT_VALIDATION, git_blob_sha1, run_experiment

__all__ = [
    "KINDS",
    "ConfigError",
    "ExperimentConfig",
    "load_config",
    "parse_config",
    "RUNNERS",
    "Check",
    "ExperimentResult",
    "make_rng",
    "run_experiment",
    "git_blob_sha1",
    "EXIT_PASS",
    "EXIT_VALIDATION",
    "EXIT_ASSERTION",
]
