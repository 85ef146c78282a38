"""Command line entry point: ``dwlab <kind> --config <path> [--out <dir>] [--seed <u64>]``.

``dwlab exponents`` prints the exponent table as CSV without a config.
"""
from __future__ import annotations

import argparse
import logging
import sys

from .experiments import KINDS, ConfigError, EXIT_VALIDATION, load_config, run_experiment


def _parser():
    p = argparse.ArgumentParser(prog="dwlab", description="Damped-wave numerical experiments")
    p.add_argument("kind", choices=KINDS)
    p.add_argument("--config", required=True, help="flat 'key = value' config file")
    p.add_argument("--out", default=None, help="output directory (default: out/<kind>)")
    p.add_argument("--seed", default=None, help="unsigned 64-bit seed overriding the config")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    if argv[:1] == ["exponents"]:
        # config-free shortcut: print the curated exponent table
        from .exponents import exponent_table_csv
        sys.stdout.write(exponent_table_csv())
        return 0
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_VALIDATION if exc.code else 0
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        seed = None
        if args.seed is not None:
            try:
                seed = int(args.seed, 10)
            except ValueError:
                raise ConfigError("seed", f"{args.seed!r} is not an integer") from None
        cfg = load_config(args.config, seed_override=seed)
        if cfg.kind != args.kind:
            raise ConfigError("kind", f"config declares {cfg.kind!r} but the command asked for {args.kind!r}")
    except ConfigError as exc:
        print(f"dwlab: invalid config: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"dwlab: cannot read config: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    status, result = run_experiment(cfg, args.out or f"out/{cfg.kind}")
    for c in result.checks:
        print(f"{'PASS' if c.passed else 'FAIL'} {cfg.kind}:{c.name} value={c.value:.6g} bound={c.bound:.6g} {c.detail}".rstrip())
    return status


if __name__ == "__main__":
    sys.exit(main())
