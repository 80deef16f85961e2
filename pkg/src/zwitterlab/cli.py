"""Command line: run, list, describe, validate.

Environment overrides (used when the flag is absent): ZWITTERLAB_CONFIG,
ZWITTERLAB_OUT, ZWITTERLAB_SEED, ZWITTERLAB_THREADS, ZWITTERLAB_LOG.
Exit codes: 0 all acceptance checks pass, 1 a check failed, 2 config error.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys

from .evolution import PropagationError
from .experiments import (ConfigError, ExperimentConfig, describe, list_experiments, run_experiment,
                          validate)
from .state import StateError

ENV_PREFIX = "ZWITTERLAB_"
EXIT_OK, EXIT_CHECK, EXIT_CONFIG = 0, 1, 2


def _env(name, default=None):
    return os.environ.get(ENV_PREFIX + name, default)


def _load(args) -> ExperimentConfig:
    path = args.config or _env("CONFIG")
    if path:
        try:
            cfg = ExperimentConfig.load(path)
        except OSError as exc:
            raise ConfigError([f"[config] cannot read {path}: {exc}"]) from exc
        except Exception as exc:  # yaml errors
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError([f"[config] cannot parse {path}: {exc}"]) from exc
        if args.experiment and args.experiment != cfg.experiment:
            raise ConfigError([f"[config] experiment {args.experiment!r} does not match config "
                               f"({cfg.experiment!r})"])
    elif args.experiment:
        cfg = ExperimentConfig(args.experiment)
    else:
        raise ConfigError(["[config] give an experiment name or --config"])
    out = args.out or _env("OUT")
    if out:
        cfg.out = out
    seed = args.seed if args.seed is not None else _env("SEED")
    threads = args.threads if args.threads is not None else _env("THREADS")
    try:
        if seed is not None:
            cfg.seed = int(seed)
        if threads is not None:
            cfg.threads = int(threads)
    except ValueError as exc:
        raise ConfigError([f"[config] {exc}"]) from exc
    return cfg


def _add_common(p):
    p.add_argument("experiment", nargs="?", help="experiment name (optional with --config)")
    p.add_argument("--config", help="YAML experiment config")
    p.add_argument("--out", help="output root directory")
    p.add_argument("--seed", type=int, help="seed for randomized test states")
    p.add_argument("--threads", type=int, help="FFT worker threads")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="zwitterlab", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)
    _add_common(sub.add_parser("run", help="run one experiment and write its artifacts"))
    sub.add_parser("list", help="list experiments")
    d = sub.add_parser("describe", help="describe an experiment and print its default config")
    d.add_argument("experiment")
    _add_common(sub.add_parser("validate", help="check a config without running it"))
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.DEBUG if args.verbose else getattr(logging, _env("LOG", "WARNING").upper(), logging.WARNING)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "list":
            for e in list_experiments():
                print(f"{e.criterion:>2}  {e.name:<24} {e.summary}")
            return EXIT_OK
        if args.command == "describe":
            print(describe(args.experiment))
            return EXIT_OK
        cfg = _load(args)
        if args.command == "validate":
            issues = validate(cfg)
            if issues:
                for i in issues:
                    print(i, file=sys.stderr)
                return EXIT_CONFIG
            print(f"{cfg.experiment}: config ok")
            return EXIT_OK
        res = run_experiment(cfg)
    except ConfigError as exc:
        for i in exc.issues:
            print(i, file=sys.stderr)
        return EXIT_CONFIG
    except (PropagationError, StateError) as exc:
        print(f"aborted: {exc}", file=sys.stderr)
        return EXIT_CHECK
    for c in res.checks:
        tag = "PASS" if c.passed else "FAIL"
        kind = "" if c.acceptance else " (info)"
        print(f"{tag}{kind}  {c.name}: {c.value:.6g} [{c.threshold}]")
    print(f"{res.name}: {'PASS' if res.passed else 'FAIL'}  ({res.report.get('runtime_s', 0):.1f} s)")
    return EXIT_OK if res.passed else EXIT_CHECK


if __name__ == "__main__":
    sys.exit(main())
