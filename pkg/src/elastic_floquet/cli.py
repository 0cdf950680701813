"""Command line entry point: one subcommand per experiment kind."""
from __future__ import annotations

import argparse
import sys

from . import __version__
from .config import DEFAULT_TOLERANCES, KINDS, load_config
from .errors import (AssumptionViolationError, CertificationError, ConfigError,
                     ConstructionError, InvalidCapacitanceError, NumericalError)
from .experiments import run_experiment, write_outputs

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_CERTIFICATION = 4


def parse_tolerances(items) -> dict:
    out = {}
    for item in items or ():
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"--tol expects key=value, got {item!r}")
        if key not in DEFAULT_TOLERANCES:
            raise ConfigError(f"unknown tolerance {key!r}; valid: {', '.join(DEFAULT_TOLERANCES)}")
        try:
            out[key] = float(value)
        except ValueError:
            raise ConfigError(f"tolerance {key!r} is not a number: {value!r}") from None
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="elastic-floquet",
        description="Capacitance spectra, Floquet exponents and exceptional points of "
                    "time modulated elastic resonator lattices.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="kind", required=True, metavar="KIND")
    for kind in KINDS:
        p = sub.add_parser(kind, help=f"run the {kind} experiment")
        p.add_argument("--config", required=True, metavar="PATH", help="TOML configuration")
        p.add_argument("--out", metavar="DIR", help="output directory (overrides the config)")
        p.add_argument("--workers", type=int, default=1, metavar="N",
                       help="worker processes for sweeps")
        p.add_argument("--seed", type=int, metavar="S", help="random seed (overrides the config)")
        p.add_argument("--tol", action="append", metavar="KEY=VALUE",
                       help="tolerance override; keys: " + ", ".join(DEFAULT_TOLERANCES))
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    try:
        if args.workers < 1:
            raise ConfigError("--workers must be at least 1")
        cfg = load_config(args.config, args.kind)
        cfg = cfg.with_overrides(args.seed, parse_tolerances(args.tol), args.out)
        output = run_experiment(cfg, args.workers)
        paths = write_outputs(output, cfg, cfg.data["output"]["directory"])
    except (ConfigError, InvalidCapacitanceError, AssumptionViolationError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ConstructionError, CertificationError) as exc:
        print(f"certification failed: {exc}", file=sys.stderr)
        return EXIT_CERTIFICATION
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    for p in paths:
        print(p)
    if output.certified is False:
        print("certification failed: see certificate.json", file=sys.stderr)
        return EXIT_CERTIFICATION
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
