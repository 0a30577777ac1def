"""Command-line entry point: ``mapod {doe,synth,run,sensitivity}``."""
from __future__ import annotations

import argparse
import logging
import sys

from .data import DataError, SchemaError, SpecError
from .pipeline import (
    ConfigError,
    execute,
    generate_design,
    generate_synthetic,
    load_config,
    run_sensitivity,
    write_design,
)


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mapod", description="Model-assisted POD curves")
    sub = ap.add_subparsers(dest="command", required=True)
    for name, help_ in [("doe", "generate a Sobol' design of experiments"),
                        ("synth", "generate a synthetic dataset"),
                        ("run", "run the POD methods"),
                        ("sensitivity", "Sobol' indices of the POD only")]:
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", required=True, help="YAML run configuration")
        p.add_argument("--seed", type=int, help="override the configured seed")
        p.add_argument("--out", help="override the output directory")
        if name in ("run", "sensitivity"):
            p.add_argument("--methods", help="comma-separated subset of methods")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        overrides = {"seed": args.seed, "output_dir": args.out,
                     "methods": getattr(args, "methods", None)}
        cfg = load_config(args.config, **overrides)
        if args.command == "doe":
            path = write_design(cfg, generate_design(cfg), "design.csv")
            print(path)
            return 0
        if args.command == "synth":
            path = write_design(cfg, generate_synthetic(cfg), "dataset.csv")
            print(path)
            return 0
        if args.command == "sensitivity":
            try:
                return run_sensitivity(cfg)
            except (ConfigError, SpecError, SchemaError, DataError):
                raise
            except Exception as exc:
                print(f"sensitivity failed: {type(exc).__name__}: {exc}", file=sys.stderr)
                return 1
        return execute(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (SpecError, SchemaError, DataError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
