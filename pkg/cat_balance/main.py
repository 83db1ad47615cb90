#!/usr/bin/env python3
"""Main module for the cat-balance experiment harness."""

import argparse
import logging
import platform
from collections.abc import Sequence

import numpy as np
import pandas as pd

from . import __version__
from .config import load_config
from .errors import CatBalanceError, ConfigurationError
from .experiments import convergence, list_presets, run, wb_check
from .logger import Logger

# Version and build information
VERSION = __version__
BUILD_NUMBER = "1"

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIGURATION = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="catbal", description="CAT2P / ACAT2P finite-difference solvers for balance laws"
    )
    parser.add_argument("--verbose", action="store_true", help="Enable verbose logging output")
    parser.add_argument("--debug", action="store_true", help="Enable debug logging")
    parser.add_argument("--log-file", default="cat_balance.log", help="Rotating log file ('' disables it)")
    commands = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI file with [section] key = value entries")
    common.add_argument("--preset", help="Named experiment (see list-presets)")
    common.add_argument(
        "--override", action="append", default=[], metavar="KEY=VALUE", help="Replace one dotted key (repeatable)"
    )
    common.add_argument("--out", default="results", help="Output directory")
    common.add_argument("--dry-run", action="store_true", help="Print the resolved configuration and exit")

    commands.add_parser("run", parents=[common], help="Run one simulation and write a snapshot")
    for name, help_text in (
        ("convergence", "Errors and orders over the mesh list"),
        ("wb-check", "Drift of the stationary solution over the mesh list"),
    ):
        command = commands.add_parser(name, parents=[common], help=help_text)
        command.add_argument("--jobs", type=int, default=1, help="Parallel runs")
    commands.add_parser("list-presets", help="List the named experiments")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    """Main entry point for the application."""
    args = build_parser().parse_args(argv)

    # Create logger
    logger = Logger(verbose=args.verbose, log_file=args.log_file or None)

    # Enable debug logging if requested
    if args.debug:
        logger.setLevel(logging.DEBUG)
        logger.debug("Debug logging enabled")

    if args.command == "list-presets":
        for name, description in list_presets():
            print(f"{name:<28} {description}")
        return EXIT_OK

    # Display banner
    logger.banner(f"""
╔════════════════════════════════════════════════════════════════════════════╗
║                 🚀 cat-balance v{VERSION} (build={BUILD_NUMBER})                                 ║
║                                                                            ║
║  Compact approximate Taylor schemes for balance laws, with well-balanced   ║
║  and adaptive variants, in one and two space dimensions                    ║
╚════════════════════════════════════════════════════════════════════════════╝
""")

    # Display system information
    logger.info("🔍 System Information:")
    logger.info(f"  Python version: {platform.python_version()} ({platform.python_implementation()})")
    logger.info(f"  numpy version: {np.__version__}")
    logger.info(f"  pandas version: {pd.__version__}")
    logger.info(f"  Debug logging: {'Yes' if args.debug else 'No'}")
    logger.info(f"  Verbose mode: {'Yes' if args.verbose else 'No'}")

    try:
        config = load_config(args.preset, args.config, args.override)
        if args.dry_run:
            for key, value in config.resolved_items().items():
                print(f"{key} = {value}")
            return EXIT_OK

        logger.info(f"🔍 Experiment: {config.name} ({config.dim}D {config.model}, t_end={config.t_end:g})")
        if args.command == "run":
            for path in run(config, args.out, logger):
                logger.info(f"✅ Wrote {path}")
        elif args.command == "convergence":
            logger.info(f"✅ Wrote {convergence(config, args.out, args.jobs, logger)}")
        else:
            logger.info(f"✅ Wrote {wb_check(config, args.out, args.jobs, logger)}")
    except ConfigurationError as e:
        logger.error(f"❌ Invalid configuration: {e}")
        return EXIT_CONFIGURATION
    except CatBalanceError as e:
        logger.error(f"❌ {type(e).__name__}: {e}")
        return EXIT_FAILURE
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
