"""Command line: ``paraloop run <config> [--out DIR] [--seed N] [--jobs N] [--scenario NAME]``."""

from __future__ import annotations

import argparse
import logging
import sys

from .config import load_config
from .errors import ConfigError, SolverError
from .experiments import run

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER = 0, 2, 3

log = logging.getLogger("paraloop")


def _parser():
    p = argparse.ArgumentParser(prog="paraloop",
                                description="Parametric small-loop receiver experiments")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run one scenario from a TOML config")
    r.add_argument("config", help="path to the experiment TOML file")
    r.add_argument("--out", default="results", help="output directory (default: results)")
    r.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    r.add_argument("--jobs", type=int, default=1, help="worker processes (default: 1)")
    r.add_argument("--scenario", default=None, help="scenario name when the file has several")
    r.add_argument("--all", action="store_true", help="run every scenario in the file")
    r.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    if args.seed is not None and args.seed < 0:
        log.error("--seed must be non-negative")
        return EXIT_CONFIG
    if args.jobs < 1:
        log.error("--jobs must be at least 1")
        return EXIT_CONFIG
    try:
        cfg = load_config(args.config)
        names = list(cfg.scenarios) if args.all else [args.scenario]
        failed = False
        for name in names:
            out = f"{args.out}/{name}" if args.all else args.out
            manifest = run(cfg, name, out, seed=args.seed, jobs=args.jobs)
            for config, msg in manifest["failures"].items():
                log.error("%s/%s: %s", manifest["scenario"], config, msg)
                failed = True
            log.info("%s: wrote %d files to %s", manifest["scenario"], len(manifest["files"]), out)
    except ConfigError as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG
    except SolverError as exc:
        log.error("solver failure: %s", exc)
        return EXIT_SOLVER
    return EXIT_SOLVER if failed else EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
