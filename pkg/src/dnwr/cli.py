"""Command-line entry point: ``dnwr run <preset|config>`` and ``dnwr list-presets``."""
from __future__ import annotations

import argparse
import dataclasses
import logging
import sys

from .errors import DnwrError
from .experiments import iterations_summary, list_presets, load_config, preset_text, run_experiment, validate


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="dnwr",
        description="Dirichlet-Neumann waveform relaxation convergence studies.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="log every theta run")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a preset or a key = value config file")
    run.add_argument("config", help="preset name or path to a config file")
    run.add_argument("--output", "-o", help="CSV path (default: config 'output' or <name>.csv)")
    run.add_argument("--max-iter", type=int, help="override max_iterations")
    run.add_argument("--tol", type=float, help="override tolerance")
    run.add_argument("--workers", type=int, help="threads for independent subdomain solves")

    sub.add_parser("list-presets", help="list built-in presets")
    show = sub.add_parser("show-preset", help="print a preset's config text")
    show.add_argument("name")
    return parser


def _run(args):
    config = load_config(args.config)
    overrides = {}
    if args.max_iter is not None:
        overrides["max_iterations"] = args.max_iter
    if args.tol is not None:
        overrides["tolerance"] = args.tol
    if args.workers is not None:
        overrides["workers"] = args.workers
    if overrides:
        config = dataclasses.replace(config, **overrides)
        validate(config)
    output = args.output or config.output or f"{config.name or 'dnwr'}.csv"
    results = run_experiment(config, output)
    for (label, theta), k in iterations_summary(results).items():
        prefix = f"[{label}] " if label else ""
        status = f"{k} iterations" if k is not None else "not converged"
        print(f"{prefix}theta={theta:g}: {status}")
    print(f"wrote {output}")
    return 0


def main(argv=None):
    args = _build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "list-presets":
            for name, description in list_presets():
                print(f"{name:24s} {description}")
            return 0
        if args.command == "show-preset":
            sys.stdout.write(preset_text(args.name))
            return 0
        return _run(args)
    except DnwrError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
