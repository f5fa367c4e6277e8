"""Command line entry point.

    barronwave list
    barronwave run EXPERIMENT [--config FILE] [--set key=value ...] [--out DIR] [--seed N]

Exit status: 0 when every check passes, 1 on a numerical failure, 2 on a
usage or configuration error (nothing is written in that case).
"""
from __future__ import annotations

import argparse
import configparser
import logging
import sys

from .experiments import REGISTRY, ConfigError, ExperimentConfig, resolve_parameters, run_experiment

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


def _fmt_default(v) -> str:
    if isinstance(v, tuple):
        return ",".join(format(x, "g") for x in v)
    return str(v)


def read_config(path: str, experiment: str) -> dict:
    """Parameters for ``experiment`` from an INI file with one section per experiment.

    Every section name and key is validated, not only the selected one.
    """
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from None
    for section in parser.sections():
        if section not in REGISTRY:
            raise ConfigError(f"unknown experiment section [{section}] in {path}")
        resolve_parameters(section, dict(parser[section]))
    return dict(parser[experiment]) if parser.has_section(experiment) else {}


def _parse_sets(items) -> dict:
    out = {}
    for item in items or ():
        key, sep, value = item.partition("=")
        if not sep or not key.strip():
            raise ConfigError(f"--set expects key=value, got {item!r}")
        out[key.strip()] = value.strip()
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="barronwave", description=__doc__.split("\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("list", help="list experiments with their default parameters")
    run = sub.add_parser("run", help="run one experiment and write CSV + JSON")
    run.add_argument("experiment", choices=sorted(REGISTRY))
    run.add_argument("--config", help="INI file, one [section] per experiment")
    run.add_argument("--set", action="append", metavar="KEY=VALUE", help="override one parameter")
    run.add_argument("--out", default="results", help="output directory (default: results)")
    run.add_argument("--seed", type=int, help="random seed for Monte Carlo and trial functions")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")

    if args.command == "list":
        for name, exp in REGISTRY.items():
            print(f"{name}: {exp.summary}")
            for key, value in exp.defaults.items():
                print(f"    {key} = {_fmt_default(value)}")
        return EXIT_OK

    try:
        overrides = read_config(args.config, args.experiment) if args.config else {}
        overrides.update(_parse_sets(args.set))
        if args.seed is not None:
            overrides["seed"] = str(args.seed)
        params = resolve_parameters(args.experiment, overrides)
        report = run_experiment(ExperimentConfig(args.experiment, params, args.out))
    except ConfigError as exc:
        parser.print_usage(sys.stderr)
        print(f"barronwave: error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    for name, ok in report.checks.items():
        print(f"{'PASS' if ok else 'FAIL'}  {report.experiment}: {name}")
    if report.error:
        print(f"error: {report.error}")
    print(f"{len(report.rows)} rows written to {args.out} in {report.wall_clock_seconds:.2f} s")
    return EXIT_OK if report.passed else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
