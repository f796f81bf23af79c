"""Command line front end.

`kgqv run` assembles an ExperimentConfig from an optional flat JSON
config file plus flags (flags win), runs the experiment, writes one CSV
into the output directory, and prints the JSON summary on stdout.
Progress goes to stderr.  Exit codes: 0 all bounds met, 1 a bound
failed, 2 usage problem, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .errors import KgqvError, UsageError
from .experiments import EXPERIMENT_IDS, ExperimentConfig, run, summary_json, write_csv

_CONFIG_KEYS = {
    "experiment": str,
    "a": float,
    "m": float,
    "theta": float,
    "diffusion": str,
    "n": int,
    "reps": int,
    "seed": int,
    "out": str,
    "jobs": int,
}


def _coerce(key: str, value):
    want = _CONFIG_KEYS[key]
    # bool is an int subtype; reject it before the numeric branches
    if isinstance(value, bool):
        raise UsageError(f"config key {key!r} must be a {want.__name__}, got a boolean")
    if want is float:
        if not isinstance(value, (int, float)):
            raise UsageError(f"config key {key!r} must be a number, got {value!r}")
        return float(value)
    if want is int:
        if not isinstance(value, int):
            raise UsageError(f"config key {key!r} must be an integer, got {value!r}")
        return value
    if not isinstance(value, str):
        raise UsageError(f"config key {key!r} must be a string, got {value!r}")
    return value


def _load_config_file(path: str) -> dict:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except FileNotFoundError:
        raise UsageError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"config file {path} is not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise UsageError("config file must hold a single JSON object")
    merged = {}
    for key, value in data.items():
        if key not in _CONFIG_KEYS:
            raise UsageError(f"unknown config key {key!r}")
        merged[key] = _coerce(key, value)
    return merged


def parse_config(args: argparse.Namespace) -> ExperimentConfig:
    merged = {}
    if args.config is not None:
        merged.update(_load_config_file(args.config))
    for key in _CONFIG_KEYS:
        value = getattr(args, key)
        if value is not None:
            merged[key] = value
    if "experiment" not in merged:
        raise UsageError("missing required option: experiment")
    return ExperimentConfig(**merged)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kgqv",
        description="lattice experiments for a damped hyperbolic SPDE",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    runp = sub.add_parser(
        "run",
        help="run one verification experiment",
        description="Experiments: " + ", ".join(EXPERIMENT_IDS),
    )
    runp.add_argument("--experiment", help="experiment identifier")
    runp.add_argument("--config", help="flat JSON config file; flags override it")
    runp.add_argument("--a", type=float, help="damping coefficient")
    runp.add_argument("--m", type=float, help="mass parameter")
    runp.add_argument("--theta", type=float, help="diffusion scale")
    runp.add_argument("--diffusion", help="diffusion coefficient identifier")
    runp.add_argument("--n", type=int, help="finest resolution, a power of two")
    runp.add_argument("--reps", type=int, help="replications per configuration")
    runp.add_argument("--seed", type=int, help="master seed")
    runp.add_argument("--out", help="output directory for the CSV")
    runp.add_argument("--jobs", type=int, help="worker threads")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = parse_config(args)
        report = run(cfg)
        os.makedirs(cfg.out, exist_ok=True)
        write_csv(report, os.path.join(cfg.out, f"{cfg.experiment}.csv"))
        print(summary_json(report))
        return 0 if report.passed else 1
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except KgqvError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
