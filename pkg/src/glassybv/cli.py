"""Command-line entry point: ``glassybv <experiment> [flags]``.

Exit status is 0 on success, 1 for configuration errors and 2 when an
experiment fails at run time. The worker count comes from the
``GLASSYBV_WORKERS`` environment variable.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .errors import GlassyBVError
from .experiments import (
    RUNNERS,
    ConfigError,
    ExperimentConfig,
    run_fit,
    worker_count,
    write_atomic,
)

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _int_list(text: str) -> list[int]:
    return [int(v) for v in text.split(",") if v.strip()]


def _float_list(text: str) -> list[float]:
    """Comma list, or ``lin:start:stop:num`` / ``geom:start:stop:num``."""
    if text.startswith(("lin:", "geom:")):
        kind, lo, hi, num = text.split(":")
        fn = np.linspace if kind == "lin" else np.geomspace
        return [float(v) for v in fn(float(lo), float(hi), int(num))]
    return [float(v) for v in text.split(",") if v.strip()]


def _n_range(text: str) -> list[int]:
    lo, _, hi = text.replace("-", ":").partition(":")
    return [int(lo), int(hi or lo)]


def _pins(text: str) -> dict[str, float]:
    out = {}
    for item in text.split(","):
        if item.strip():
            key, _, value = item.partition("=")
            out[key.strip()] = float(value)
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="glassybv", description="Bernstein-Vazirani under quenched gate disorder")
    sub = parser.add_subparsers(dest="experiment", required=True, parser_class=_Parser)
    common = _Parser(add_help=False)
    common.add_argument("--config", help="JSON config file; flags override its fields")
    common.add_argument("--out", dest="output_path", help="output CSV path (default: stdout)")
    common.add_argument("--seed", type=int)
    common.add_argument("--family")
    common.add_argument("--max-samples", dest="max_samples", type=int)

    sweep = sub.add_parser("sweep", parents=[common], help="Q and C against scaled strength")
    sweep.add_argument("--n", type=_int_list, help="comma list of string lengths")
    sweep.add_argument("--grid", type=_float_list, help="sigma_bar grid")

    sq = sub.add_parser("squeezed", parents=[common], help="squeezed disorder against r")
    sq.add_argument("--n", type=_int_list)
    sq.add_argument("--grid", type=_float_list, help="r grid")
    sq.add_argument("--D", type=float)

    adv = sub.add_parser("advantage", parents=[common], help="Q - C against n")
    adv.add_argument("--sigma-bar", dest="sigma_bar", type=_float_list)
    adv.add_argument("--n-range", dest="n_range", type=_n_range, help="lo:hi inclusive")

    clt = sub.add_parser("clt", parents=[common], help="ln P moments and log-normal check")
    clt.add_argument("--n", type=_int_list)
    clt.add_argument("--sigma-bar", dest="sigma_bar", type=_float_list)

    fit = sub.add_parser("fit", parents=[common], help="fit a sweep CSV")
    fit.add_argument("--input", dest="input_path", help="CSV written by the sweep command")
    fit.add_argument("--form", choices=("auto", "gauss_only", "gauss_quad"))
    fit.add_argument("--pin", type=_pins, help="fixed parameters, e.g. c=0,d=0")
    return parser


def load_config(args: argparse.Namespace) -> ExperimentConfig:
    data: dict = {}
    if args.config:
        try:
            data = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        exp = data.get("experiment", args.experiment)
        if exp.replace("_sweep", "") != args.experiment and exp != args.experiment:
            raise ConfigError(f"config is for {exp!r}, command is {args.experiment!r}")
    data["experiment"] = args.experiment
    for key, value in vars(args).items():
        if key in ("config", "experiment") or value is None:
            continue
        data[key] = value
    try:
        return ExperimentConfig.from_dict(data).resolved()
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def run(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        cfg = load_config(args)
        worker_count()
    except ConfigError as exc:
        print(f"glassybv: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        if cfg.experiment == "fit":
            text, report = run_fit(cfg)
            print(report, file=sys.stderr if cfg.output_path is None else sys.stdout)
        else:
            text = RUNNERS[cfg.experiment](cfg)
        if cfg.output_path:
            write_atomic(cfg.output_path, text)
        else:
            sys.stdout.write(text)
    except ConfigError as exc:
        print(f"glassybv: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (GlassyBVError, OSError, ValueError, RuntimeError) as exc:
        print(f"glassybv: {cfg.experiment} failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


def main() -> None:
    sys.exit(run())
