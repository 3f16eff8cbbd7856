# -*- coding: utf-8 -*-
"""
boundary-atlas 命令行入口

    boundary-atlas generate hyp7(4)
    boundary-atlas tile k4 --out out/
    boundary-atlas pack hyp7(3) --mode hyperbolic_maximal
    boundary-atlas walk grid(5,5) --start 12 --n 10
    boundary-atlas experiment qk --n 500 --seed 7
    boundary-atlas render out/k4.tiling.json
"""

from __future__ import annotations

import argparse
import sys
from typing import Callable, Sequence

import yaml
from loguru import logger
from pydantic import ValidationError

from services.atlas.app.commands import (
    cmd_experiment,
    cmd_generate,
    cmd_pack,
    cmd_render,
    cmd_tile,
    cmd_walk,
)
from services.atlas.app.core.config import settings
from services.atlas.app.core.exceptions import (
    EXIT_FAILURE,
    EXIT_USAGE,
    AtlasError,
    UsageError,
    exit_code_for,
)
from services.atlas.app.core.logging import setup_logging
from services.atlas.app.schemas.run_config import RunConfig

COMMANDS: dict[str, tuple[Callable[[RunConfig], int], str, str]] = {
    "generate": (cmd_generate.run, "family", "network family, e.g. hyp7(4)"),
    "tile": (cmd_tile.run, "network", "graph file or network family"),
    "pack": (cmd_pack.run, "network", "graph file or network family"),
    "walk": (cmd_walk.run, "network", "graph file or network family"),
    "experiment": (cmd_experiment.run, "name", "experiment name"),
    "render": (cmd_render.run, "data", "tiling or packing data file"),
}


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _depths(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad depth list {text!r}") from exc


def _param(text: str) -> tuple[str, object]:
    key, sep, value = text.partition("=")
    if not sep or not key:
        raise argparse.ArgumentTypeError(f"expected key=value, got {text!r}")
    return key.strip(), yaml.safe_load(value)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--tol", type=float, default=None)
    common.add_argument(
        "--out", default=None, help=f"output directory (default {settings.OUTPUT_DIR})"
    )
    common.add_argument("--mode", default=None)
    common.add_argument("--n", type=int, default=None)
    common.add_argument("--depths", type=_depths, default=None, help="comma separated, e.g. 4,5,6")
    common.add_argument("--log-level", default=None)
    common.add_argument(
        "--param", type=_param, action="append", default=[], metavar="KEY=VALUE",
        help="extra parameter (YAML value), repeatable",
    )

    parser = _Parser(prog="boundary-atlas", description="harmonic boundary atlas of plane networks")
    parser.add_argument("--version", action="version", version=settings.APP_VERSION)
    sub = parser.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)
    for name, (_, arg, help_text) in COMMANDS.items():
        p = sub.add_parser(name, parents=[common])
        p.add_argument("source", metavar=arg, help=help_text)
        if name == "walk":
            p.add_argument("--start", type=int, default=None)
            p.add_argument("--absorb-root", action="store_true")
        if name == "pack":
            p.add_argument("--edges", action="store_true", help="draw tangency edges")
            p.add_argument("--superstep", action="store_true")
    return parser


def to_config(args: argparse.Namespace) -> RunConfig:
    params = dict(args.param)
    for extra in ("start", "absorb_root", "edges", "superstep"):
        value = getattr(args, extra, None)
        if value not in (None, False):
            params[extra] = value
    return RunConfig(
        subcommand=args.subcommand,
        source=args.source,
        seed=args.seed,
        tol=args.tol,
        out=args.out,
        mode=args.mode,
        n=args.n,
        depths=args.depths,
        params=params,
    )


def main(argv: Sequence[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(f"error: {exc.message}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help / --version
        return exit_code_for(exc)

    setup_logging(args.log_level)
    try:
        cfg = to_config(args)
    except ValidationError as exc:
        print(f"error: {exc.errors()[0]['msg']}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return COMMANDS[cfg.subcommand][0](cfg)
    except AtlasError as exc:
        logger.bind(**{k: v for k, v in exc.details.items() if v is not None}).error(exc.message)
        print(f"error: {exc.message}", file=sys.stderr)
        return exc.exit_code
    except Exception as exc:  # noqa: BLE001
        logger.exception("unexpected failure")
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
