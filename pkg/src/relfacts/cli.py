"""Command-line front end: ``relfacts {expect,sample,check-absolute,report}``.

Exit codes: 0 success, 1 a check or invariant failed, 2 usage or input error.
Errors go to stderr as one line starting with ``error:``.
"""
from __future__ import annotations

import argparse
import os
import sys

from . import __version__
from .dsl import ScenarioError
from .report import RunConfig, build, failures, load_scenario, to_json, to_text
from .scenario import Encoding

SEED_ENV = "RELFACTS_SEED"
COMMANDS = ("expect", "sample", "check-absolute", "report")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _seed(text: str) -> int:
    try:
        value = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid seed {text!r}") from None
    if not 0 <= value < 1 << 64:
        raise argparse.ArgumentTypeError(f"seed {text} does not fit in 64 unsigned bits")
    return value


def _shots(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid shot count {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError("shots must be >= 1")
    return value


def make_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--scenario", metavar="PATH", help="scenario .rfs file (default: built-in ghz3)")
    common.add_argument("--encoding", choices=[e.value for e in Encoding], default=Encoding.LITERAL.value)
    common.add_argument("--seed", type=_seed, default=None, help=f"64-bit seed (default: ${SEED_ENV} or 0)")
    common.add_argument("--shots", type=_shots, default=10000)
    common.add_argument("--output", choices=("text", "json"), default="text")

    parser = _Parser(prog="relfacts", description="Wigner's-friend GHZ contexts and the absolute-assignment check.")
    parser.add_argument("--version", action="version", version=f"relfacts {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    helps = {
        "expect": "product expectation of every context",
        "sample": "seeded shot tallies for every context",
        "check-absolute": "search all 64 absolute assignments and cross-check constraints",
        "report": "everything above in one report",
    }
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=helps[name])
    return parser


def config_from_args(args: argparse.Namespace, environ=os.environ) -> RunConfig:
    seed = args.seed
    if seed is None:
        env = environ.get(SEED_ENV)
        if env is None or env == "":
            seed = 0
        else:
            try:
                seed = _seed(env)
            except argparse.ArgumentTypeError as exc:
                raise UsageError(f"{SEED_ENV}: {exc}") from None
    return RunConfig(args.scenario, Encoding(args.encoding), seed, args.shots, args.output)


def run(command: str, config: RunConfig) -> tuple[str, list[str]]:
    """Rendered report and the list of failed checks."""
    report = build(command, config, load_scenario(config))
    text = to_json(report) if config.output == "json" else to_text(report)
    return text, failures(report)


def main(argv=None) -> int:
    try:
        args = make_parser().parse_args(argv)
        config = config_from_args(args)
        text, problems = run(args.command, config)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: scenario file not found: {exc.filename}", file=sys.stderr)
        return 2
    except ScenarioError as exc:
        print(f"error: {args.scenario}:{exc.line}:{exc.column}: {exc.message}", file=sys.stderr)
        return 2
    except (OSError, UnicodeDecodeError) as exc:
        print(f"error: cannot read scenario: {exc}", file=sys.stderr)
        return 2
    sys.stdout.write(text)
    for problem in problems:
        print(f"error: {problem}", file=sys.stderr)
    return 1 if problems else 0
