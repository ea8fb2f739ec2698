"""Command-line entry point: ``forge <command> [options]``."""

import argparse
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

ROOT_DIR = Path(__file__).resolve().parent.parent.parent
SRC_DIR = ROOT_DIR / "src"

for candidate in (SRC_DIR, ROOT_DIR):
    candidate_str = str(candidate)
    if candidate_str not in sys.path:
        sys.path.insert(0, candidate_str)

from core.config_manager import load_run_config  # noqa: E402
from core.items import Facet  # noqa: E402
from core.pipeline import run  # noqa: E402
from utils.config_validator import FACET_IDS, LOG_LEVELS, PROMPT_VERSIONS  # noqa: E402
from utils.error_handler import ForgeError  # noqa: E402
from utils.setup_logging import setup_logging  # noqa: E402

PROG = "forge"


def _facet(value: str) -> str:
    try:
        return Facet.parse(value).value
    except ForgeError as e:
        raise argparse.ArgumentTypeError(str(e)) from None


def _global_options() -> argparse.ArgumentParser:
    """Flags accepted before or after the subcommand; unset flags leave no attribute behind."""
    parent = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    parent.add_argument("--config", type=Path, help="Run configuration (YAML). Defaults to config/forge.yaml.")
    parent.add_argument("--seed", type=int, help="Seed for shuffling and simulation.")
    parent.add_argument("--mock", type=Path, help="Scripted mock gateway file; no network calls are made.")
    parent.add_argument("--endpoint", help="Chat-completion endpoint URL.")
    parent.add_argument("--log-level", choices=LOG_LEVELS, type=str.upper, help="Logging level.")
    return parent


def _out_option(parser: argparse.ArgumentParser):
    parser.add_argument("--out", type=Path, help="Output directory (defaults to the configured workspace).")


def build_parser() -> argparse.ArgumentParser:
    common = _global_options()
    parser = argparse.ArgumentParser(
        prog=PROG,
        description="Generate situational judgment test items with a language model and analyse their quality.",
        parents=[common],
    )
    sub = parser.add_subparsers(dest="command", metavar="command", required=True)

    prompt = sub.add_parser("prompt", parents=[common], help="Print the generation prompt of a facet.")
    prompt.add_argument("--facet", type=_facet, required=True, help=f"One of {FACET_IDS}.")
    prompt.add_argument("--version", choices=PROMPT_VERSIONS)
    prompt.add_argument("--spec", type=Path, help="Prompt spec JSON file to render instead of the catalogue.")
    prompt.add_argument("--target", type=int, help="Number of new scenarios to ask for.")
    prompt.add_argument("--audit", action="store_true", help="Check the prompt for its version's strategies.")
    _out_option(prompt)

    generate = sub.add_parser("generate", parents=[common], help="Generate an item bank through the gateway.")
    generate.add_argument("--facets", nargs="+", type=_facet)
    generate.add_argument("--items-per-facet", type=int)
    generate.add_argument("--max-rounds", type=int)
    generate.add_argument("--version", choices=PROMPT_VERSIONS)
    generate.add_argument("--versions", nargs="+", choices=PROMPT_VERSIONS, help="One bank per prompt version.")
    generate.add_argument("--temperatures", nargs="+", type=float, help="One bank per temperature.")
    generate.add_argument("--bank-name", help="Bank file stem (default: bank).")
    generate.add_argument("--shuffle-options", action="store_true")
    _out_option(generate)

    parse = sub.add_parser("parse", parents=[common], help="Parse saved completions into a bank.")
    parse.add_argument("inputs", nargs="+", type=Path, help="Completion text files.")
    parse.add_argument("--facet", type=_facet, required=True)
    parse.add_argument("--version", choices=PROMPT_VERSIONS, help="Prompt version recorded as provenance.")
    parse.add_argument("--out", dest="out_file", type=Path, help="Bank file to write (default: <workspace>/bank.json).")
    parse.add_argument("--shuffle-options", action="store_true")

    cv = sub.add_parser("cv", parents=[common], help="Content validity from expert ratings.")
    cv.add_argument("--ratings", type=Path)
    cv.add_argument("--groups", type=Path)
    cv.add_argument("--threshold", type=float, help="Lawshe CVR threshold (default 0.75).")
    cv.add_argument("--name", help="Report file stem (default: cv).")
    _out_option(cv)

    psych = sub.add_parser("psych", parents=[common], help="Reliability and validity from responses.")
    psych.add_argument("--responses", type=Path)
    psych.add_argument("--meta", type=Path)
    psych.add_argument("--bank", type=Path)
    psych.add_argument("--name", help="Report file stem (default: psych).")
    _out_option(psych)

    simulate = sub.add_parser("simulate", parents=[common], help="Simulate respondents and expert ratings.")
    simulate.add_argument("--sim-config", "--sim", dest="sim_config", type=Path, help="Simulation config (YAML/JSON).")
    simulate.add_argument("--bank", type=Path)
    simulate.add_argument("--ratings", action="store_true", help="Also emit rating fixtures for every design.")
    simulate.add_argument("--raters", type=int)
    simulate.add_argument("--rating-items", type=int)
    _out_option(simulate)

    report = sub.add_parser("report", parents=[common], help="Merge the reports of a directory.")
    report.add_argument("directory", nargs="?", type=Path)

    return parser


def overrides_from_args(args: argparse.Namespace) -> Dict[str, Any]:
    """Dotted config keys set by CLI flags."""
    overrides: Dict[str, Any] = {}
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    if getattr(args, "mock", None) is not None:
        overrides["gateway.mockScript"] = str(args.mock)
    if getattr(args, "endpoint", None) is not None:
        overrides["gateway.endpointUrl"] = args.endpoint
    if getattr(args, "log_level", None) is not None:
        overrides["logLevel"] = args.log_level
    return overrides


def main(argv: Optional[List[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(argv)
    try:
        config = load_run_config(getattr(args, "config", None), overrides_from_args(args))
        setup_logging(config.log_level)
        return run(args.command, config, args, argv)
    except ForgeError as e:
        logging.getLogger(__name__).debug("Run failed", exc_info=True)
        print(f"{PROG}: error: {e}", file=sys.stderr)
        return 1
    except KeyboardInterrupt:
        print(f"{PROG}: error: interrupted", file=sys.stderr)
        return 130
    except Exception as e:
        logging.getLogger(__name__).debug("Unexpected failure", exc_info=True)
        print(f"{PROG}: error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
