#!/usr/bin/env python3
# Copyright 2025 Canonical Ltd.
# See LICENSE file for licensing details.

"""Command line entry point of the bridge studies."""

import argparse
import json
import logging
import re
import sys
from collections.abc import Sequence
from pathlib import Path
from typing import Any, NoReturn

from constants import FIGURE_SIGMA_OBS, PROPOSAL_KINDS
from core.config import StudyConfig, load_config
from core.errors import BridgeError, StudyConfigError
from diffusions.catalog import CATALOG
from managers.output import OutputManager
from managers.study import dt_robustness_study, emit_endpoints, emit_paths, run_study
from utils.logging import configure_logging

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2

DEFAULT_OUT = Path("out")


def _flags_in(message: str) -> list[str]:
    """Flag names an argparse error message refers to."""
    if match := re.match(r"argument ([^:]+):", message):
        return [match.group(1).split("/")[0].lstrip("-")]
    if message.startswith("unrecognized arguments:"):
        tokens = message.split(":", 1)[1].split()
        return [token.lstrip("-") for token in tokens if token.startswith("-")] or ["command-line"]
    return ["command-line"]


class StudyArgumentParser(argparse.ArgumentParser):
    """Argument parser raising usage errors as configuration errors."""

    def error(self, message: str) -> NoReturn:
        """Raise instead of printing the usage and exiting."""
        raise StudyConfigError(f"{self.prog}: {message}", invalid=_flags_in(message))


def build_parser() -> argparse.ArgumentParser:
    """Parser with one sub-command per verb.

    Raises:
        StudyConfigError: from ``parse_args`` on unknown flags or invalid values.
    """
    parser = StudyArgumentParser(
        prog="bridges",
        description="Importance sampling of conditioned diffusion bridges",
    )
    parser.add_argument(
        "--log-level",
        default="INFO",
        choices=["CRITICAL", "ERROR", "WARNING", "INFO", "DEBUG"],
    )
    verbs = parser.add_subparsers(dest="verb", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="YAML or JSON file mirroring the flags")
    common.add_argument("--model", help="catalog model name")
    common.add_argument("--T", dest="T", type=float, action="append", help="observation time")
    common.add_argument("--dt", type=float, action="append", help="Euler-Maruyama step")
    common.add_argument("--M", dest="M", type=int, help="endpoint cloud size")
    common.add_argument("--sigma-obs", type=float, help="observation noise variance")
    common.add_argument("--seed", type=int)
    common.add_argument("--scheme", help="observation selection scheme")
    common.add_argument("--out", type=Path, help="output directory")
    common.add_argument("--workers", type=int)

    sampling = argparse.ArgumentParser(add_help=False)
    sampling.add_argument(
        "--proposal", action="append", choices=PROPOSAL_KINDS, help="repeatable"
    )
    sampling.add_argument("--N", dest="N", type=int, help="paths per ensemble")
    sampling.add_argument("--reps", type=int, help="timing repetitions")
    sampling.add_argument(
        "--paper-scale",
        "--full-scale",
        dest="paper_scale",
        action="store_true",
        default=None,
        help="a million paths and ten repetitions",
    )

    verbs.add_parser("endpoints", parents=[common], help="simulate endpoint clouds")
    verbs.add_parser("study", parents=[common, sampling], help="run a simulation study")
    verbs.add_parser("dt-study", parents=[common, sampling], help="step-size robustness study")
    paths = verbs.add_parser("paths", parents=[common, sampling], help="write weighted paths")
    paths.add_argument("--n-paths", type=int, help="number of paths to write")
    verbs.add_parser("list-models", help="print the model catalog")
    return parser


def overrides_from(args: argparse.Namespace) -> dict[str, Any]:
    """Config overrides keyed by flag name; unset flags are left out."""
    keys = {
        "model": "model",
        "T": "T",
        "dt": "dt",
        "M": "M",
        "sigma_obs": "sigma-obs",
        "seed": "seed",
        "scheme": "scheme",
        "out": "out",
        "workers": "workers",
        "proposal": "proposal",
        "N": "N",
        "reps": "reps",
        "paper_scale": "paper-scale",
        "n_paths": "n-paths",
    }
    values = vars(args)
    return {flag: values[dest] for dest, flag in keys.items() if values.get(dest) is not None}


def list_models() -> list[dict[str, Any]]:
    """Catalog entries as JSON-ready records."""
    return [
        {
            "name": entry.name,
            "dim": entry.factory.dim,
            "theta": list(entry.theta),
            "x0": list(entry.x0),
            "dt": entry.dt,
            "T": list(entry.horizons),
            "scheme": entry.scheme,
            "analytic_oracle": entry.has_analytic_oracle,
            "description": entry.description,
        }
        for entry in CATALOG.values()
    ]


def run(args: argparse.Namespace) -> None:
    """Dispatch a parsed command line."""
    if args.verb == "list-models":
        json.dump(list_models(), sys.stdout, indent=2)
        sys.stdout.write("\n")
        return

    config: StudyConfig = load_config(args.config, overrides_from(args))
    if args.verb == "paths" and "sigma_obs" not in config.model_fields_set:
        config = config.model_copy(update={"sigma_obs": FIGURE_SIGMA_OBS})
    output = OutputManager(config.out or DEFAULT_OUT)

    if args.verb == "endpoints":
        emit_endpoints(config, output)
    elif args.verb == "study":
        run_study(config, output)
    elif args.verb == "dt-study":
        dt_robustness_study(config, output)
    elif args.verb == "paths":
        emit_paths(config, output)
    logger.info(f"Wrote {args.verb} output to {output.out_dir}")


def main(argv: Sequence[str] | None = None) -> int:
    """Run the command line and return the process exit code."""
    try:
        args = build_parser().parse_args(argv)
    except StudyConfigError as err:
        print(json.dumps(err.to_dict(), sort_keys=True), file=sys.stderr)
        return EXIT_CONFIG
    configure_logging(args.log_level)
    try:
        run(args)
    except StudyConfigError as err:
        logger.error(f"Invalid configuration: {err}")
        print(json.dumps(err.to_dict(), sort_keys=True), file=sys.stderr)
        return EXIT_CONFIG
    except BridgeError as err:
        logger.error(f"Study failed: {err}")
        print(json.dumps(err.to_dict(), sort_keys=True), file=sys.stderr)
        return EXIT_FAILURE
    except Exception as err:
        logger.exception("Unexpected failure")
        print(json.dumps({"error": type(err).__name__, "message": str(err)}), file=sys.stderr)
        return EXIT_FAILURE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
