"""
Entry point of the ``airy-decay`` command.

Exit codes: 0 on success, 1 when validation (or a numerical evaluation) fails, 2 on
bad arguments or an unwritable output path.
"""

import argparse
import logging
import sys
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numba

from .. import __version__
from ..constants import (
    DEFAULT_GRID,
    DEFAULT_NODES,
    DEFAULT_WINDOW,
    R1_CONSTANT,
    R2_CONSTANT,
    SCHEMA_VERSION,
    THREADS_ENV_VAR,
)
from ..errors import AiryDecayError, ArgumentError, DomainError, OutputError
from ..utils import thread_limit

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2

FORMATS = ("csv", "json")


@dataclass(frozen=True)
class RunConfig:
    """The fully resolved configuration of one invocation

    Attributes
    ----------
    command : str
        The subcommand, e.g. ``"cov-table"`` or ``"lpp cov"``
    params : Dict[str, Any]
        Every parameter after defaults were applied
    seed : Optional int
        The seed, for commands that draw random numbers
    output_path : Optional str
        Destination file; None writes to standard output
    format : str
        ``"csv"`` or ``"json"``
    """

    command: str
    params: Dict[str, Any] = field(default_factory=dict)
    seed: Optional[int] = None
    output_path: Optional[str] = None
    format: str = "csv"

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "version": __version__,
            "command": self.command,
            "params": dict(self.params),
            "seed": self.seed,
            "output_path": self.output_path,
            "format": self.format,
            "constants": {
                "r1_constant": R1_CONSTANT,
                "r2_constant": R2_CONSTANT,
                "nodes": DEFAULT_NODES,
            },
        }


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def _seed(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2 ** 63:
        raise argparse.ArgumentTypeError(f"seed must be in [0, 2^63), got {text}")
    return value


def _add_output_flags(parser: argparse.ArgumentParser):
    parser.add_argument("--out", default=None, help="output file (default: standard output)")
    parser.add_argument("--format", choices=FORMATS, default="csv", help="output format (default: csv)")


def build_parser() -> argparse.ArgumentParser:
    from . import acceptance, commands

    parser = argparse.ArgumentParser(
        prog="airy-decay",
        description="Airy1 two-point covariance from Fredholm determinants, and exponential LPP Monte Carlo",
        epilog=f"{THREADS_ENV_VAR} caps the number of threads.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    noise = parser.add_mutually_exclusive_group()
    noise.add_argument("-v", "--verbose", action="store_true", help="log at DEBUG level")
    noise.add_argument("-q", "--quiet", action="store_true", help="log warnings and errors only")
    subparsers = parser.add_subparsers(dest="command", required=True)

    cov = subparsers.add_parser("cov-table", help="tabulate Cov(A1(0), A1(u)) over a range of u")
    cov.add_argument("--u-min", type=float, default=0.5)
    cov.add_argument("--u-max", type=float, default=4.0)
    cov.add_argument("--u-step", type=float, default=0.5)
    cov.add_argument("--window-lo", type=float, default=DEFAULT_WINDOW[0])
    cov.add_argument("--window-hi", type=float, default=DEFAULT_WINDOW[1])
    cov.add_argument("--grid-n", type=_positive_int, default=DEFAULT_GRID)
    cov.add_argument("--nodes", type=_positive_int, default=DEFAULT_NODES, help="Nystrom nodes per block")
    _add_output_flags(cov)
    cov.set_defaults(handler=commands.cmd_cov_table)

    lpp = subparsers.add_parser("lpp", help="Monte Carlo estimators for exponential last passage percolation")
    lpp.add_argument("estimand", choices=sorted(commands.ESTIMANDS))
    lpp.add_argument("--N", dest="N", type=_positive_int, default=400)
    lpp.add_argument("--u", type=float, default=1.0, help="separation or threshold, depending on the estimand")
    lpp.add_argument("--samples", type=_positive_int, default=20000)
    lpp.add_argument("--seed", type=_seed, default=0)
    lpp.add_argument("--progress", action="store_true", help="show a progress bar")
    _add_output_flags(lpp)
    lpp.set_defaults(handler=commands.cmd_lpp)

    validate = subparsers.add_parser("validate", help="run the acceptance suite")
    validate.add_argument("--quick", action="store_true", help="skip the slow Monte Carlo criteria")
    validate.add_argument("--seed", type=_seed, default=acceptance.VALIDATION_SEED)
    validate.add_argument("--out", default=None, help="write the JSON report here")
    validate.set_defaults(handler=acceptance.cmd_validate)

    return parser


def configure_logging(verbose: bool = False, quiet: bool = False):
    level = logging.DEBUG if verbose else logging.WARNING if quiet else logging.INFO
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)-8s %(name)s: %(message)s", stream=sys.stderr)


def _apply_thread_limit():
    threads = min(thread_limit(), numba.config.NUMBA_NUM_THREADS)
    numba.set_num_threads(threads)
    logger.debug("using %d threads", threads)


def main(argv: Optional[List[str]] = None) -> int:
    """Runs the command line and returns the exit code"""

    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.verbose, args.quiet)

    try:
        _apply_thread_limit()
        return args.handler(args)
    except (ArgumentError, DomainError) as e:
        logger.error("%s", e)
        return EXIT_USAGE
    except OutputError as e:
        logger.error("%s", e)
        return EXIT_USAGE
    except AiryDecayError as e:
        logger.error("%s", e)
        return EXIT_FAILED
