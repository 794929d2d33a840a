import argparse
import contextlib
import json
import logging
import math
import sys
from dataclasses import asdict
from typing import Any, Dict, Iterable, List, Mapping

from ..covariance import CovarianceEstimate, cov_sweep
from ..errors import ArgumentError, OutputError
from ..lpp import mc_cov_star, mc_cross_check, mc_exceedance, mc_variance_star
from .app import EXIT_OK, RunConfig
from .schema import COV_TABLE, LPP_CROSS_TABLE, LPP_INTERVAL_TABLE, LPP_TABLE, Table

logger = logging.getLogger(__name__)

# command-line estimand -> mc_exceedance kind
EXCEEDANCE_KINDS = {
    "sup_transversal": "sup_transversal",
    "endpoint": "endpoint",
    "coalesce": "coalescence",
    "lower_tail": "lower_tail_pp",
    "upper_tail": "upper_tail_line",
    "interval_tail": "interval_to_line",
}

ESTIMANDS = ("cov", "variance", "cross_check", *EXCEEDANCE_KINDS)

CROSS_CHECK_TOLERANCE = 0.25


@contextlib.contextmanager
def open_output(path: str):
    if path is None:
        yield sys.stdout
        return
    try:
        with open(path, "w", newline="") as stream:
            yield stream
    except OSError as e:
        raise OutputError(path, e) from e


def write_results(table: Table, records: Iterable[Mapping[str, Any]], config: RunConfig):
    """Writes `records` in the configured format along with the resolved config

    JSON output embeds the config; CSV output to a file gets a sidecar
    ``<out>.config.json``.

    Raises
    ------
    OutputError
        If a file cannot be written
    """

    records = list(records)
    if config.format == "json":
        payload = table.to_json(records)
        payload["config"] = config.to_dict()
        with open_output(config.output_path) as stream:
            json.dump(payload, stream, indent=2)
            stream.write("\n")
        return

    with open_output(config.output_path) as stream:
        table.write_csv(records, stream)
    if config.output_path is not None:
        with open_output(config.output_path + ".config.json") as stream:
            json.dump(config.to_dict(), stream, indent=2)
            stream.write("\n")
    logger.info("wrote %d rows of %s", len(records), table.name)


def sweep_values(u_min: float, u_max: float, u_step: float) -> List[float]:
    """The grid ``u_min, u_min + u_step, ...`` up to `u_max` inclusive

    Raises
    ------
    ArgumentError
        If the step is not positive or the range is inverted
    """

    if not u_step > 0:
        raise ArgumentError("u_step", u_step, "step must be positive")
    if not u_min <= u_max:
        raise ArgumentError("u_max", u_max, f"must not be below u_min = {u_min}")

    count = int(math.floor((u_max - u_min) / u_step + 1e-9)) + 1
    return [round(u_min + i * u_step, 12) for i in range(count)]


def covariance_record(estimate: CovarianceEstimate) -> Dict[str, Any]:
    return {
        "u": estimate.u,
        "log_cov": estimate.log_cov,
        "cov_sign": estimate.sign,
        "window_alpha": estimate.alpha,
        "window_beta": estimate.beta,
        "quad_err": estimate.quad_err,
        "tail_budget": estimate.tail_budget,
        "regime": estimate.regime,
    }


def cmd_cov_table(args: argparse.Namespace) -> int:
    u_values = sweep_values(args.u_min, args.u_max, args.u_step)
    window = (args.window_lo, args.window_hi)
    config = RunConfig(
        command="cov-table",
        params={
            "u_min": args.u_min,
            "u_max": args.u_max,
            "u_step": args.u_step,
            "window": list(window),
            "grid_n": args.grid_n,
            "nodes": args.nodes,
        },
        output_path=args.out,
        format=args.format,
    )

    estimates = cov_sweep(u_values, window, args.grid_n, args.nodes)
    write_results(COV_TABLE, map(covariance_record, estimates), config)
    return EXIT_OK


def cmd_lpp(args: argparse.Namespace) -> int:
    config = RunConfig(
        command=f"lpp {args.estimand}",
        params={"N": args.N, "u": args.u, "samples": args.samples},
        seed=args.seed,
        output_path=args.out,
        format=args.format,
    )

    if args.estimand == "cov":
        summary = mc_cov_star(args.N, args.u, args.samples, args.seed, args.progress)
        write_results(LPP_TABLE, [asdict(summary)], config)
    elif args.estimand == "variance":
        summary = mc_variance_star(args.N, args.samples, args.seed, args.progress)
        write_results(LPP_TABLE, [asdict(summary)], config)
    elif args.estimand == "cross_check":
        lhs, rhs = mc_cross_check(args.N, args.u, args.samples, args.seed, args.progress)
        tolerance = max(3.0 * lhs.stderr, CROSS_CHECK_TOLERANCE * abs(rhs))
        record = {**asdict(lhs), "estimand": "cross_check", "rhs": rhs, "within_tolerance": abs(lhs.mean - rhs) <= tolerance}
        write_results(LPP_CROSS_TABLE, [record], config)
    else:
        kind = EXCEEDANCE_KINDS[args.estimand]
        summary = mc_exceedance(kind, args.N, args.u, args.samples, args.seed, args.progress)
        write_results(LPP_INTERVAL_TABLE, [{**asdict(summary), "estimand": args.estimand}], config)

    return EXIT_OK
