"""
The acceptance suite run by ``airy-decay validate``.

Each criterion is a function returning ``(passed, detail, measured)`` registered
with :func:`criterion`. Criteria marked slow are skipped by ``--quick``.
"""

import argparse
import functools
import itertools
import json
import logging
import math
import time
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from ..airy1kernel import KernelSpec, excess_via_factorization, joint_F, marginal_f, trace_K12K21, trace_asymptotic
from ..covariance import bound_envelope_check, cov_sweep, decay_exponent_fit, fit_envelope_constants
from ..errors import AiryDecayError
from ..lpp import mc_cross_check, mc_exceedance, mc_passage_mean, one_point_ks, passage_point, sample_field
from ..quad import BlockKernel, fredholm_det_block, fredholm_det_scalar, gauss_legendre
from .app import EXIT_FAILED, EXIT_OK
from .commands import CROSS_CHECK_TOLERANCE, open_output
from .report import CriterionResult, Report, Status

logger = logging.getLogger(__name__)

VALIDATION_SEED = 20210601

GOE_ANCHOR = 0.8319
DECAY_U = (3.0, 3.5, 4.0, 4.5)
ENVELOPE_U = (1.5, 2.0, 2.5)
GRID_U = (0.5, 1.0, 2.0)
GRID_S = tuple(range(-4, 4))

Outcome = Tuple[bool, str, Dict]


@dataclass(frozen=True)
class Criterion:
    number: int
    title: str
    slow: bool
    check: Callable[[int], Outcome]


CRITERIA: List[Criterion] = []


def criterion(number: int, title: str, slow: Optional[bool] = False):
    """Registers a check under `number`"""

    def decorator(func: Callable[[int], Outcome]) -> Callable[[int], Outcome]:
        CRITERIA.append(Criterion(number, title, slow, func))
        return func

    return decorator


def brute_force_passage(weights: np.ndarray, p: Tuple[int, int], q: Tuple[int, int]) -> float:
    """Maximum over every up-right path from `p` to `q`, by enumeration"""

    dx, dy = q[0] - p[0], q[1] - p[1]
    best = -math.inf
    for rights in itertools.combinations(range(dx + dy), dx):
        x, y = p
        total = weights[x, y]
        for step in range(dx + dy):
            if step in rights:
                x += 1
            else:
                y += 1
            total += weights[x, y]
        best = max(best, total)
    return best


def _decreasing(values: List[float], errors: List[float]) -> bool:
    return all(a - b > 2.0 * math.hypot(ea, eb) for a, b, ea, eb in zip(values, values[1:], errors, errors[1:]))


@criterion(1, "GOE anchor f(0)")
def check_goe_anchor(seed: int) -> Outcome:
    value = marginal_f(0.0)
    return abs(value - GOE_ANCHOR) <= 5e-4, f"f(0) = {value:.6f}", {"f0": value}


@criterion(2, "Fredholm engine oracles")
def check_fredholm_engine(seed: int) -> Outcome:
    rule = gauss_legendre(20, 0.0, 1.0)
    rank_one = fredholm_det_scalar(lambda x, y: 1.5 * x * y, rule)

    def diagonal(x, y):
        return 0.3 * np.exp(-(x + y))

    def zero(x, y):
        return np.zeros(np.broadcast(x, y).shape)

    block = BlockKernel(((diagonal, zero), (zero, diagonal)), (0.0, 1.0), (0.0, 1.0))
    factorised = fredholm_det_block(block, rule, rule) - fredholm_det_scalar(diagonal, rule) ** 2

    spec = KernelSpec(u=1.0, s1=0.0, s2=0.5)
    conjugation = joint_F(spec).F - joint_F(KernelSpec(u=1.0, s1=0.0, s2=0.5, conjugated=False)).F

    passed = abs(rank_one - 0.5) <= 1e-10 and abs(factorised) <= 1e-12 and abs(conjugation) <= 1e-10
    measured = {"rank_one": rank_one, "factorisation_gap": factorised, "conjugation_gap": conjugation}
    return passed, f"rank-one det {rank_one:.12f}, gaps {factorised:.1e} / {conjugation:.1e}", measured


@criterion(3, "FKG positivity of the excess")
def check_fkg(seed: int) -> Outcome:
    worst = math.inf
    for u, s1, s2 in itertools.product(GRID_U, GRID_S, GRID_S):
        result = joint_F(KernelSpec(u=u, s1=s1, s2=s2))
        worst = min(worst, result.excess_E + result.err)
    return worst >= 0, f"min(E + err) = {worst:.3e}", {"min_margin": worst}


@criterion(4, "Factorisation identity")
def check_factorisation(seed: int) -> Outcome:
    worst = 0.0
    for u, s1, s2 in itertools.product(GRID_U, GRID_S, GRID_S):
        spec = KernelSpec(u=u, s1=s1, s2=s2)
        result = joint_F(spec)
        gap = abs(result.excess_E - excess_via_factorization(spec))
        worst = max(worst, gap / (2.0 * result.err))
    return worst <= 1.0, f"max gap / (2 err) = {worst:.3f}", {"max_ratio": worst}


@criterion(5, "Trace asymptotics")
def check_trace(seed: int) -> Outcome:
    gaps = []
    for u in (3.0, 4.0, 5.0, 6.0):
        spec = KernelSpec(u=u, s1=1.0, s2=1.0)
        leading = trace_asymptotic(u, 1.0, 1.0)
        gaps.append(abs(trace_K12K21(spec) / leading.value - 1.0))

    monotone = all(a > b for a, b in zip(gaps, gaps[1:]))
    return monotone and gaps[-1] <= 0.6, "gaps " + ", ".join(f"{g:.3f}" for g in gaps), {"gaps": gaps}


@functools.lru_cache(maxsize=1)
def _covariances():
    u_values = sorted(set(DECAY_U) | set(ENVELOPE_U))
    return {e.u: e for e in cov_sweep(u_values)}


@criterion(6, "Decay exponent")
def check_decay(seed: int) -> Outcome:
    table = _covariances()
    fit = decay_exponent_fit(DECAY_U, [table[u] for u in DECAY_U])
    super_exponential = all(
        table[b].log_cov / table[a].log_cov >= (b / a) ** 2 for a, b in itertools.combinations(DECAY_U, 2)
    )
    passed = 2.5 <= fit.delta <= 3.5 and super_exponential
    return passed, f"delta = {fit.delta:.3f}", {"delta": fit.delta, "log_cov": [table[u].log_cov for u in DECAY_U]}


@criterion(7, "Envelope constants")
def check_envelope(seed: int) -> Outcome:
    table = _covariances()
    log_covs = [table[u].log_cov for u in ENVELOPE_U]
    c, c_prime = fit_envelope_constants(ENVELOPE_U, log_covs)
    holds = all(bound_envelope_check(u, None, c, c_prime, log_cov=l) for u, l in zip(ENVELOPE_U, log_covs))
    return holds and c <= 10 and c_prime <= 10, f"c = {c:.3f}, c' = {c_prime:.3f}", {"c": c, "c_prime": c_prime}


@criterion(8, "LPP exactness")
def check_lpp_exactness(seed: int) -> Outcome:
    n_samples = 10 ** 6
    summary = mc_passage_mean((0, 0), (1, 1), n_samples, seed)
    sigma = math.sqrt(3.25 / n_samples)
    mean_ok = abs(summary.mean - 3.5) <= 3.0 * sigma

    mismatches = 0
    for offset in range(100):
        field = sample_field(4, seed + offset)
        if passage_point(field, (0, 0), (3, 3)) != brute_force_passage(field.weights, (0, 0), (3, 3)):
            mismatches += 1

    detail = f"mean {summary.mean:.5f} (3 sigma = {3 * sigma:.5f}), {mismatches} DP/enumeration mismatches"
    return mean_ok and mismatches == 0, detail, {"mean": summary.mean, "mismatches": mismatches}


@criterion(9, "One-point transfer")
def check_one_point(seed: int) -> Outcome:
    result = one_point_ks(1000, 20000, seed)
    return result.statistic <= 0.05, f"KS distance {result.statistic:.4f}", {"ks": float(result.statistic)}


@criterion(10, "Covariance transfer", slow=True)
def check_cross(seed: int) -> Outcome:
    lhs, rhs = mc_cross_check(800, 1.0, 50000, seed)
    tolerance = max(3.0 * lhs.stderr, CROSS_CHECK_TOLERANCE * abs(rhs))
    detail = f"lhs {lhs.mean:.4f} +- {lhs.stderr:.4f}, rhs {rhs:.4f}"
    return abs(lhs.mean - rhs) <= tolerance, detail, {"lhs": lhs.mean, "stderr": lhs.stderr, "rhs": rhs}


def _trend(kind: str, N: int, values: Tuple[float, ...], n_samples: int, seed: int):
    summaries = [mc_exceedance(kind, N, v, n_samples, seed) for v in values]
    means = [s.mean for s in summaries]
    return _decreasing(means, [s.stderr for s in summaries]), means


@criterion(11, "Geodesic localisation trends", slow=True)
def check_localisation(seed: int) -> Outcome:
    transversal_ok, transversal = _trend("sup_transversal", 400, (0.6, 0.9, 1.2), 20000, seed)
    coalescence_ok, coalescence = _trend("coalescence", 400, (0.5, 1.0, 1.5), 20000, seed)
    detail = f"sup {transversal}, coalescence {coalescence}"
    return transversal_ok and coalescence_ok, detail, {"sup_transversal": transversal, "coalescence": coalescence}


@criterion(12, "Tail shapes", slow=True)
def check_tails(seed: int) -> Outcome:
    lower_ok, lower = _trend("lower_tail_pp", 500, (0.5, 1.0, 1.5), 20000, seed)
    line_ok, line = _trend("upper_tail_line", 500, (-0.5, 0.0, 0.5), 20000, seed)
    interval_ok, interval = _trend("interval_to_line", 500, (0.0, 0.5, 1.0), 20000, seed)
    detail = f"lower {lower}, line {line}, interval {interval}"
    return lower_ok and line_ok and interval_ok, detail, {"lower": lower, "line": line, "interval": interval}


def run_acceptance(quick: Optional[bool] = False, seed: Optional[int] = VALIDATION_SEED) -> Report:
    """Runs every registered criterion once, in order"""

    report = Report(quick=quick)
    for item in sorted(CRITERIA, key=lambda c: c.number):
        if quick and item.slow:
            report.add_result(CriterionResult(item.number, item.title, Status.skipped, "skipped by --quick", slow=True))
            continue

        start = time.perf_counter()
        try:
            passed, detail, measured = item.check(seed)
            status = Status.passed if passed else Status.failed
        except AiryDecayError as e:
            status, detail, measured = Status.failed, f"{e.__class__.__name__}: {e}", {}

        result = CriterionResult(item.number, item.title, status, detail, measured, time.perf_counter() - start, item.slow)
        logger.info("%s", result)
        report.add_result(result)

    return report


def cmd_validate(args: argparse.Namespace) -> int:
    report = run_acceptance(args.quick, args.seed)
    for result in report:
        print(result)
    print(report.summary())

    if args.out is not None:
        with open_output(args.out) as stream:
            json.dump(report.to_dict(), stream, indent=2)
            stream.write("\n")

    return EXIT_OK if report.passed else EXIT_FAILED
