"""
Monte Carlo estimators over independent replicates of the exponential field.

Replicate ``r`` of a run with seed ``s`` is the field ``cell_weight(s, r, x, y)``;
replicates are processed in batches under ``numba.prange`` and every estimator is a
pure function of its parameters and seed.
"""

import logging
import math
from dataclasses import dataclass, replace
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
from scipy import stats
from tqdm import tqdm

from ..airy1kernel import marginal_f
from ..constants import JACKKNIFE_BLOCKS, MAX_FIELD_SIZE, MC_BATCH_SIZE, MIN_COV_SAMPLES
from ..covariance import airy1_variance, hoeffding_cov
from ..errors import ArgumentError
from ..utils import chunk_ranges
from . import kernels
from .field import Point, check_seed, rescale_star, star_offset

logger = logging.getLogger(__name__)

KINDS = (
    "sup_transversal",
    "endpoint",
    "coalescence",
    "lower_tail_pp",
    "upper_tail_line",
    "interval_to_line",
)

TWO_THIRDS = 2.0 ** (2.0 / 3.0)


@dataclass(frozen=True)
class McSummary:
    """Result of a Monte Carlo estimator

    Attributes
    ----------
    estimand : str
        What was estimated
    mean : float
        The estimate
    stderr : float
        Sample standard deviation over ``sqrt(n_samples)`` for means and
        probabilities; delete-one-block jackknife for covariances
    n_samples : int
        Number of replicates
    seed : int
        Seed of the run
    N : int
        Scale parameter
    u : float
        The estimand's real parameter (separation or threshold)
    lo : Optional float
        Lower Wilson bound, for probabilities
    hi : Optional float
        Upper Wilson bound, for probabilities
    """

    estimand: str
    mean: float
    stderr: float
    n_samples: int
    seed: int
    N: int = 0
    u: float = 0.0
    lo: Optional[float] = None
    hi: Optional[float] = None


def _check_scale(N: int, bound: Optional[int] = MAX_FIELD_SIZE):
    if int(N) != N or not 1 <= N <= bound:
        raise ArgumentError("N", N, f"N must be an integer in [1, {bound}]")


def _check_samples(n_samples: int, minimum: int):
    if int(n_samples) != n_samples or n_samples < minimum:
        raise ArgumentError("n_samples", n_samples, f"need at least {minimum} samples")


def _run(batch: Callable[[int, int], np.ndarray], n_samples: int, label: str, progress: bool) -> np.ndarray:
    """Concatenates ``batch(first, count)`` over consecutive replicate ranges"""

    parts = []
    with tqdm(total=n_samples, desc=label, unit="sample", disable=not progress, leave=False) as bar:
        for first, count in chunk_ranges(n_samples, MC_BATCH_SIZE):
            parts.append(batch(first, count))
            bar.update(count)
    return np.concatenate(parts)


def sample_covariance(a: np.ndarray, b: np.ndarray) -> float:
    """Unbiased sample covariance"""

    n = a.size
    return float(np.dot(a - a.mean(), b - b.mean()) / (n - 1))


def jackknife_stderr(statistic: Callable[..., float], *columns: np.ndarray, blocks: Optional[int] = JACKKNIFE_BLOCKS) -> float:
    """Delete-one-block jackknife standard error of ``statistic(*columns)``

    The samples are cut into `blocks` contiguous blocks of near-equal size.
    """

    n = columns[0].size
    blocks = min(blocks, n)
    edges = np.linspace(0, n, blocks + 1).astype(int)
    estimates = np.empty(blocks)
    for b in range(blocks):
        keep = np.ones(n, dtype=bool)
        keep[edges[b]:edges[b + 1]] = False
        estimates[b] = statistic(*(column[keep] for column in columns))

    return float(math.sqrt((blocks - 1) / blocks * np.sum((estimates - estimates.mean()) ** 2)))


def wilson_interval(successes: int, n: int, confidence: Optional[float] = 0.95) -> Tuple[float, float]:
    """Two-sided Wilson score interval for a binomial proportion"""

    if n < 1:
        raise ArgumentError("n", n, "need at least one trial")
    if not 0 < confidence < 1:
        raise ArgumentError("confidence", confidence, "must lie in (0, 1)")

    z = stats.norm.ppf(0.5 + 0.5 * confidence)
    z2 = z * z
    p = successes / n
    center = (p + z2 / (2.0 * n)) / (1.0 + z2 / n)
    margin = z * math.sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / (1.0 + z2 / n)
    return max(0.0, center - margin), min(1.0, center + margin)


def _mean_summary(estimand: str, samples: np.ndarray, seed: int, N: int = 0, u: float = 0.0) -> McSummary:
    return McSummary(
        estimand=estimand,
        mean=float(samples.mean()),
        stderr=float(samples.std(ddof=1) / math.sqrt(samples.size)),
        n_samples=int(samples.size),
        seed=int(seed),
        N=int(N),
        u=float(u),
    )


def _star_pair(N: int, u: float, n_samples: int, seed: int, progress: bool) -> Tuple[np.ndarray, np.ndarray]:
    _check_scale(N)
    check_seed(seed)
    _check_samples(n_samples, MIN_COV_SAMPLES)

    k = star_offset(N, u)
    if u > 0 and k == 0:
        logger.warning("u=%g at N=%d is under one lattice cell; both passage times coincide", u, N)
    sources = np.array([0, k], dtype=np.int64)

    raw = _run(lambda first, count: kernels.line_batch(seed, first, count, sources, 2 * N), n_samples, "L*", progress)
    star = rescale_star(raw, N)
    return star[:, 0], star[:, 1]


def mc_cov_star(N: int, u: float, n_samples: int, seed: int, progress: Optional[bool] = False) -> McSummary:
    """``Cov(L*_N(u), L*_N(0))`` from paired passage times on a shared field

    Parameters
    ----------
    N : int
        Scale; the line is ``x + y = 2N``
    u : float
        Separation; the second start is ``(k, -k)`` with ``k = floor(u (2N)^{2/3})``
    n_samples : int
        Replicates, at least 100
    seed : int
        Seed in ``[0, 2^63)``

    Raises
    ------
    ArgumentError
        If a parameter is out of range
    """

    at_zero, at_u = _star_pair(N, u, n_samples, seed, progress)
    return McSummary(
        estimand="cov",
        mean=sample_covariance(at_zero, at_u),
        stderr=jackknife_stderr(sample_covariance, at_zero, at_u),
        n_samples=int(n_samples),
        seed=int(seed),
        N=int(N),
        u=float(u),
    )


def mc_variance_star(N: int, n_samples: int, seed: int, progress: Optional[bool] = False) -> McSummary:
    """``Var(L*_N(0))`` with the same estimator as :func:`mc_cov_star`"""

    at_zero, _ = _star_pair(N, 0.0, n_samples, seed, progress)
    return McSummary(
        estimand="variance",
        mean=sample_covariance(at_zero, at_zero),
        stderr=jackknife_stderr(sample_covariance, at_zero, at_zero),
        n_samples=int(n_samples),
        seed=int(seed),
        N=int(N),
    )


def sample_star(N: int, n_samples: int, seed: int, progress: Optional[bool] = False) -> np.ndarray:
    """Raw samples of ``L*_N(0)``"""

    _check_scale(N)
    check_seed(seed)
    _check_samples(n_samples, 1)
    raw = _run(lambda first, count: kernels.source_line_batch(seed, first, count, 0, 0, 2 * N), n_samples, "L*(0)", progress)
    return rescale_star(raw, N)


def mc_passage_mean(p: Point, q: Point, n_samples: int, seed: int, progress: Optional[bool] = False) -> McSummary:
    """Mean of ``L_{p, q}`` over replicates"""

    if not (p[0] <= q[0] and p[1] <= q[1]):
        raise ArgumentError("q", q, f"q must dominate p = {p} componentwise")
    check_seed(seed)
    _check_samples(n_samples, 2)

    samples = _run(lambda first, count: kernels.point_batch(seed, first, count, p[0], p[1], q[0], q[1]), n_samples, "L(p,q)", progress)
    return _mean_summary("passage_point", samples, seed)


def mc_line_mean(p: Point, line_index: int, n_samples: int, seed: int, progress: Optional[bool] = False) -> McSummary:
    """Mean of the point-to-line passage time from `p` to ``x + y = line_index``"""

    if line_index < p[0] + p[1]:
        raise ArgumentError("line_index", line_index, f"line is not reachable from {p}")
    check_seed(seed)
    _check_samples(n_samples, 2)

    samples = _run(
        lambda first, count: kernels.source_line_batch(seed, first, count, p[0], p[1], line_index),
        n_samples,
        "L(p,line)",
        progress,
    )
    return _mean_summary("passage_line", samples, seed)


def _exceedance_events(kind: str, N: int, value: float, seed: int, n_samples: int, progress: bool) -> np.ndarray:
    scale = (2.0 * N) ** (2.0 / 3.0)
    fluctuation = 2.0 ** (4.0 / 3.0) * N ** (1.0 / 3.0)
    steps = 2 * N

    if kind == "sup_transversal":
        tops = _run(lambda first, count: kernels.transversal_batch(seed, first, count, steps), n_samples, kind, progress)
        return tops >= value * scale

    if kind == "endpoint":
        ends = _run(lambda first, count: kernels.endpoint_batch(seed, first, count, steps), n_samples, kind, progress)
        return ends - N >= value * scale

    if kind == "coalescence":
        k = star_offset(N, value)
        if k < 1:
            raise ArgumentError("u", value, "second start must be at least one cell from the origin")
        meets = _run(lambda first, count: kernels.coalescence_batch(seed, first, count, k, steps), n_samples, kind, progress)
        return meets.astype(bool)

    if kind == "lower_tail_pp":
        times = _run(lambda first, count: kernels.point_batch(seed, first, count, 0, 0, N, N), n_samples, kind, progress)
        return times <= 4.0 * N - value * fluctuation

    if kind == "upper_tail_line":
        times = _run(lambda first, count: kernels.source_line_batch(seed, first, count, 0, 0, steps), n_samples, kind, progress)
        return times >= 4.0 * N + value * fluctuation

    half = int(math.floor(0.5 * scale))
    times = _run(lambda first, count: kernels.interval_batch(seed, first, count, -half, half, steps), n_samples, kind, progress)
    return times >= 4.0 * N + value * fluctuation


def mc_exceedance(kind: str, N: int, value: float, n_samples: int, seed: int, progress: Optional[bool] = False) -> McSummary:
    """Probability of a geodesic or passage-time event with its Wilson interval

    Parameters
    ----------
    kind : str
        One of

        * ``"sup_transversal"``: ``sup_t Gamma*(t) >= u (2N)^{2/3}``
        * ``"endpoint"``: ``Gamma*(2N) >= u (2N)^{2/3}``
        * ``"coalescence"``: the geodesics from ``(0, 0)`` and ``I(u)`` share a cell
        * ``"lower_tail_pp"``: ``L_{(0,0),(N,N)} <= 4N - x 2^{4/3} N^{1/3}``
        * ``"upper_tail_line"``: ``L_{(0,0),x+y=2N} >= 4N + s 2^{4/3} N^{1/3}``
        * ``"interval_to_line"``: the same event for the best start ``(k, -k)``,
          ``|k| <= (2N)^{2/3} / 2``
    N : int
        Scale
    value : float
        ``u``, ``x`` or ``s`` depending on `kind`
    n_samples : int
        Replicates, at least 2
    seed : int
        Seed in ``[0, 2^63)``

    Raises
    ------
    ArgumentError
        If `kind` is unknown or a parameter is out of range
    """

    if kind not in KINDS:
        raise ArgumentError("kind", kind, f"expected one of {', '.join(KINDS)}")
    _check_scale(N, MAX_FIELD_SIZE // 2 if kind in ("sup_transversal", "coalescence") else MAX_FIELD_SIZE)
    check_seed(seed)
    _check_samples(n_samples, 2)
    if kind in ("sup_transversal", "endpoint", "coalescence") and value < 0:
        raise ArgumentError("u", value, "u must be nonnegative")

    events = _exceedance_events(kind, N, value, seed, n_samples, progress)
    successes = int(events.sum())
    lo, hi = wilson_interval(successes, n_samples)
    summary = _mean_summary(kind, events.astype(float), seed, N, value)
    logger.info("%s at N=%d, value=%g: %d/%d", kind, N, value, successes, n_samples)
    return replace(summary, lo=lo, hi=hi)


def mc_cross_check(N: int, u: float, n_samples: int, seed: int, progress: Optional[bool] = False) -> Tuple[McSummary, float]:
    """Both sides of the covariance transfer from LPP to the Airy1 process

    Returns
    -------
    ``(lhs, rhs)`` where `lhs` is :func:`mc_cov_star` and
    ``rhs = 2^{2/3} Cov(A1(2^{-2/3} u), A1(0))``
    """

    lhs = mc_cov_star(N, u, n_samples, seed, progress)
    argument = u / TWO_THIRDS
    estimate = airy1_variance() if argument == 0 else hoeffding_cov(argument)
    return lhs, TWO_THIRDS * estimate.cov


def one_point_ks(N: int, n_samples: int, seed: int, progress: Optional[bool] = False, grid: Optional[Sequence[float]] = None):
    """Kolmogorov-Smirnov test of ``L*_N(0)`` against ``s -> f(2^{-1/3} s)``

    The limit distribution is tabulated on `grid` (default ``[-8, 8]`` in steps of 0.1)
    and interpolated linearly.

    Returns
    -------
    The :func:`scipy.stats.kstest` result
    """

    samples = sample_star(N, n_samples, seed, progress)
    nodes = np.linspace(-8.0, 8.0, 161) if grid is None else np.asarray(grid, dtype=float)
    table = np.array([marginal_f(s) for s in nodes])
    scale = 2.0 ** (-1.0 / 3.0)

    def cdf(s):
        return np.interp(scale * np.asarray(s), nodes, table, left=0.0, right=1.0)

    return stats.kstest(samples, cdf)
