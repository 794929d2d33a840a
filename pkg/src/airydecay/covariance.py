"""
Two-point covariance of the Airy1 process from Hoeffding's identity

    Cov(A(0), A(u)) = int int f(s1) f(s2) E(u; s1, s2) ds1 ds2

evaluated in the excess form (never as a difference of CDFs), plus the
compact-window lower bound and the decay diagnostics.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np

from .airy1kernel import ExcessSurface, marginal_f
from .constants import (
    ASYMPTOTIC_REGIME_U,
    COARSE_GRID_GAP,
    DEFAULT_GRID,
    DEFAULT_NODES,
    DEFAULT_WINDOW,
    MAX_KERNEL_U,
    MAX_THRESHOLD,
    MIN_DECAY_FIT_U,
    MIN_GRID,
    MIN_KERNEL_U,
    MIN_LOWER_WINDOW_U,
    MIN_THRESHOLD,
    R1_CONSTANT,
    R2_CONSTANT,
    SKIP_MARGINAL_PRODUCT,
)
from .errors import ArgumentError, DomainError, UnreliableEstimateError
from .quad import QuadratureRule, composite_gauss_legendre, gauss_legendre
from .utils import log_add, thread_limit

logger = logging.getLogger(__name__)

REGIMES = ("determinant", "asymptotic", "comonotone")


@dataclass(frozen=True)
class CovarianceEstimate:
    """A covariance value with its error budgets

    Attributes
    ----------
    u : float
        Time separation (0 for the variance)
    log_cov : float
        ``log|cov|``; ``-inf`` when the value is 0
    sign : int
        Sign of the covariance (-1, 0 or +1)
    window : Tuple[float, float]
        Threshold window the integral was taken over
    log_tail_budget : float
        Logarithm of the bound on the mass discarded outside the window
    log_quad_err : float
        Logarithm of the node-halving quadrature error
    regime : str
        ``"determinant"``, ``"asymptotic"`` (u > 3, leading trace term on the nonnegative quadrant) or ``"comonotone"``
    grid_n : int
        Nodes per axis
    reliable : bool
        False when the node-halving gap exceeds 10% of the value
    restricted : bool
        True for the compact lower-bound window
    """

    u: float
    log_cov: float
    sign: int
    window: Tuple[float, float]
    log_tail_budget: float
    log_quad_err: float
    regime: str
    grid_n: int
    reliable: bool
    restricted: bool = False

    @property
    def cov(self) -> float:
        return self.sign * math.exp(self.log_cov) if self.sign else 0.0

    @property
    def tail_budget(self) -> float:
        return math.exp(self.log_tail_budget)

    @property
    def quad_err(self) -> float:
        return math.exp(self.log_quad_err)

    @property
    def alpha(self) -> float:
        return self.window[0]

    @property
    def beta(self) -> float:
        return self.window[1]


@dataclass(frozen=True)
class DecayFit:
    """Least-squares fit of ``ln(-ln cov)`` against ``ln u``"""

    delta: float
    intercept: float
    residuals: Tuple[float, ...]
    u_values: Tuple[float, ...]


def _log(value: float) -> float:
    return math.log(value) if value > 0 else -math.inf


def _axis_rule(lower: float, upper: float, nodes: float) -> QuadratureRule:
    panels = max(1, math.ceil(upper - lower - 1e-12))
    per_panel = max(2, math.ceil(nodes / panels))
    return composite_gauss_legendre(np.linspace(lower, upper, panels + 1), per_panel)


def _check_window(s_window: Tuple[float, float], grid_n: int):
    lower, upper = s_window
    if not lower < upper:
        raise ArgumentError("s_window", s_window, "lower must be below upper")
    if lower < MIN_THRESHOLD or upper > MAX_THRESHOLD:
        raise ArgumentError("s_window", s_window, f"window must lie inside [{MIN_THRESHOLD}, {MAX_THRESHOLD}]")
    if grid_n < MIN_GRID:
        raise ArgumentError("grid_n", grid_n, f"need at least {MIN_GRID} nodes per axis")


class _Integrand:
    """``f(s1) f(s2) E(s1, s2)`` with cached marginals"""

    def __init__(self, marginal: Callable[[float], float], excess: Callable[[float, float], float]):
        self._marginal = marginal
        self._excess = excess
        self._cache = {}

    def marginal(self, s: float) -> float:
        s = float(s)
        if s not in self._cache:
            self._cache[s] = self._marginal(s)
        return self._cache[s]

    def __call__(self, s1: float, s2: float) -> Tuple[float, float]:
        """Returns the integrand value and, for skipped pairs, the Hoeffding mass bound"""

        f1, f2 = self.marginal(s1), self.marginal(s2)
        if f1 * f2 < SKIP_MARGINAL_PRODUCT:
            return 0.0, min(f1, f2)
        return f1 * f2 * self._excess(float(s1), float(s2)), 0.0


def _integrate_tensor(integrand: _Integrand, lower: float, upper: float, nodes: int) -> Tuple[float, float]:
    rule = _axis_rule(lower, upper, nodes)
    total = skipped = 0.0
    for s1, w1 in zip(rule.nodes, rule.weights):
        for s2, w2 in zip(rule.nodes, rule.weights):
            value, mass = integrand(s1, s2)
            total += w1 * w2 * value
            skipped += w1 * w2 * mass
    return total, skipped


def _integrate_split(integrand: _Integrand, lower: float, upper: float, nodes: int) -> Tuple[float, float]:
    # two triangles meeting on s1 = s2, so a kink on the diagonal sits on a panel edge
    density = nodes / (upper - lower)
    outer = _axis_rule(lower, upper, nodes)
    total = skipped = 0.0
    for a, wa in zip(outer.nodes, outer.weights):
        inner = _axis_rule(lower, a, density * (a - lower))
        for b, wb in zip(inner.nodes, inner.weights):
            below, mass_below = integrand(a, b)
            above, mass_above = integrand(b, a)
            total += wa * wb * (below + above)
            skipped += wa * wb * (mass_below + mass_above)
    return total, skipped


def _tail_envelope(lower: float, upper: float) -> float:
    """Bound on the Hoeffding mass outside ``[lower, upper]^2`` from the one-point tails

    Uses ``0 <= F - f1 f2 <= min(f1, f2, 1 - f1, 1 - f2)``.
    """

    width = upper - lower
    left_mass = left_moment = right_mass = right_moment = 0.0

    if lower > MIN_THRESHOLD:
        rule = gauss_legendre(32, MIN_THRESHOLD, lower)
        values = np.array([marginal_f(s) for s in rule.nodes])
        left_mass = rule.integrate(values)
        left_moment = rule.integrate(values * (lower - rule.nodes))
    if upper < MAX_THRESHOLD:
        rule = gauss_legendre(32, upper, MAX_THRESHOLD)
        values = np.array([1.0 - marginal_f(s) for s in rule.nodes])
        right_mass = rule.integrate(values)
        right_moment = rule.integrate(values * (rule.nodes - upper))

    return 2.0 * (left_moment + right_moment + width * (left_mass + right_mass) + left_mass * right_mass)


def _estimate(
    u: float,
    fine: float,
    coarse: float,
    tail: float,
    window: Tuple[float, float],
    regime: str,
    grid_n: int,
    restricted: bool = False,
) -> CovarianceEstimate:
    quad_err = abs(fine - coarse)
    reliable = quad_err <= COARSE_GRID_GAP * abs(fine)
    if not reliable:
        logger.warning("covariance at u=%g is flagged: node-halving gap %.3g vs value %.3g", u, quad_err, fine)

    return CovarianceEstimate(
        u=u,
        log_cov=_log(abs(fine)),
        sign=int(np.sign(fine)),
        window=window,
        log_tail_budget=_log(tail),
        log_quad_err=_log(quad_err),
        regime=regime,
        grid_n=grid_n,
        reliable=reliable,
        restricted=restricted,
    )


def _integrate_below_quadrant(integrand: _Integrand, lower: float, upper: float, nodes: int) -> Tuple[float, float]:
    """Tensor rule over the part of ``[lower, upper]^2`` where ``min(s1, s2) < 0``"""

    width = upper - lower
    top = min(upper, 0.0)
    negative = _axis_rule(lower, top, nodes * (top - lower) / width)
    positive = _axis_rule(0.0, upper, nodes * upper / width) if upper > 0 else None
    total = skipped = 0.0
    for s1, w1 in zip(negative.nodes, negative.weights):
        for s2, w2 in zip(negative.nodes, negative.weights):
            value, mass = integrand(s1, s2)
            total += w1 * w2 * value
            skipped += w1 * w2 * mass
        if positive is None:
            continue
        for s2, w2 in zip(positive.nodes, positive.weights):
            below, mass_below = integrand(s1, s2)
            above, mass_above = integrand(s2, s1)
            total += w1 * w2 * (below + above)
            skipped += w1 * w2 * (mass_below + mass_above)
    return total, skipped


def _asymptotic_cov(
    u: float,
    s_window: Tuple[float, float],
    grid_n: int,
    n: int,
    constants: Tuple[float, float],
) -> CovarianceEstimate:
    """Leading trace term on ``[0, upper]^2`` plus the excess surface on the rest of the window"""

    lower, upper = s_window
    start = max(lower, 0.0)
    log_prefactor = -(4.0 / 3.0) * u ** 3 - math.log(16.0 * math.pi * u ** 4)

    def moment(nodes: int) -> float:
        rule = _axis_rule(start, upper, nodes)
        values = np.array([marginal_f(s, n) for s in rule.nodes])
        return rule.integrate(values * rule.nodes * np.exp(-2.0 * u * rule.nodes))

    log_budgets = []
    log_quadrant = log_quadrant_err = -math.inf
    if upper > 0:
        share = grid_n * (upper - start) / (upper - lower)
        first, second = moment(max(MIN_GRID, share)), moment(max(MIN_GRID // 2, share / 2))
        log_quadrant = log_prefactor + 2.0 * math.log(first)
        log_quadrant_err = log_quadrant + _log(abs(1.0 - (second / first) ** 2))

        c2, c = constants
        log_budgets.append(math.log(c2) - 2.0 * math.log(u) - (4.0 / 3.0) * u ** 3 - math.log(u * (1.0 + 4.0 * u)))
        log_budgets.append(math.log(c) - 6.0 * math.log(u) - (8.0 / 3.0) * u ** 3 - 2.0 * math.log(4.0 * u))
        log_budgets.append(log_prefactor + 2.0 * math.log(first) - 0.25 * math.log(u))

    below_fine = below_coarse = skipped = 0.0
    if lower < 0:
        surface = ExcessSurface(u, n)
        integrand = _Integrand(surface.marginal, surface.excess)
        below_fine, skipped = _integrate_below_quadrant(integrand, lower, upper, grid_n)
        below_coarse, _ = _integrate_below_quadrant(integrand, lower, upper, grid_n // 2)

    tail = skipped + _tail_envelope(lower, upper)
    log_budgets.append(_log(tail))

    # the quadrant term underflows near u = 8, so the sum is formed in log space
    if below_fine >= 0:
        sign, log_cov = 1, log_add(log_quadrant, _log(below_fine))
    else:
        log_negative = math.log(-below_fine)
        if log_quadrant >= log_negative:
            sign, log_cov = 1, log_quadrant + _log(-math.expm1(log_negative - log_quadrant))
        else:
            sign, log_cov = -1, log_negative + _log(-math.expm1(log_quadrant - log_negative))
    if log_cov == -math.inf:
        sign = 0
    log_quad_err = log_add(log_quadrant_err, _log(abs(below_fine - below_coarse)))
    reliable = log_quad_err <= math.log(COARSE_GRID_GAP) + log_cov
    if not reliable:
        logger.warning("covariance at u=%g is flagged: log node-halving gap %.4g vs log value %.4g", u, log_quad_err, log_cov)

    logger.debug("u=%g asymptotic regime: log quadrant %.6g, below quadrant %.6g", u, log_quadrant, below_fine)
    return CovarianceEstimate(
        u=u,
        log_cov=log_cov,
        sign=sign,
        window=(lower, upper),
        log_tail_budget=log_add(*log_budgets),
        log_quad_err=log_quad_err,
        regime="asymptotic",
        grid_n=grid_n,
        reliable=reliable,
    )


def hoeffding_cov(
    u: float,
    s_window: Optional[Tuple[float, float]] = DEFAULT_WINDOW,
    grid_n: Optional[int] = DEFAULT_GRID,
    n: Optional[int] = DEFAULT_NODES,
    marginal: Optional[Callable[[float], float]] = None,
    excess: Optional[Callable[[float, float], float]] = None,
    split_diagonal: Optional[bool] = False,
    constants: Optional[Tuple[float, float]] = (R1_CONSTANT, R2_CONSTANT),
) -> CovarianceEstimate:
    """``Cov(A(0), A(u))`` by Hoeffding's identity over a square threshold window

    Parameters
    ----------
    u : float
        Time separation in ``[0.05, 8]``. Above 3 the leading trace term replaces the
        excess surface on the quadrant ``s1, s2 >= 0``, the rest of the window
        still integrates the excess surface, and the result is labelled
        ``"asymptotic"``
    s_window : Optional Tuple[float, float]
        Window for both thresholds, inside ``[-12, 12]``. Defaults to ``(-10, 6)``
    grid_n : Optional int
        Nodes per axis, at least 16, spread over unit-width panels. Defaults to 64
    n : Optional int
        Nystrom nodes per block. Defaults to 60
    marginal : Optional Callable[[float], float]
        Replaces the Airy1 one-point distribution
    excess : Optional Callable[[float, float], float]
        Replaces the Airy1 excess surface ``E(u; s1, s2)``
    split_diagonal : Optional bool
        Integrate the two triangles on either side of ``s1 = s2`` separately.
        Needed when the joint CDF has a kink on the diagonal. Defaults to False
    constants : Optional Tuple[float, float]
        Remainder constants ``(C2, C)`` for the asymptotic-regime budgets

    Raises
    ------
    DomainError
        If `u` is outside ``[0.05, 8]``
    ArgumentError
        If the window or grid is invalid

    Returns
    -------
    A `CovarianceEstimate`
    """

    if not MIN_KERNEL_U <= u <= MAX_KERNEL_U:
        raise DomainError("u", u, f"covariance is validated for {MIN_KERNEL_U} <= u <= {MAX_KERNEL_U}")
    _check_window(s_window, grid_n)

    hooked = marginal is not None or excess is not None
    if u > ASYMPTOTIC_REGIME_U and not hooked:
        return _asymptotic_cov(u, s_window, grid_n, n, constants)

    surface = None if hooked and marginal is not None and excess is not None else ExcessSurface(u, n)
    integrand = _Integrand(marginal or surface.marginal, excess or surface.excess)
    integrate = _integrate_split if split_diagonal else _integrate_tensor

    lower, upper = s_window
    fine, skipped = integrate(integrand, lower, upper, grid_n)
    coarse, _ = integrate(integrand, lower, upper, grid_n // 2)
    tail = skipped + (0.0 if marginal is not None else _tail_envelope(lower, upper))

    logger.debug("u=%g determinant regime: cov=%.6g (coarse %.6g)", u, fine, coarse)
    return _estimate(u, fine, coarse, tail, (lower, upper), "determinant", grid_n)


def airy1_variance(
    s_window: Optional[Tuple[float, float]] = DEFAULT_WINDOW,
    grid_n: Optional[int] = DEFAULT_GRID,
    n: Optional[int] = DEFAULT_NODES,
) -> CovarianceEstimate:
    """``Var(A(0))`` through the same machinery, using the comonotone joint CDF ``f(min(s1, s2))``"""

    _check_window(s_window, grid_n)

    def marginal(s: float) -> float:
        return marginal_f(s, n)

    def excess(s1: float, s2: float) -> float:
        return marginal(min(s1, s2)) / (marginal(s1) * marginal(s2)) - 1.0

    integrand = _Integrand(marginal, excess)
    lower, upper = s_window
    fine, skipped = _integrate_split(integrand, lower, upper, grid_n)
    coarse, _ = _integrate_split(integrand, lower, upper, grid_n // 2)
    tail = skipped + _tail_envelope(lower, upper)
    return _estimate(0.0, fine, coarse, tail, (lower, upper), "comonotone", grid_n)


def lower_window_cov(u: float, grid_n: Optional[int] = 32, n: Optional[int] = DEFAULT_NODES) -> CovarianceEstimate:
    """Certified lower bound on the covariance from the window ``[a, a + 1]^2``, ``a = 3 ln u``

    The integrand is nonnegative, so the windowed integral minus its quadrature error
    bounds the full covariance from below.

    The window carries only a sliver of the full integral. At ``u = 2.5`` the bound is
    near ``e^{-62}``, so a floor such as ``cov >= e^{-37}`` is out of its reach there;
    comparing its decay with the fitted envelope checks shape only.

    Raises
    ------
    DomainError
        If ``u < 1.1`` (the window would not sit above 0) or ``u > 8``
    """

    if not MIN_LOWER_WINDOW_U <= u <= MAX_KERNEL_U:
        raise DomainError("u", u, f"lower window needs {MIN_LOWER_WINDOW_U} <= u <= {MAX_KERNEL_U}")
    if grid_n < MIN_GRID:
        raise ArgumentError("grid_n", grid_n, f"need at least {MIN_GRID} nodes per axis")

    alpha = 3.0 * math.log(u)
    beta = alpha + 1.0
    surface = ExcessSurface(u, n)
    integrand = _Integrand(surface.marginal, surface.excess)

    fine, _ = _integrate_tensor(integrand, alpha, beta, grid_n)
    coarse, _ = _integrate_tensor(integrand, alpha, beta, grid_n // 2)
    quad_err = abs(fine - coarse)
    bound = fine - quad_err
    if bound <= 0:
        logger.warning("lower window at u=%g does not resolve a positive bound (integral %.3g, err %.3g)", u, fine, quad_err)

    return CovarianceEstimate(
        u=u,
        log_cov=_log(abs(bound)),
        sign=int(np.sign(bound)),
        window=(alpha, beta),
        log_tail_budget=-math.inf,
        log_quad_err=_log(quad_err),
        regime="determinant",
        grid_n=grid_n,
        reliable=bound > 0,
        restricted=True,
    )


def cov_sweep(
    u_values: Sequence[float],
    s_window: Optional[Tuple[float, float]] = DEFAULT_WINDOW,
    grid_n: Optional[int] = DEFAULT_GRID,
    n: Optional[int] = DEFAULT_NODES,
    threads: Optional[int] = None,
) -> List[CovarianceEstimate]:
    """Runs :func:`hoeffding_cov` over several `u` in a thread pool, preserving order"""

    workers = threads or thread_limit()
    logger.info("covariance sweep over %d values of u with %d threads", len(u_values), workers)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda u: hoeffding_cov(u, s_window, grid_n, n), u_values))


def decay_exponent_fit(
    u_values: Sequence[float],
    log_covs: Optional[Sequence[Union[float, CovarianceEstimate]]] = None,
    s_window: Optional[Tuple[float, float]] = DEFAULT_WINDOW,
    grid_n: Optional[int] = DEFAULT_GRID,
    reliable: Optional[Sequence[bool]] = None,
) -> DecayFit:
    """Slope of ``ln(-ln cov)`` against ``ln u``

    Parameters
    ----------
    u_values : Sequence[float]
        At least four separations
    log_covs : Optional Sequence
        Either `CovarianceEstimate` objects for `u_values`, or plain ``ln cov``
        values together with `reliable`. Computed with :func:`cov_sweep` when omitted
    reliable : Optional Sequence[bool]
        Certification flag of each plain ``ln cov`` value

    Raises
    ------
    ArgumentError
        If fewer than four values are given, plain values come without `reliable`,
        or the estimates do not match `u_values`
    UnreliableEstimateError
        If any covariance is flagged, nonpositive or not below 1

    Returns
    -------
    A `DecayFit`
    """

    u = np.asarray(u_values, dtype=float)
    if u.size < 4:
        raise ArgumentError("u_values", list(u_values), "need at least four values")
    if np.any((u < MIN_DECAY_FIT_U) | (u > MAX_KERNEL_U)):
        logger.warning("decay fit outside [%g, %g]: %s", MIN_DECAY_FIT_U, MAX_KERNEL_U, list(u_values))

    if log_covs is None:
        log_covs = cov_sweep(list(u), s_window, grid_n)

    if all(isinstance(item, CovarianceEstimate) for item in log_covs):
        if [e.u for e in log_covs] != list(u):
            raise ArgumentError("log_covs", [e.u for e in log_covs], "estimates must follow u_values")
        reliable = [e.reliable and e.sign > 0 for e in log_covs]
        log_covs = [e.log_cov for e in log_covs]
    elif reliable is None:
        raise ArgumentError("reliable", None, "plain log covariances need their reliability flags")

    if len(log_covs) != u.size or len(reliable) != u.size:
        raise ArgumentError("log_covs", list(log_covs), "need one value per u")

    logs = np.asarray(log_covs, dtype=float)
    offending = [float(x) for x, l, ok in zip(u, logs, reliable) if not (ok and np.isfinite(l) and l < 0)]
    if offending:
        raise UnreliableEstimateError(offending)

    x, y = np.log(u), np.log(-logs)
    slope, intercept = np.polyfit(x, y, 1)
    residuals = y - (slope * x + intercept)
    return DecayFit(delta=float(slope), intercept=float(intercept), residuals=tuple(residuals), u_values=tuple(u))


def bound_envelope_check(u: float, cov: Optional[float], c: float, c_prime: float, log_cov: Optional[float] = None) -> bool:
    """True iff ``e^{-c u ln u} e^{-(4/3) u^3} <= cov <= e^{c' u^2} e^{-(4/3) u^3}``

    The comparison is made in log space; pass `log_cov` for values that underflow.
    """

    if not u > 1:
        raise DomainError("u", u, "envelope is stated for u > 1")

    if log_cov is None:
        if cov is None or cov <= 0:
            return False
        log_cov = math.log(cov)

    cubic = (4.0 / 3.0) * u ** 3
    return -c * u * math.log(u) - cubic <= log_cov <= c_prime * u * u - cubic


def fit_envelope_constants(u_values: Sequence[float], log_covs: Sequence[float]) -> Tuple[float, float]:
    """Smallest positive ``(c, c')`` for which every point passes :func:`bound_envelope_check`"""

    if len(u_values) != len(log_covs) or not len(u_values):
        raise ArgumentError("log_covs", list(log_covs), "need one value per u")

    c = c_prime = 1e-12
    for u, log_cov in zip(u_values, log_covs):
        if not u > 1:
            raise DomainError("u", u, "envelope is stated for u > 1")
        cubic = (4.0 / 3.0) * u ** 3
        c = max(c, (-log_cov - cubic) / (u * math.log(u)))
        c_prime = max(c_prime, (log_cov + cubic) / (u * u))

    # nudge so the equality cases survive floating point
    return c * (1.0 + 1e-9) + 1e-12, c_prime * (1.0 + 1e-9) + 1e-12
