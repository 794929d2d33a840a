"""
The extended Airy1 kernel at two points separated by `u`, and the quantities built
from it: the marginal ``f(s) = det(1 - Ai(x + y))`` on ``(s, inf)``, the joint CDF
``F(u; s1, s2)``, the excess ``E = F / (f1 f2) - 1`` and the trace ``Tr(K12 K21)``
that dominates it for large `u`.

Block entries, for ``x, y`` above the block thresholds::

    K11(x, y) = Ai(x + y)
    K12(x, y) = Ai(x + y + u^2) e^{(x + y) u + (2/3) u^3} - e^{-(x - y)^2 / 4u} / sqrt(4 pi u)
    K21(x, y) = Ai(x + y + u^2) e^{-(x + y) u - (2/3) u^3}
    K22(x, y) = Ai(x + y)

All Airy factors are formed from ``log|Ai|`` so that the ``e^{+-(2/3) u^3}``
factors never overflow.
"""

import functools
import logging
import math
from dataclasses import dataclass, replace
from typing import Iterable, Optional, Tuple

import numpy as np
from scipy import linalg

from .constants import (
    CALIBRATION_SAFETY,
    DEFAULT_NODES,
    HEAT_RESOLUTION_U,
    MAX_KERNEL_U,
    MAX_THRESHOLD,
    MAX_TRUNCATION_LENGTH,
    MIN_KERNEL_U,
    MIN_THRESHOLD,
    R1_CONSTANT,
    R2_CONSTANT,
    RELIABLE_MARGINAL_PRODUCT,
    ROUNDOFF_FACTOR,
)
from .errors import DomainError, EvaluationError, SolverError
from .quad import (
    BlockKernel,
    QuadratureRule,
    airy_rule,
    det_minus_one,
    fredholm_series,
    kernel_trace_product,
    lu_determinant,
    nystrom_matrix,
    truncation_length,
)
from .specfun import airy_ai_log
from .utils import LogValue

logger = logging.getLogger(__name__)

_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class KernelSpec:
    """Parameters of one extended-kernel instance

    Attributes
    ----------
    u : float
        Time separation, strictly positive
    s1 : float
        Threshold of the first block
    s2 : float
        Threshold of the second block
    conjugated : bool
        Whether the off-diagonal entries carry the constant taming weights
        ``K12 e^{-u^3/3}`` and ``K21 e^{u^3/3}``. Determinants and traces do not
        depend on this choice.
    """

    u: float
    s1: float
    s2: float
    conjugated: bool = True

    def __post_init__(self):
        if not (math.isfinite(self.u) and self.u > 0):
            raise DomainError("u", self.u, "the extended kernel degenerates at u = 0")
        for name in ("s1", "s2"):
            if not math.isfinite(getattr(self, name)):
                raise DomainError(name, getattr(self, name), "threshold must be finite")

    def swapped(self) -> "KernelSpec":
        return replace(self, s1=self.s2, s2=self.s1)


@dataclass(frozen=True)
class JointCdfResult:
    """Joint CDF at two points together with its marginals

    Attributes
    ----------
    F : float
        ``P(A(0) <= s1, A(u) <= s2)``
    f1 : float
        ``P(A(0) <= s1)``
    f2 : float
        ``P(A(u) <= s2)``
    excess_E : float
        ``F / (f1 f2) - 1``; NaN when a marginal vanishes
    err : float
        Error proxy for `excess_E` (node halving plus a roundoff floor)
    err_F : float
        Error proxy for `F`
    reliable : bool
        False when ``f1 f2 < 1e-13``, where `excess_E` is dominated by noise
    """

    F: float
    f1: float
    f2: float
    excess_E: float
    err: float
    err_F: float
    reliable: bool


class AsymptoticTrace(LogValue):
    """Leading-order trace value, with a flag for the stated validity window"""

    __slots__ = ("in_window",)

    def __init__(self, sign: int, log_abs: float, in_window: bool):
        super().__init__(sign, log_abs)
        self.in_window = in_window

    def __repr__(self) -> str:
        return f"AsymptoticTrace({self.sign}, exp({self.log_abs}), in_window={self.in_window})"


def _airy_times_exp(z: np.ndarray, offset) -> np.ndarray:
    log_abs, sign = airy_ai_log(z)
    with np.errstate(over="ignore"):
        return sign * np.exp(log_abs + offset)


def _airy_diagonal(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    return _airy_times_exp(x + y, 0.0)


def kernel_entries(spec: KernelSpec, length_cap: Optional[float] = MAX_TRUNCATION_LENGTH) -> BlockKernel:
    """Builds the extended Airy1 block kernel of `spec`

    The conjugated entries scale block 2 by the constant ``e^{u^3/3}`` rather than by
    ``d(x) = e^{u x + u^3/3}``. Any positive diagonal rescaling is a similarity of the
    assembled operator, so determinants and ``Tr(K12 K21)`` are the same either way.
    With the constant, ``K22`` stays ``Ai(x + y)`` and its Nystrom block is the marginal one.

    Parameters
    ----------
    spec : KernelSpec
        Time separation, thresholds and conjugation flag
    length_cap : Optional float
        Upper bound on the truncation length of each half-line. Defaults to 40

    Returns
    -------
    A `BlockKernel` whose domains are the truncated half-lines above ``s1`` and ``s2``
    """

    u = spec.u
    shift = u ** 3 / 3.0 if spec.conjugated else 0.0
    u_squared = u * u
    cubic = (2.0 / 3.0) * u ** 3
    log_heat_norm = 0.5 * math.log(4.0 * math.pi * u)

    def k12(x, y):
        total = x + y
        airy_part = _airy_times_exp(total + u_squared, total * u + cubic - shift)
        heat_part = np.exp(-((x - y) ** 2) / (4.0 * u) - shift - log_heat_norm)
        return airy_part - heat_part

    def k21(x, y):
        total = x + y
        return _airy_times_exp(total + u_squared, -total * u - cubic + shift)

    return BlockKernel(
        entries=((_airy_diagonal, k12), (k21, _airy_diagonal)),
        domain1=(spec.s1, spec.s1 + truncation_length(spec.s1, length_cap)),
        domain2=(spec.s2, spec.s2 + truncation_length(spec.s2, length_cap)),
    )


@dataclass(frozen=True, eq=False)
class _DiagonalBlock:
    rule: QuadratureRule
    matrix: np.ndarray
    det: float
    lu: Tuple[np.ndarray, np.ndarray]


@functools.lru_cache(maxsize=8192)
def _diagonal_block(s: float, n: int, length_cap: float) -> _DiagonalBlock:
    rule = airy_rule(s, n, truncation_length(s, length_cap))
    matrix = nystrom_matrix(_airy_diagonal, rule, rule)
    det, lu = lu_determinant(np.eye(len(rule)) - matrix)
    if np.any(np.diag(lu[0]) == 0.0):
        raise SolverError(1, s)
    matrix.setflags(write=False)
    return _DiagonalBlock(rule=rule, matrix=matrix, det=det, lu=lu)


def _off_diagonal(spec: KernelSpec, rule1: QuadratureRule, rule2: QuadratureRule, length_cap: float):
    kernel = kernel_entries(spec, length_cap)
    try:
        return nystrom_matrix(kernel.entry(1, 2), rule1, rule2), nystrom_matrix(kernel.entry(2, 1), rule2, rule1)
    except EvaluationError as e:
        if spec.conjugated:
            raise
        raise EvaluationError(e.node_pair, "unconjugated entries overflowed, retry with conjugated=True") from e


def _check_joint_range(spec: KernelSpec):
    if not MIN_KERNEL_U <= spec.u <= MAX_KERNEL_U:
        raise DomainError("u", spec.u, f"determinant evaluation is validated for {MIN_KERNEL_U} <= u <= {MAX_KERNEL_U}")
    for name in ("s1", "s2"):
        value = getattr(spec, name)
        if not MIN_THRESHOLD <= value <= MAX_THRESHOLD:
            raise DomainError(name, value, f"thresholds must lie in [{MIN_THRESHOLD}, {MAX_THRESHOLD}]")


def resolved_nodes(u: float, n: int) -> int:
    """Node count for the joint blocks at separation `u`

    The heat part of ``K12`` has width ``sqrt(2u)``, so below ``u = 0.5`` the
    count grows like ``u^{-1/2}`` to keep the same number of nodes per width.
    """

    if u >= HEAT_RESOLUTION_U:
        return n
    return max(n, math.ceil(n * math.sqrt(HEAT_RESOLUTION_U / u)))


def _marginal(s: float, n: int, length_cap: float) -> Tuple[float, float]:
    fine = _diagonal_block(s, n, length_cap)
    coarse = _diagonal_block(s, n // 2, length_cap)
    value = min(1.0, max(0.0, fine.det))
    err = abs(fine.det - coarse.det) + ROUNDOFF_FACTOR * len(fine.rule) * _EPS
    return value, err


def marginal_f(s: float, n: Optional[int] = DEFAULT_NODES, length_cap: Optional[float] = MAX_TRUNCATION_LENGTH) -> float:
    """One-point distribution ``f(s) = det(1 - Ai(x + y))`` on ``(s, inf)``

    Below ``s = -12`` the value is under ``1e-14`` and is clamped to 0 with a warning.

    Parameters
    ----------
    s : float
        Threshold
    n : Optional int
        Target node count. Defaults to 60
    length_cap : Optional float
        Cap on the truncation length. Defaults to 40
    """

    if not math.isfinite(s):
        raise DomainError("s", s, "threshold must be finite")
    if s < MIN_THRESHOLD:
        logger.warning("marginal_f(%g) is below the resolvable range, clamped to 0", s)
        return 0.0

    block = _diagonal_block(float(s), int(n), float(length_cap))
    return min(1.0, max(0.0, block.det))


def _joint_det(spec: KernelSpec, n: int, length_cap: float) -> Tuple[float, int]:
    first = _diagonal_block(float(spec.s1), n, length_cap)
    second = _diagonal_block(float(spec.s2), n, length_cap)
    m12, m21 = _off_diagonal(spec, first.rule, second.rule, length_cap)
    matrix = np.block([[first.matrix, m12], [m21, second.matrix]])
    det, _ = lu_determinant(np.eye(matrix.shape[0]) - matrix)
    return det, matrix.shape[0]


def joint_F(spec: KernelSpec, n: Optional[int] = DEFAULT_NODES, length_cap: Optional[float] = MAX_TRUNCATION_LENGTH) -> JointCdfResult:
    """Joint CDF ``F(u; s1, s2)`` as a block Fredholm determinant

    Parameters
    ----------
    spec : KernelSpec
        Requires ``0.05 <= u <= 8`` and thresholds in ``[-12, 12]``
    n : Optional int
        Target node count per block, raised by :func:`resolved_nodes` below ``u = 0.5``. Defaults to 60
    length_cap : Optional float
        Cap on the truncation length. Defaults to 40

    Raises
    ------
    DomainError
        If `spec` is outside the validated range

    Returns
    -------
    A `JointCdfResult`
    """

    _check_joint_range(spec)

    n = resolved_nodes(spec.u, n)
    fine, size = _joint_det(spec, n, length_cap)
    coarse, _ = _joint_det(spec, n // 2, length_cap)
    err_F = abs(fine - coarse) + ROUNDOFF_FACTOR * size * _EPS

    F = min(1.0, max(0.0, fine))
    f1, err1 = _marginal(float(spec.s1), n, length_cap)
    f2, err2 = _marginal(float(spec.s2), n, length_cap)
    product = f1 * f2
    reliable = product >= RELIABLE_MARGINAL_PRODUCT

    if product > 0:
        excess = F / product - 1.0
        err = (err_F + F * (err1 / f1 + err2 / f2)) / product
    else:
        excess, err = math.nan, math.inf

    if not reliable:
        logger.warning(
            "excess at u=%g, s1=%g, s2=%g is unreliable (f1*f2 = %.3g)", spec.u, spec.s1, spec.s2, product
        )

    return JointCdfResult(F=F, f1=f1, f2=f2, excess_E=excess, err=err, err_F=err_F, reliable=reliable)


def _tilde_matrix(first: _DiagonalBlock, second: _DiagonalBlock, m12: np.ndarray, m21: np.ndarray) -> np.ndarray:
    # (1 - K11)^{-1} K12 (1 - K22)^{-1} K21 on the node grid
    solved = linalg.lu_solve(second.lu, m21, check_finite=False)
    return linalg.lu_solve(first.lu, m12 @ solved, check_finite=False)


def excess_via_factorization(spec: KernelSpec, n: Optional[int] = DEFAULT_NODES, length_cap: Optional[float] = MAX_TRUNCATION_LENGTH) -> float:
    """Excess ``E`` from ``1 + E = det(1 - K~)``

    Here ``K~ = (1 - K11)^{-1} K12 (1 - K22)^{-1} K21``. The determinant minus one is
    summed as a trace-log series when ``K~`` is small, so tiny excesses keep their
    relative accuracy instead of cancelling against 1.
    """

    _check_joint_range(spec)

    first, second, m12, m21 = _remainder_matrices(spec, n, length_cap)
    return det_minus_one(_tilde_matrix(first, second, m12, m21))


def trace_K12K21(spec: KernelSpec, n: Optional[int] = DEFAULT_NODES, length_cap: Optional[float] = MAX_TRUNCATION_LENGTH) -> float:
    """``Tr(K12 K21)`` by tensor quadrature over the two truncated half-lines"""

    _check_joint_range(spec)

    kernel = kernel_entries(spec, length_cap)
    n = resolved_nodes(spec.u, n)
    rule1 = _diagonal_block(float(spec.s1), n, length_cap).rule
    rule2 = _diagonal_block(float(spec.s2), n, length_cap).rule
    return kernel_trace_product(kernel.entry(1, 2), kernel.entry(2, 1), rule1, rule2)


def trace_asymptotic(u: float, s1: float, s2: float) -> AsymptoticTrace:
    """Leading large-`u` behaviour of ``Tr(K12 K21)``

    ``Tr(K12 K21) ~ -s1 s2 e^{-2(s1 + s2) u - (4/3) u^3} / (16 pi u^4)``, stated for
    ``0 <= s1, s2 <= sqrt(u)``. Outside that window the value is still computed and
    the result is flagged.
    """

    if not u > 0:
        raise DomainError("u", u, "asymptotic needs u > 0")

    in_window = 0 <= s1 <= math.sqrt(u) and 0 <= s2 <= math.sqrt(u)
    if not in_window:
        logger.warning("trace_asymptotic(u=%g, s1=%g, s2=%g) is outside 0 <= s <= sqrt(u)", u, s1, s2)

    product = s1 * s2
    if product == 0:
        return AsymptoticTrace(0, -math.inf, in_window)

    log_abs = math.log(abs(product)) - math.log(16.0 * math.pi * u ** 4) - 2.0 * (s1 + s2) * u - (4.0 / 3.0) * u ** 3
    return AsymptoticTrace(-1 if product > 0 else 1, log_abs, in_window)


def trace_asymptotic_next(u: float, s1: float, s2: float) -> Tuple[LogValue, LogValue]:
    """The Airy and heat contributions to ``Tr(K12 K21)`` to next order in ``1/u``

    The two parts of ``K12`` give
    ``+-e^{-2(s1 + s2) u - (4/3) u^3} / (16 pi u^3) [1 - q / 2u]`` with
    ``q = (s1 + s2)^2`` and ``q = s1^2 + s2^2`` respectively. The leading terms
    cancel and the sum is :func:`trace_asymptotic`.
    """

    if not u > 0:
        raise DomainError("u", u, "asymptotic needs u > 0")

    log_scale = -math.log(16.0 * math.pi * u ** 3) - 2.0 * (s1 + s2) * u - (4.0 / 3.0) * u ** 3
    airy_factor = 1.0 - (s1 + s2) ** 2 / (2.0 * u)
    heat_factor = 1.0 - (s1 * s1 + s2 * s2) / (2.0 * u)
    airy_term = LogValue.from_value(airy_factor) * LogValue(1, log_scale)
    heat_term = -(LogValue.from_value(heat_factor) * LogValue(1, log_scale))
    return airy_term, heat_term


def _check_budget_window(u: float, s1: float, s2: float):
    if s1 < 0 or s2 < 0:
        raise DomainError("s", (s1, s2), "budget holds for nonnegative thresholds")
    if u < max(0.5, math.sqrt(s1 + s2)):
        raise DomainError("u", u, "budget needs u >= max(1/2, sqrt(s1 + s2))")


def remainder_budget_R1(u: float, s1: float, s2: float, constant: Optional[float] = R1_CONSTANT) -> LogValue:
    """Budget ``(C2 e^{-min(s1, s2)} / u^2) e^{-(4/3) u^3 - 2(s1 + s2) u}`` for the resolvent remainder

    Bounds ``|det(1 - K~) - det(1 - K12 K21)|``.

    Raises
    ------
    DomainError
        If a threshold is negative or ``u < max(1/2, sqrt(s1 + s2))``
    """

    _check_budget_window(u, s1, s2)
    log_value = math.log(constant) - min(s1, s2) - 2.0 * math.log(u) - (4.0 / 3.0) * u ** 3 - 2.0 * (s1 + s2) * u
    return LogValue(1, log_value)


def remainder_budget_R2(u: float, s1: float, s2: float, constant: Optional[float] = R2_CONSTANT) -> LogValue:
    """Budget ``(C / u^6) e^{-4(s1 + s2) u - (8/3) u^3}`` for ``det(1 - K12 K21) - 1 + Tr(K12 K21)``"""

    if not u > 0:
        raise DomainError("u", u, "budget needs u > 0")

    log_value = math.log(constant) - 6.0 * math.log(u) - 4.0 * (s1 + s2) * u - (8.0 / 3.0) * u ** 3
    return LogValue(1, log_value)


def _remainder_matrices(spec: KernelSpec, n: int, length_cap: float):
    n = resolved_nodes(spec.u, n)
    first = _diagonal_block(float(spec.s1), n, length_cap)
    second = _diagonal_block(float(spec.s2), n, length_cap)
    m12, m21 = _off_diagonal(spec, first.rule, second.rule, length_cap)
    return first, second, m12, m21


def remainder_R1(spec: KernelSpec, n: Optional[int] = DEFAULT_NODES, length_cap: Optional[float] = MAX_TRUNCATION_LENGTH) -> float:
    """Measured ``det(1 - K~) - det(1 - K12 K21)``"""

    _check_joint_range(spec)
    first, second, m12, m21 = _remainder_matrices(spec, n, length_cap)
    return det_minus_one(_tilde_matrix(first, second, m12, m21)) - det_minus_one(m12 @ m21)


def remainder_R2(spec: KernelSpec, n: Optional[int] = DEFAULT_NODES, length_cap: Optional[float] = MAX_TRUNCATION_LENGTH, order: Optional[int] = 6) -> float:
    """Measured ``det(1 - K12 K21) - 1 + Tr(K12 K21)`` from the Fredholm series up to `order`"""

    _check_joint_range(spec)
    _, _, m12, m21 = _remainder_matrices(spec, n, length_cap)
    terms = fredholm_series(m12 @ m21, order)
    signs = (-1.0) ** np.arange(1, order + 1)
    return float(np.dot(signs[1:], terms[1:]))


def calibrate_constants(
    u_values: Iterable[float] = (1.0, 1.5, 2.0, 3.0, 4.0),
    s_values: Iterable[float] = (0.0, 1.0, 2.0),
    safety: Optional[float] = CALIBRATION_SAFETY,
) -> Tuple[float, float]:
    """Smallest remainder constants dominating the measured remainders on a grid

    Grid points outside the R1 budget window are skipped. The returned constants are
    multiplied by `safety`.

    Returns
    -------
    ``(C2, C)`` for :func:`remainder_budget_R1` and :func:`remainder_budget_R2`
    """

    u_values, s_values = list(u_values), list(s_values)
    log_c2 = log_c = -math.inf
    for u in u_values:
        for s1 in s_values:
            for s2 in s_values:
                spec = KernelSpec(u, s1, s2)
                r2 = abs(remainder_R2(spec))
                if r2 > 0:
                    log_c = max(log_c, math.log(r2) - remainder_budget_R2(u, s1, s2, 1.0).log_abs)
                if u < max(0.5, math.sqrt(s1 + s2)):
                    continue
                r1 = abs(remainder_R1(spec))
                if r1 > 0:
                    log_c2 = max(log_c2, math.log(r1) - remainder_budget_R1(u, s1, s2, 1.0).log_abs)

    c2 = safety * math.exp(log_c2) if log_c2 > -math.inf else R1_CONSTANT
    c = safety * math.exp(log_c) if log_c > -math.inf else R2_CONSTANT
    logger.info("calibrated remainder constants C2=%.4g, C=%.4g", c2, c)
    return c2, c


def norm_bound_diagonal(s: float) -> float:
    """Hilbert-Schmidt bound ``||K_ii||_2 <= e^{-2s} / 2`` for ``s >= 0``"""

    if s < 0:
        raise DomainError("s", s, "bound holds for s >= 0")
    return 0.5 * math.exp(-2.0 * s)


def resolvent_bound(s: float) -> float:
    """Operator-norm bound ``||(1 - K_ii)^{-1}|| <= 2`` for ``s >= 0``, from ``||K_ii|| <= 1/2``"""

    if s < 0:
        raise DomainError("s", s, "bound holds for s >= 0")
    return 1.0 / (1.0 - norm_bound_diagonal(0.0))


def norm_bound_K21(u: float, s1: float, s2: float) -> LogValue:
    """Hilbert-Schmidt bound ``||K21||_2 <= e^{-2(s1 + s2) u - (4/3) u^3} / (2 u^{3/2})``"""

    if not u > 0:
        raise DomainError("u", u, "bound needs u > 0")
    if s1 < 0 or s2 < 0:
        raise DomainError("s", (s1, s2), "bound holds for nonnegative thresholds")
    return LogValue(1, -2.0 * (s1 + s2) * u - (4.0 / 3.0) * u ** 3 - math.log(2.0) - 1.5 * math.log(u))


class ExcessSurface:
    """Evaluator of ``f(s)`` and ``E(u; s1, s2)`` at fixed `u`, reusing diagonal factorisations

    The diagonal blocks do not depend on `u`, so their Nystrom matrices and LU
    factors are shared across every surface built with the same node settings.

    Parameters
    ----------
    u : float
        Time separation in ``[0.05, 8]``
    n : Optional int
        Target node count per block, see :func:`resolved_nodes`. Defaults to 60
    length_cap : Optional float
        Cap on the truncation length. Defaults to 40
    """

    def __init__(self, u: float, n: Optional[int] = DEFAULT_NODES, length_cap: Optional[float] = MAX_TRUNCATION_LENGTH):
        _check_joint_range(KernelSpec(u, 0.0, 0.0))
        self.u = u
        self.n = n
        self.joint_n = resolved_nodes(u, n)
        self.length_cap = length_cap

    def marginal(self, s: float) -> float:
        return marginal_f(s, self.n, self.length_cap)

    def excess(self, s1: float, s2: float) -> float:
        spec = KernelSpec(self.u, float(s1), float(s2))
        first = _diagonal_block(spec.s1, self.joint_n, self.length_cap)
        second = _diagonal_block(spec.s2, self.joint_n, self.length_cap)
        m12, m21 = _off_diagonal(spec, first.rule, second.rule, self.length_cap)
        return det_minus_one(_tilde_matrix(first, second, m12, m21))
