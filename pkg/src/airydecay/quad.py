"""
Gauss-Legendre rules on finite intervals and a Nystrom engine for Fredholm
determinants and traces of scalar and 2x2 block kernels.

Kernels are plain callables ``k(x, y)`` that broadcast over numpy arrays. A kernel
sampled on two rules is weighted symmetrically, ``W_x^{1/2} K W_y^{1/2}``, so a
symmetric kernel gives a symmetric matrix.
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
from numpy.polynomial import legendre
from scipy import linalg

from .constants import (
    AIRY_TAIL_CUT,
    DEFAULT_NODES,
    MAX_TRUNCATION_LENGTH,
    MIN_TRUNCATION_LENGTH,
    SERIES_RADIUS,
)
from .errors import ArgumentError, EvaluationError

logger = logging.getLogger(__name__)

Kernel = Callable[[np.ndarray, np.ndarray], np.ndarray]

_MAX_SERIES_TERMS = 200


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    """Nodes and positive weights on a finite interval

    Attributes
    ----------
    nodes : np.ndarray
        Strictly increasing nodes inside `domain`
    weights : np.ndarray
        Positive weights summing to the interval length
    domain : Tuple[float, float]
        The ``(lower, upper)`` interval the rule was built for
    """

    nodes: np.ndarray
    weights: np.ndarray
    domain: Tuple[float, float]

    def __post_init__(self):
        lower, upper = self.domain
        if self.nodes.shape != self.weights.shape or self.nodes.ndim != 1:
            raise ArgumentError("nodes", self.nodes.shape, "nodes and weights must be matching 1-d arrays")
        if np.any(self.weights <= 0):
            raise ArgumentError("weights", self.weights.min(), "weights must be positive")
        if np.any(np.diff(self.nodes) <= 0):
            raise ArgumentError("nodes", None, "nodes must be strictly increasing")
        if self.nodes[0] <= lower or self.nodes[-1] >= upper:
            raise ArgumentError("nodes", (self.nodes[0], self.nodes[-1]), f"nodes must lie inside ({lower}, {upper})")
        self.nodes.setflags(write=False)
        self.weights.setflags(write=False)

    def __len__(self) -> int:
        return self.nodes.size

    @property
    def length(self) -> float:
        return self.domain[1] - self.domain[0]

    @property
    def sqrt_weights(self) -> np.ndarray:
        return np.sqrt(self.weights)

    def integrate(self, values: np.ndarray) -> float:
        """Applies the rule to function values sampled at `nodes`"""

        return float(np.dot(self.weights, values))


@dataclass(frozen=True)
class BlockKernel:
    """A 2x2 operator-valued kernel on two truncated half-lines

    Attributes
    ----------
    entries : Tuple[Tuple[Kernel, Kernel], Tuple[Kernel, Kernel]]
        ``entries[i][j]`` maps block ``j`` to block ``i`` (zero-based)
    domain1 : Tuple[float, float]
        Truncated domain of the first block
    domain2 : Tuple[float, float]
        Truncated domain of the second block
    """

    entries: Tuple[Tuple[Kernel, Kernel], Tuple[Kernel, Kernel]]
    domain1: Tuple[float, float]
    domain2: Tuple[float, float]

    def entry(self, i: int, j: int) -> Kernel:
        """Returns the kernel of block ``(i, j)`` using one-based indices"""

        return self.entries[i - 1][j - 1]


def gauss_legendre(n: int, lower: float, upper: float) -> QuadratureRule:
    """Builds the n-point Gauss-Legendre rule on ``[lower, upper]``

    Parameters
    ----------
    n : int
        Number of nodes, at least 1
    lower : float
        Left end of the interval
    upper : float
        Right end of the interval

    Raises
    ------
    ArgumentError
        If ``n < 1`` or the interval is empty or inverted

    Returns
    -------
    A `QuadratureRule` exact for polynomials of degree ``2n - 1``
    """

    if int(n) != n or n < 1:
        raise ArgumentError("n", n, "need at least one node")
    if not lower < upper:
        raise ArgumentError("interval", (lower, upper), "lower must be below upper")

    t, w = legendre.leggauss(int(n))
    half = 0.5 * (upper - lower)
    middle = 0.5 * (upper + lower)
    return QuadratureRule(nodes=middle + half * t, weights=half * w, domain=(float(lower), float(upper)))


def composite_gauss_legendre(breakpoints: Sequence[float], n_per_panel: int) -> QuadratureRule:
    """Panel-wise Gauss-Legendre rule

    Parameters
    ----------
    breakpoints : Sequence[float]
        Strictly increasing panel edges, at least two
    n_per_panel : int
        Nodes in each panel

    Raises
    ------
    ArgumentError
        If the breakpoints are not strictly increasing
    """

    edges = np.asarray(breakpoints, dtype=float)
    if edges.size < 2 or np.any(np.diff(edges) <= 0):
        raise ArgumentError("breakpoints", list(edges), "need two or more strictly increasing edges")

    panels = [gauss_legendre(n_per_panel, a, b) for a, b in zip(edges[:-1], edges[1:])]
    return QuadratureRule(
        nodes=np.concatenate([p.nodes for p in panels]),
        weights=np.concatenate([p.weights for p in panels]),
        domain=(float(edges[0]), float(edges[-1])),
    )


def truncation_length(lower: float, cap: Optional[float] = MAX_TRUNCATION_LENGTH) -> float:
    """Length of the truncated half-line ``(lower, lower + length)`` for Airy-type kernels

    Beyond ``lower + length`` the kernel ``Ai(x + y)`` with ``y >= lower`` is below
    ``Ai(16) < 1e-17``, so the discarded tail sits under double precision.
    """

    return float(min(cap, max(MIN_TRUNCATION_LENGTH, AIRY_TAIL_CUT - 2.0 * lower)))


def airy_rule(lower: float, n: Optional[int] = DEFAULT_NODES, length: Optional[float] = None) -> QuadratureRule:
    """Quadrature rule for ``(lower, infinity)`` truncated at ``lower + length``

    Panels have widths 1, 2, 4, ... from the lower end so that kernels decaying
    quickly away from it stay resolved. The last panel is merged into its neighbour
    when it would be shorter than half of it.

    Parameters
    ----------
    lower : float
        Lower end of the half-line
    n : Optional int
        Target node count, split evenly across panels. Defaults to 60
    length : Optional float
        Truncation length. Defaults to :func:`truncation_length` of `lower`
    """

    if length is None:
        length = truncation_length(lower)
    if not length > 0:
        raise ArgumentError("length", length, "truncation length must be positive")

    edges = [0.0]
    width = 1.0
    while edges[-1] + width < length:
        edges.append(edges[-1] + width)
        width *= 2.0
    if len(edges) > 1 and length - edges[-1] < 0.5 * (edges[-1] - edges[-2]):
        edges.pop()
    edges.append(length)

    per_panel = max(2, math.ceil(n / (len(edges) - 1)))
    return composite_gauss_legendre([lower + e for e in edges], per_panel)


def nystrom_matrix(kernel: Kernel, rule_x: QuadratureRule, rule_y: QuadratureRule) -> np.ndarray:
    """Samples `kernel` on the node grid and applies symmetric square-root weights

    Raises
    ------
    EvaluationError
        If any kernel sample is not finite; carries the offending node pair
    """

    shape = (len(rule_x), len(rule_y))
    with np.errstate(over="ignore", invalid="ignore"):
        values = np.broadcast_to(np.asarray(kernel(rule_x.nodes[:, None], rule_y.nodes[None, :]), dtype=float), shape)

    finite = np.isfinite(values)
    if not finite.all():
        i, j = np.argwhere(~finite)[0]
        raise EvaluationError((float(rule_x.nodes[i]), float(rule_y.nodes[j])))

    return rule_x.sqrt_weights[:, None] * values * rule_y.sqrt_weights[None, :]


def lu_determinant(matrix: np.ndarray) -> Tuple[float, Tuple[np.ndarray, np.ndarray]]:
    """Determinant by LU with partial pivoting

    Returns
    -------
    The determinant and the ``(lu, piv)`` factorisation for reuse with
    :func:`scipy.linalg.lu_solve`
    """

    lu, piv = linalg.lu_factor(matrix, check_finite=False)
    swaps = np.count_nonzero(piv != np.arange(piv.size))
    det = float(np.prod(np.diag(lu)))
    return (-det if swaps % 2 else det), (lu, piv)


def fredholm_det_scalar(kernel: Kernel, rule: QuadratureRule) -> float:
    """Returns ``det(I - W^{1/2} K W^{1/2})``"""

    matrix = nystrom_matrix(kernel, rule, rule)
    det, _ = lu_determinant(np.eye(len(rule)) - matrix)
    return det


def block_matrices(kernel: BlockKernel, rule1: QuadratureRule, rule2: QuadratureRule):
    """Weighted samples of the four blocks, as ``((M11, M12), (M21, M22))``"""

    rules = (rule1, rule2)
    return tuple(
        tuple(nystrom_matrix(kernel.entries[i][j], rules[i], rules[j]) for j in range(2))
        for i in range(2)
    )


def fredholm_det_block(kernel: BlockKernel, rule1: QuadratureRule, rule2: QuadratureRule) -> float:
    """Returns ``det(I - M)`` for the assembled ``(n1 + n2)``-square block matrix"""

    blocks = block_matrices(kernel, rule1, rule2)
    matrix = np.block([[blocks[0][0], blocks[0][1]], [blocks[1][0], blocks[1][1]]])
    det, _ = lu_determinant(np.eye(matrix.shape[0]) - matrix)
    return det


def kernel_trace_product(k12: Kernel, k21: Kernel, rule1: QuadratureRule, rule2: QuadratureRule) -> float:
    """Returns ``int int k12(x, y) k21(y, x) dx dy`` by tensor quadrature

    `x` runs over `rule1` and `y` over `rule2`.
    """

    m12 = nystrom_matrix(k12, rule1, rule2)
    m21 = nystrom_matrix(k21, rule2, rule1)
    return float(np.einsum("ij,ji->", m12, m21))


def det_minus_one(matrix: np.ndarray) -> float:
    """Returns ``det(I - M) - 1`` without cancellation when M is small

    For ``||M||_F < 1/2`` this sums ``log det(I - M) = -sum_k tr(M^k) / k`` and
    applies ``expm1``; otherwise it falls back to an LU log-determinant.
    """

    norm = float(np.linalg.norm(matrix))
    size = matrix.shape[0]
    if norm < SERIES_RADIUS:
        total = 0.0
        power = matrix
        for k in range(1, _MAX_SERIES_TERMS + 1):
            total += float(np.trace(power)) / k
            # |tr(M^j)| <= size * norm^j bounds every remaining term
            if size * norm ** (k + 1) / ((k + 1) * (1.0 - norm)) <= np.finfo(float).eps * abs(total):
                break
            if norm ** (k + 1) == 0.0:
                break
            power = power @ matrix
        return float(np.expm1(-total))

    sign, logdet = np.linalg.slogdet(np.eye(size) - matrix)
    return float(sign * np.exp(logdet) - 1.0)


def fredholm_series(matrix: np.ndarray, order: int) -> np.ndarray:
    """First terms ``e_1, ..., e_order`` of ``det(I - M) = sum_n (-1)^n e_n``

    The ``e_n`` are the elementary symmetric functions of the eigenvalues, obtained
    from power traces through Newton's identities.
    """

    if order < 1:
        raise ArgumentError("order", order, "need at least one term")

    traces = np.empty(order + 1)
    power = matrix
    for k in range(1, order + 1):
        traces[k] = np.trace(power)
        if k < order:
            power = power @ matrix

    elementary = np.zeros(order + 1)
    elementary[0] = 1.0
    for k in range(1, order + 1):
        signs = (-1.0) ** np.arange(k)
        elementary[k] = np.dot(signs * elementary[k - 1::-1][:k], traces[1:k + 1]) / k
    return elementary[1:]
