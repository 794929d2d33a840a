"""
Weight fields, passage times and geodesics on a finite square ``[0, n)^2``.

A `PassageField` either retains its weights, in which case the vectorised
anti-diagonal sweep below runs on the stored array and geodesics are available, or
it is streamed, in which case passage times are recomputed cell by cell from the
counter-based generator and nothing of size ``n^2`` is held.
"""

import logging
import math
from dataclasses import dataclass, field as dataclass_field
from typing import Optional, Tuple, Union

import numpy as np

from ..constants import MAX_FIELD_SIZE, MAX_SEED
from ..errors import ArgumentError, StateError
from . import kernels

logger = logging.getLogger(__name__)

Point = Tuple[int, int]
ArrayLike = Union[float, np.ndarray]

STAR_CENTER = 4.0
STAR_SCALE = 2.0 ** (4.0 / 3.0)


@dataclass(frozen=True, eq=False)
class PassageField:
    """Exponential weights on ``[0, n)^2``

    Attributes
    ----------
    n : int
        Side of the square
    seed : int
        Seed the weights were derived from
    weights : Optional[np.ndarray]
        ``weights[x, y]``; None for a streamed field
    """

    n: int
    seed: int
    weights: Optional[np.ndarray] = dataclass_field(default=None, repr=False)

    def __post_init__(self):
        if self.weights is not None:
            if self.weights.shape != (self.n, self.n):
                raise ArgumentError("weights", self.weights.shape, f"expected shape ({self.n}, {self.n})")
            if not np.all(self.weights > 0):
                raise ArgumentError("weights", float(self.weights.min()), "weights must be positive")
            self.weights.setflags(write=False)

    @classmethod
    def from_weights(cls, weights, seed: Optional[int] = 0) -> "PassageField":
        """Wraps an explicit square array of positive weights"""

        weights = np.array(weights, dtype=float)
        if weights.ndim != 2 or weights.shape[0] != weights.shape[1]:
            raise ArgumentError("weights", weights.shape, "expected a square array")
        return cls(n=weights.shape[0], seed=seed, weights=weights)

    @property
    def retained(self) -> bool:
        return self.weights is not None

    def __contains__(self, point: Point) -> bool:
        x, y = point
        return 0 <= x < self.n and 0 <= y < self.n

    def weight(self, point: Point) -> float:
        x, y = point
        if self.weights is not None:
            return float(self.weights[x, y])
        return float(kernels.cell_weight(self.seed, 0, x, y))


@dataclass(frozen=True, eq=False)
class GeodesicPath:
    """An up-right path with the passage time it attains

    Attributes
    ----------
    points : np.ndarray
        ``(m, 2)`` array of lattice points, each step ``+(1, 0)`` or ``+(0, 1)``
    value : float
        Sum of the weights on the path, in sweep order
    ties : int
        Steps where both predecessors were equal
    tie_break : str
        The predecessor taken on a tie; always ``"e2"`` (from below)
    """

    points: np.ndarray
    value: float
    ties: int = 0
    tie_break: str = "e2"

    def __len__(self) -> int:
        return len(self.points)

    @property
    def start(self) -> Point:
        return tuple(int(c) for c in self.points[0])

    @property
    def end(self) -> Point:
        return tuple(int(c) for c in self.points[-1])

    def times(self) -> np.ndarray:
        """The anti-diagonal index ``x + y`` of every point"""

        return self.points.sum(axis=1)

    def positions(self) -> np.ndarray:
        """``(x - y) / 2`` at every point"""

        return 0.5 * (self.points[:, 0] - self.points[:, 1])

    def cells(self) -> set:
        return set(map(tuple, self.points.tolist()))


def check_seed(seed: int):
    if int(seed) != seed or not 0 <= seed < MAX_SEED:
        raise ArgumentError("seed", seed, "seed must be an integer in [0, 2^63)")


def _check_point(field: PassageField, point: Point, name: str):
    if len(point) != 2 or point not in field:
        raise ArgumentError(name, point, f"point must lie in [0, {field.n})^2")


def sample_field(n: int, seed: int, retain: Optional[bool] = True) -> PassageField:
    """Draws an ``n x n`` field of i.i.d. Exp(1) weights

    Parameters
    ----------
    n : int
        Side of the square, ``1 <= n <= 4000``
    seed : int
        Seed in ``[0, 2^63)``; equal seeds give identical fields
    retain : Optional bool
        Store the weights. A streamed field answers passage times but not geodesics.
        Defaults to True

    Raises
    ------
    ArgumentError
        If `n` or `seed` is out of range
    """

    if int(n) != n or not 1 <= n <= MAX_FIELD_SIZE:
        raise ArgumentError("n", n, f"field size must be in [1, {MAX_FIELD_SIZE}]")
    check_seed(seed)

    weights = kernels.fill_weights(seed, 0, 0, 0, n, n) if retain else None
    logger.debug("sampled %dx%d field (seed %d, retained=%s)", n, n, seed, retain)
    return PassageField(n=int(n), seed=int(seed), weights=weights)


def _sweep(field: PassageField, start: Point, last: int, corner: Optional[Point] = None, keep_codes: bool = False):
    """Anti-diagonal sweep from `start` up to ``x + y = last``

    Returns the values on the last diagonal indexed by ``x`` (``-inf`` off the region)
    and, if asked, the predecessor codes of every diagonal from the start's.
    """

    n = field.n
    px, py = start
    qx, qy = corner if corner is not None else (n - 1, n - 1)
    first = px + py
    xs = np.arange(n)

    values = np.full(n, -np.inf)
    values[px] = field.weights[px, py]
    codes = np.zeros((last - first + 1, n), dtype=np.uint8) if keep_codes else None

    for t in range(first + 1, last + 1):
        ys = t - xs
        inside = (xs >= px) & (xs <= qx) & (ys >= py) & (ys <= qy)
        below = values
        left = np.concatenate(([-np.inf], values[:-1]))
        from_below = below >= left

        values = np.full(n, -np.inf)
        values[inside] = field.weights[xs[inside], ys[inside]] + np.where(from_below, below, left)[inside]
        if keep_codes:
            codes[t - first] = np.where(below == left, kernels.TIE, np.where(from_below, kernels.FROM_BELOW, kernels.FROM_LEFT))

    return values, codes


def passage_point(field: PassageField, p: Point, q: Point) -> float:
    """Last passage time ``L_{p, q}``, both end weights included

    Raises
    ------
    ArgumentError
        If a point is outside the field or ``p`` is not below and left of ``q``
    """

    _check_point(field, p, "p")
    _check_point(field, q, "q")
    if not (p[0] <= q[0] and p[1] <= q[1]):
        raise ArgumentError("q", q, f"q must dominate p = {p} componentwise")

    if not field.retained:
        return float(kernels.point_sweep(field.seed, 0, p[0], p[1], q[0], q[1]))

    values, _ = _sweep(field, p, q[0] + q[1], corner=q)
    return float(values[q[0]])


def _check_line(field: PassageField, p: Point, line_index: int):
    _check_point(field, p, "p")
    reach = 2 * (field.n - 1) if field.retained else field.n - 1
    if int(line_index) != line_index or not p[0] + p[1] <= line_index <= reach:
        raise ArgumentError("line_index", line_index, f"line must satisfy {p[0] + p[1]} <= x + y <= {reach}")


def passage_line(field: PassageField, p: Point, line_index: int) -> float:
    """Point-to-line passage time from `p` to ``{x + y = line_index}`` in one sweep

    On a streamed field the line must satisfy ``line_index <= n - 1`` so that no path
    leaves the square.

    Raises
    ------
    ArgumentError
        If the line is not reachable from `p` inside the field
    """

    _check_line(field, p, line_index)
    if not field.retained:
        return float(kernels.line_sweep(field.seed, 0, p[0], p[0], p[0] + p[1], line_index)[0])

    values, _ = _sweep(field, p, line_index)
    return float(values.max())


def geodesic_line(field: PassageField, p: Point, line_index: int) -> GeodesicPath:
    """The maximising path from `p` to ``{x + y = line_index}``

    The path ends at the first maximising endpoint (smallest ``x``) and breaks ties
    toward the predecessor below.

    Raises
    ------
    StateError
        If the field is streamed
    ArgumentError
        If the line is not reachable from `p`
    """

    if not field.retained:
        raise StateError("geodesic on a streamed field; sample it with retain=True")
    _check_line(field, p, line_index)

    values, codes = _sweep(field, p, line_index, keep_codes=True)
    first = p[0] + p[1]
    x = int(np.argmax(values))

    xs = np.empty(line_index - first + 1, dtype=np.int64)
    xs[-1] = x
    ties = 0
    for step in range(line_index - first, 0, -1):
        code = codes[step, x]
        if code == kernels.TIE:
            ties += 1
        elif code == kernels.FROM_LEFT:
            x -= 1
        xs[step - 1] = x

    points = np.column_stack([xs, first + np.arange(xs.size) - xs])
    value = 0.0
    for px, py in points:
        value = field.weights[px, py] + value
    if ties:
        logger.debug("geodesic from %s resolved %d ties toward e2", p, ties)

    return GeodesicPath(points=points, value=float(value), ties=ties)


def rescale_star(raw: ArrayLike, N: int) -> ArrayLike:
    """``(raw - 4N) / (2^{4/3} N^{1/3})``

    Raises
    ------
    ArgumentError
        If ``N < 1``
    """

    if N < 1:
        raise ArgumentError("N", N, "N must be at least 1")
    scale = STAR_SCALE * N ** (1.0 / 3.0)
    if np.ndim(raw):
        return (np.asarray(raw, dtype=float) - STAR_CENTER * N) / scale
    return (raw - STAR_CENTER * N) / scale


def star_offset(N: int, u: float) -> int:
    """``floor(u (2N)^{2/3})``, the start ``(k, -k)`` of the shifted point-to-line problem"""

    if N < 1:
        raise ArgumentError("N", N, "N must be at least 1")
    if u < 0:
        raise ArgumentError("u", u, "u must be nonnegative")
    return int(math.floor(u * (2.0 * N) ** (2.0 / 3.0)))
