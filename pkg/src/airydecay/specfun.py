"""
Airy function Ai on the real line, in an overflow-safe scaled form, plus the
closed-form bounds used as error budgets by the kernel and covariance modules.

The scaled form is ``log_scaled(x) = log|Ai(x)| + (2/3) max(x, 0)^{3/2}``. For
``0 <= x <= 8`` the value comes from :func:`scipy.special.airye` and for ``-8 <= x < 0``
from :func:`scipy.special.airy`; outside that range
the large-argument expansions are summed directly so that ``log_scaled`` stays
finite all the way to ``|x| = 1e4``.
"""

import logging
import math
from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np
from numpy.polynomial import polynomial as P
from scipy import special

from .constants import AIRY_BRANCH_CUT, AIRY_MAX_ARGUMENT, AIRY_SERIES_TERMS
from .errors import DomainError

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]

BRANCHES = ("auto", "series", "asymptotic")

_LOG_TWO_SQRT_PI = math.log(2.0 * math.sqrt(math.pi))
_INV_SQRT_PI = 1.0 / math.sqrt(math.pi)


def _expansion_coefficients(terms: int) -> np.ndarray:
    coefficients = np.empty(terms)
    coefficients[0] = 1.0
    for k in range(1, terms):
        coefficients[k] = coefficients[k - 1] * (6 * k - 5) * (6 * k - 3) * (6 * k - 1) / (216.0 * k * (2 * k - 1))
    return coefficients


_COEFFICIENTS = _expansion_coefficients(AIRY_SERIES_TERMS)
_EVEN = _COEFFICIENTS[0::2]
_ODD = _COEFFICIENTS[1::2]


@dataclass(frozen=True)
class AiryValue:
    """Ai evaluated at a single point

    Attributes
    ----------
    x : float
        The argument
    value : float
        Ai(x); underflows to 0 for very large x, use `log_scaled` there
    log_scaled : float
        ``log|Ai(x)| + (2/3) max(x, 0)^{3/2}``
    """

    x: float
    value: float
    log_scaled: float


def _check_arguments(x: np.ndarray):
    if not np.all(np.isfinite(x)):
        bad = x[~np.isfinite(x)].flat[0]
        raise DomainError("x", float(bad), "argument must be finite")
    if np.any(np.abs(x) > AIRY_MAX_ARGUMENT):
        bad = x[np.abs(x) > AIRY_MAX_ARGUMENT].flat[0]
        raise DomainError("x", float(bad), f"|x| must not exceed {AIRY_MAX_ARGUMENT:g}")


def _series_branch(x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    # airye is NaN for real x < 0, where no scaling applies anyway
    scaled = np.where(x >= 0, special.airye(np.abs(x))[0], special.airy(np.minimum(x, 0.0))[0])
    with np.errstate(divide="ignore"):
        return np.log(np.abs(scaled)), np.sign(scaled)


def _right_asymptotic(x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    zeta = (2.0 / 3.0) * x ** 1.5
    series = P.polyval(-1.0 / zeta, _COEFFICIENTS)
    return np.log(series) - _LOG_TWO_SQRT_PI - 0.25 * np.log(x), np.ones_like(x)


def _left_asymptotic(x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    t = -x
    zeta = (2.0 / 3.0) * t ** 1.5
    inv_square = -1.0 / (zeta * zeta)
    even = P.polyval(inv_square, _EVEN)
    odd = P.polyval(inv_square, _ODD) / zeta
    phase = zeta - 0.25 * math.pi
    value = _INV_SQRT_PI * t ** -0.25 * (np.cos(phase) * even + np.sin(phase) * odd)
    with np.errstate(divide="ignore"):
        return np.log(np.abs(value)), np.sign(value)


def airy_log_scaled(x: ArrayLike, branch: str = "auto") -> Tuple[np.ndarray, np.ndarray]:
    """Vectorised scaled Airy function

    Parameters
    ----------
    x : ArrayLike
        Arguments, each finite with ``|x| <= 1e4``
    branch : Optional str
        ``"auto"`` picks the library branch for ``|x| <= 8`` and the large-argument
        expansions beyond. ``"series"`` and ``"asymptotic"`` force one branch
        everywhere (the asymptotic branch needs ``|x| >= 5``).
        Defaults to ``"auto"``

    Raises
    ------
    DomainError
        If an argument is not finite, too large, or too small for the forced asymptotic branch

    Returns
    -------
    A ``(log_scaled, sign)`` pair of arrays shaped like `x`
    """

    if branch not in BRANCHES:
        raise DomainError("branch", branch, f"expected one of {', '.join(BRANCHES)}")

    x = np.asarray(x, dtype=float)
    _check_arguments(x)

    if branch == "series":
        return _series_branch(x)

    log_scaled = np.empty_like(x)
    sign = np.empty_like(x)
    if branch == "asymptotic":
        if np.any(np.abs(x) < 5.0):
            raise DomainError("x", float(x[np.abs(x) < 5.0].flat[0]), "asymptotic branch needs |x| >= 5")
        right = x > 0
        left = ~right
        middle = np.zeros_like(x, dtype=bool)
    else:
        right = x > AIRY_BRANCH_CUT
        left = x < -AIRY_BRANCH_CUT
        middle = ~(right | left)

    if np.any(middle):
        log_scaled[middle], sign[middle] = _series_branch(x[middle])
    if np.any(right):
        log_scaled[right], sign[right] = _right_asymptotic(x[right])
    if np.any(left):
        log_scaled[left], sign[left] = _left_asymptotic(x[left])

    return log_scaled, sign


def airy_ai_log(x: ArrayLike) -> Tuple[np.ndarray, np.ndarray]:
    """Returns ``(log|Ai(x)|, sign Ai(x))`` elementwise"""

    x = np.asarray(x, dtype=float)
    log_scaled, sign = airy_log_scaled(x)
    return log_scaled - (2.0 / 3.0) * np.maximum(x, 0.0) ** 1.5, sign


def airy_ai(x: float) -> AiryValue:
    """Evaluates Ai at a single real point

    Parameters
    ----------
    x : float
        The argument, finite with ``|x| <= 1e4``

    Raises
    ------
    DomainError
        If `x` is not finite or out of range

    Returns
    -------
    An `AiryValue`
    """

    log_scaled, sign = airy_log_scaled(np.array([x], dtype=float))
    log_scaled, sign = float(log_scaled[0]), float(sign[0])
    value = sign * math.exp(log_scaled - (2.0 / 3.0) * max(x, 0.0) ** 1.5) if sign != 0 else 0.0
    return AiryValue(x=float(x), value=value, log_scaled=log_scaled)


def airy_ai_scaled(x: float) -> float:
    """Returns ``Ai(x) exp((2/3) x^{3/2})`` for ``x >= 0``

    Raises
    ------
    DomainError
        If `x` is negative
    """

    if not x >= 0:
        raise DomainError("x", x, "the scaled form is only defined for x >= 0")

    return math.exp(airy_ai(x).log_scaled)


def airy_bound_budget(x: float, u: float) -> float:
    """Certified upper bound ``u^{-1/2} exp(-(2/3) u^3 - x u)`` for ``|Ai(x + u^2)|``

    Parameters
    ----------
    x : float
        Shift, ``x >= 0``
    u : float
        Time separation, ``u > 0``

    Raises
    ------
    DomainError
        If ``x < 0`` or ``u <= 0``
    """

    if not x >= 0:
        raise DomainError("x", x, "bound holds for x >= 0")
    if not u > 0:
        raise DomainError("u", u, "bound degenerates at u = 0")

    return math.exp(log_airy_bound_budget(x, u))


def log_airy_bound_budget(x: float, u: float) -> float:
    """Logarithm of :func:`airy_bound_budget`, safe for large `u`"""

    return -0.5 * math.log(u) - (2.0 / 3.0) * u ** 3 - x * u


def airy_bound_exp(x: ArrayLike) -> ArrayLike:
    """``e^{-x}``, an upper bound for ``|Ai(x)|`` on the whole real line"""

    return np.exp(-np.asarray(x, dtype=float))


def airy_bound_decay(x: ArrayLike) -> ArrayLike:
    """``e^{-(2/3)x^{3/2}} / (2 sqrt(pi) x^{1/4})``, an upper bound for Ai on ``x > 0``"""

    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise DomainError("x", float(x[x <= 0].flat[0]), "bound holds for x > 0")
    return np.exp(-(2.0 / 3.0) * x ** 1.5 - _LOG_TWO_SQRT_PI - 0.25 * np.log(x))
