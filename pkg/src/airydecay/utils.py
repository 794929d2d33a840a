import logging
import math
import os
from typing import Iterator, Optional, Tuple

import numpy as np

from .constants import THREADS_ENV_VAR
from .errors import ArgumentError

logger = logging.getLogger(__name__)


class LogValue:
    """A real number stored as a sign and the logarithm of its magnitude

    Used wherever a value such as ``exp(-(4/3) u^3)`` would underflow a plain float.
    A zero is represented with sign 0 and ``log_abs = -inf``.

    Parameters
    ----------
    sign : int
        -1, 0 or +1
    log_abs : float
        Natural logarithm of the absolute value
    """

    __slots__ = ("_sign", "_log_abs")

    def __init__(self, sign: int, log_abs: float):
        if log_abs == -math.inf or sign == 0:
            sign, log_abs = 0, -math.inf
        self._sign = int(sign)
        self._log_abs = float(log_abs)

    @classmethod
    def from_value(cls, value: float) -> "LogValue":
        """Builds a `LogValue` from a plain float"""

        if value == 0:
            return cls(0, -math.inf)
        return cls(1 if value > 0 else -1, math.log(abs(value)))

    @property
    def sign(self) -> int:
        return self._sign

    @property
    def log_abs(self) -> float:
        return self._log_abs

    @property
    def value(self) -> float:
        """The plain float value (may underflow to 0)"""

        if self._sign == 0:
            return 0.0
        return self._sign * math.exp(self._log_abs)

    def __neg__(self) -> "LogValue":
        return LogValue(-self._sign, self._log_abs)

    def __mul__(self, other: "LogValue") -> "LogValue":
        return LogValue(self._sign * other.sign, self._log_abs + other.log_abs)

    def __repr__(self) -> str:
        return f"LogValue({self._sign}, exp({self._log_abs}))"

    def __eq__(self, other) -> bool:
        if not isinstance(other, LogValue):
            return NotImplemented
        return self._sign == other.sign and self._log_abs == other.log_abs

    def __hash__(self):
        return hash((self._sign, self._log_abs))


def log_add(*log_terms: float) -> float:
    """Returns ``log(sum(exp(t)))`` for nonnegative terms given by their logarithms"""

    terms = [t for t in log_terms if t != -math.inf]
    if not terms:
        return -math.inf
    return float(np.logaddexp.reduce(terms))


def thread_limit(default: Optional[int] = None) -> int:
    """Returns the parallelism cap

    The cap is read from the ``AIRY_DECAY_THREADS`` environment variable and falls
    back to `default`, then to the CPU count.

    Raises
    ------
    ArgumentError
        If the environment variable is set to something other than a positive integer
    """

    raw = os.environ.get(THREADS_ENV_VAR)
    if raw is None or raw.strip() == "":
        return default or os.cpu_count() or 1

    try:
        threads = int(raw)
    except ValueError:
        raise ArgumentError(THREADS_ENV_VAR, raw, "expected a positive integer") from None

    if threads < 1:
        raise ArgumentError(THREADS_ENV_VAR, raw, "expected a positive integer")
    return threads


def chunk_ranges(total: int, size: int) -> Iterator[Tuple[int, int]]:
    """Splits ``range(total)`` into consecutive ``(start, count)`` chunks

    Parameters
    ----------
    total : int
        The number of items to split
    size : int
        The maximum chunk length

    Raises
    ------
    ValueError
        If `size` is not positive
    """

    if size < 1:
        raise ValueError(f"Invalid chunk size \"{size}\"")

    start = 0
    while start < total:
        count = min(size, total - start)
        yield start, count
        start += count
