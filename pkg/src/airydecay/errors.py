from typing import Any, Optional, Sequence, Tuple

__all__ = (
    "AiryDecayError",
    "DomainError",
    "ArgumentError",
    "EvaluationError",
    "SolverError",
    "StateError",
    "UnreliableEstimateError",
    "OutputError",
)


class AiryDecayError(Exception):
    """Base class for every error raised by this package"""

    pass


class DomainError(AiryDecayError, ValueError):
    """Raised when a numerical routine is called outside of its mathematical domain

    Parameters
    ----------
    argument : str
        The name of the offending argument
    value : Any
        The value that was rejected
    reason : Optional str
        Human readable explanation appended to the message
    """

    def __init__(self, argument: str, value: Any, reason: Optional[str] = None):
        self.argument = argument
        self.value = value
        message = f"Invalid value for \"{argument}\": {value!r}"
        if reason:
            message += f" ({reason})"
        super().__init__(message)


class ArgumentError(AiryDecayError, ValueError):
    """Raised when a parameter is malformed (wrong range, inverted interval, bad seed)

    Parameters
    ----------
    argument : str
        The name of the offending argument
    value : Any
        The value that was rejected
    reason : Optional str
        Human readable explanation appended to the message
    """

    def __init__(self, argument: str, value: Any, reason: Optional[str] = None):
        self.argument = argument
        self.value = value
        message = f"Bad argument \"{argument}\": {value!r}"
        if reason:
            message += f" ({reason})"
        super().__init__(message)


class EvaluationError(AiryDecayError, ArithmeticError):
    """Raised when a kernel produces a non-finite sample

    Attributes
    ----------
    node_pair : Tuple[float, float]
        The quadrature nodes ``(x, y)`` at which the kernel was non-finite
    """

    def __init__(self, node_pair: Tuple[float, float], hint: Optional[str] = None):
        self.node_pair = node_pair
        message = f"Kernel sample at (x={node_pair[0]!r}, y={node_pair[1]!r}) is not finite"
        if hint:
            message += f"; {hint}"
        super().__init__(message)


class SolverError(AiryDecayError, ArithmeticError):
    """Raised when ``1 - K_ii`` cannot be factorised"""

    def __init__(self, block: int, threshold: float):
        self.block = block
        self.threshold = threshold
        super().__init__(f"1 - K_{block}{block} is numerically singular at s={threshold!r}")


class StateError(AiryDecayError, RuntimeError):
    """Raised when an operation needs data that the object did not retain"""

    def __init__(self, what: str):
        self.what = what
        super().__init__(what)


class UnreliableEstimateError(AiryDecayError, ValueError):
    """Raised when a fit is asked to use covariance values flagged as unreliable

    Attributes
    ----------
    offending : Sequence[float]
        The time separations whose estimates were rejected
    """

    def __init__(self, offending: Sequence[float]):
        self.offending = list(offending)
        listed = ", ".join(f"{u:g}" for u in self.offending)
        super().__init__(f"Refusing to fit unreliable covariance values at u = {listed}")


class OutputError(AiryDecayError, OSError):
    """Raised when a result file cannot be written"""

    def __init__(self, path: str, cause: Exception):
        self.path = path
        self.cause = cause
        super().__init__(f"Unable to write \"{path}\": {cause.__class__.__name__} - {cause}")
