"""
Custom exceptions for the onebit-unfold package.
Provides structured error handling with error codes, details and CLI exit codes.
"""
from typing import Any, Dict, Optional


class OneBitCSException(Exception):
    """Base exception for all onebit-unfold errors."""

    exit_code: int = 1

    def __init__(
        self,
        message: str,
        error_code: Optional[str] = None,
        details: Optional[Dict[str, Any]] = None,
    ):
        super().__init__(message)
        self.message = message
        self.error_code = error_code or self.__class__.__name__
        self.details = details or {}

    def to_dict(self) -> Dict[str, Any]:
        """Convert exception to a dictionary for reports and CLI output."""
        return {
            "error": self.error_code,
            "message": self.message,
            "details": self.details,
        }


class ConfigurationError(OneBitCSException):
    """Raised when a run configuration is invalid."""

    exit_code = 2


class DataIOError(OneBitCSException):
    """Raised when datasets, checkpoints or reports cannot be read or written."""

    exit_code = 3


class ValidationError(OneBitCSException):
    """Raised when numeric inputs violate an operation's preconditions."""

    exit_code = 2


class DimensionMismatch(ValidationError):
    """Raised when matrix and vector dimensions disagree."""


class ShapeMismatch(ValidationError):
    """Raised when parameter, gradient or batch shapes disagree."""


class NonFiniteValue(ValidationError):
    """Raised when a matrix or vector holds NaN or infinite entries."""


class NotPositiveDefinite(ValidationError):
    """Raised when a covariance matrix has no Cholesky factor."""


class InvalidSparsity(ValidationError):
    """Raised when a sparsity level is outside 1..n."""


class StaleCache(ValidationError):
    """Raised when a layer cache does not match the parameters or gradient."""


class ZeroTruth(ValidationError):
    """Raised when NMSE is requested against an all-zero reference signal."""


class DivergenceDetected(OneBitCSException):
    """Raised when a training loss becomes NaN or infinite."""

    exit_code = 4
