import json
from typing import Any, Dict, Optional


class RedeemError(Exception):
    """Base class for every error raised by pyredeem."""

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.details: Dict[str, Any] = details or {}


class DomainError(RedeemError, ValueError):
    """An argument lies outside the domain of the operation."""


class BeliefExhaustedError(DomainError):
    """The termination-price prior has no survival mass left at the queried price."""


class DegenerateFitError(DomainError):
    """A prior cannot be fitted because the observed history has zero variance."""


class ConvergenceError(RedeemError):
    """An iterative procedure hit its iteration cap without settling."""


class GridResolutionError(RedeemError):
    """A response table is too coarse to reproduce the directly computed response."""


class ConfigError(RedeemError):
    """A configuration file or flag is unknown, malformed or inconsistent."""


def parse_error(error: Exception) -> str:
    """
    Description: Parse an exception raised inside an experiment cell into a JSON string.
    Args: error: The exception to parse.
    Returns: A JSON string with the error type, message and any attached details.
    """
    if not isinstance(error, RedeemError):
        return json.dumps({"type": type(error).__name__, "message": str(error)})
    return json.dumps(
        {
            "type": type(error).__name__,
            "message": str(error),
            "details": error.details,
        },
        default=repr,
        sort_keys=True,
    )
