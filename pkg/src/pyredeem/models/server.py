import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional

from pyredeem.utils.errors import DomainError


class RetentionCase(Enum):
    KEEP_NONE = "keep-none"
    KEEP_ALL = "keep-all"
    INTERIOR = "interior"


@dataclass(frozen=True)
class ServerCostModel:
    """
    Server-side cost parameters: accuracy degradation A(x) = A1·a^(A2·x) − A3 for x redeemed
    units, retraining time T0 per retained unit, their weights alpha and beta, and the total
    user endowment d_total.
    """

    a: float = math.e
    A1: float = 0.1
    A2: float = 3.33e-5
    A3: float = 0.0
    T0: float = 2.85e-4
    alpha: float = 1500.0
    beta: float = 1.0
    d_total: float = 60000.0

    def __post_init__(self) -> None:
        if not self.a > 1.0:
            raise DomainError(f"exponential base a must exceed 1, got {self.a}")
        if not (self.A1 > 0.0 and self.A2 > 0.0):
            raise DomainError(f"A1 and A2 must be positive, got A1={self.A1}, A2={self.A2}")
        for name in ("A3", "T0", "alpha", "beta"):
            if getattr(self, name) < 0.0:
                raise DomainError(f"{name} must be nonnegative, got {getattr(self, name)}")
        if not self.d_total > 0.0:
            raise DomainError(f"d_total must be positive, got {self.d_total}")

    @property
    def log_a(self) -> float:
        return math.log(self.a)


@dataclass(frozen=True)
class RetentionTarget:
    y_max: float
    case: RetentionCase
    stationary: Optional[float] = None
