from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Optional, Tuple

from pyredeem.models.market import Trade
from pyredeem.utils.errors import DomainError


class BaselineKind(Enum):
    DNR = "DNR"
    GDPR = "GDPR"
    FULL = "FULL"


class OppPayment(Enum):
    """How personalised pricing pays for the retention it buys."""

    BUNDLE = "bundle"
    SUPPORTING = "supporting"


@dataclass(frozen=True)
class MechanismOutcome:
    """
    Uniform result of any mechanism: per-user retained amounts and payments.

    Uninformed users never trade, so their full endowment stays retained.
    """

    mechanism: str
    retention: Tuple[float, ...]
    payments: Tuple[float, ...]
    parameters: Dict[str, Any] = field(default_factory=dict)
    ledger: Tuple[Trade, ...] = ()
    rounds: Optional[int] = None
    fulfillment: Optional[float] = None
    terminal_price: Optional[float] = None

    def __post_init__(self) -> None:
        if len(self.retention) != len(self.payments):
            raise DomainError(
                f"retention and payments differ in length: "
                f"{len(self.retention)} != {len(self.payments)}"
            )
        if any(value < 0.0 for value in self.payments):
            raise DomainError(f"{self.mechanism} produced a negative payment")

    @property
    def total_retained(self) -> float:
        return float(sum(self.retention))

    @property
    def total_payments(self) -> float:
        return float(sum(self.payments))


@dataclass(frozen=True)
class NoiseSpec:
    """Multiplicative estimation noise on lambda and theta, N(0, sigma^2)."""

    sigma: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.sigma < 0.0:
            raise DomainError(f"sigma must be nonnegative, got {self.sigma}")
