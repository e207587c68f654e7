from dataclasses import dataclass
from enum import Enum
from typing import Optional, Tuple


class WelfareConvention(Enum):
    RELATIVE = "relative"
    ABSOLUTE = "absolute"


class PaymentConvention(Enum):
    EXECUTION = "execution"
    PREVIOUS = "previous"


@dataclass(frozen=True)
class WelfareBreakdown:
    server_payoff: float
    users_payoff: float
    welfare: float
    transfer_free: float
    user_payoffs: Tuple[float, ...]


@dataclass(frozen=True)
class FairnessIndices:
    jain: float
    cv: float
    min_max_ratio: float


@dataclass(frozen=True)
class RunMetrics:
    server_payoff: float
    users_payoff: float
    welfare: float
    transfer_free: float
    jain: float
    cv: float
    min_max_ratio: float
    regret: Tuple[float, ...]
    fulfillment: Optional[float]
    rounds: Optional[int]

    @property
    def regret_ub(self) -> float:
        return float(sum(self.regret))
