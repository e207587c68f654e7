from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional

from pyredeem.models.schedule import PriceSchedule
from pyredeem.utils.errors import DomainError


class MarketPhase(Enum):
    QUOTATION = "quotation"
    POST_QUOTATION = "post-quotation"
    TERMINATED = "terminated"


class OversupplyStrategy(Enum):
    MAJOR_FIRST = "major-first"
    MINOR_FIRST = "minor-first"
    PROPORTIONAL = "proportional"
    RANDOM_ORDER = "random-order"


def oversupply_strategy(value: str) -> Optional[OversupplyStrategy]:
    """Map a config or CLI label (long or short form) to a strategy."""
    match value.strip().lower():
        case "major-first" | "major":
            return OversupplyStrategy.MAJOR_FIRST
        case "minor-first" | "minor":
            return OversupplyStrategy.MINOR_FIRST
        case "proportional" | "prop":
            return OversupplyStrategy.PROPORTIONAL
        case "random-order" | "random":
            return OversupplyStrategy.RANDOM_ORDER
        case _:
            return None


@dataclass(frozen=True)
class Trade:
    round: int
    user: int
    quantity: float
    unit_price: float

    @property
    def payment(self) -> float:
        return self.quantity * self.unit_price


@dataclass(frozen=True)
class RoundRecord:
    """What happened at one quote: demand, total offered supply and total purchased."""

    round: int
    price: float
    phase: MarketPhase
    demand: float
    supply: float
    purchased: float


@dataclass(frozen=True)
class QuotationConfig:
    schedule: PriceSchedule = field(default_factory=PriceSchedule)
    unit: float = 1.0
    oversupply: OversupplyStrategy = OversupplyStrategy.MINOR_FIRST
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if not self.unit > 0.0:
            raise DomainError(f"unit must be positive, got {self.unit}")


@dataclass
class MarketState:
    """
    Mutable state of one quotation run. It is confined to the engine that drives it and is
    handed out once the phase reaches TERMINATED.
    """

    schedule: PriceSchedule
    sold: List[float]
    round: int = 0
    phase: MarketPhase = MarketPhase.QUOTATION
    ledger: List[Trade] = field(default_factory=list)
    rounds: List[RoundRecord] = field(default_factory=list)
    y_max: float = 0.0
    initial_demand: float = 0.0

    @property
    def price(self) -> float:
        return self.schedule.price_at(self.round)

    @property
    def total_sold(self) -> float:
        return float(sum(self.sold))

    @property
    def total_payments(self) -> float:
        return float(sum(trade.payment for trade in self.ledger))

    @property
    def fulfillment(self) -> float:
        """Share of the opening demand that was bought, clipped to [0, 1].

        A post-quotation buy-out can exceed the opening demand; it shows up as a
        POST_QUOTATION round with a nonzero purchase, not in this ratio.
        """
        if self.initial_demand <= 0.0:
            return 0.0
        return min(1.0, self.total_sold / self.initial_demand)
