from dataclasses import dataclass

from pyredeem.utils.errors import DomainError


@dataclass(frozen=True)
class PriceSchedule:
    """Deterministic ascending quotes B^t = B0 + t·dB."""

    B0: float = 0.001
    dB: float = 0.001

    def __post_init__(self) -> None:
        if self.B0 < 0.0:
            raise DomainError(f"B0 must be nonnegative, got {self.B0}")
        if not self.dB > 0.0:
            raise DomainError(f"dB must be positive, got {self.dB}")

    def price_at(self, round_index: int) -> float:
        if round_index < 0:
            raise DomainError(f"round index must be nonnegative, got {round_index}")
        return self.B0 + round_index * self.dB

    def first_round_above(self, threshold: float) -> int:
        """Smallest t with price_at(t) strictly above threshold."""
        if threshold < self.B0:
            return 0
        t = int((threshold - self.B0) // self.dB) + 1
        while t > 0 and self.price_at(t - 1) > threshold:
            t -= 1
        while self.price_at(t) <= threshold:
            t += 1
        return t
