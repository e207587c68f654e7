from dataclasses import dataclass
from typing import Tuple

import numpy as np


@dataclass(frozen=True, eq=False)
class ResponseTable:
    """
    Tabulated best response of one user over the aggregate supply s of its predecessors.

    ``response[j]`` is the user's optimal total at ``grid[j]`` and ``downstream[j]`` is the
    aggregate supplied by this user and every later user from that point on.
    """

    user: int
    grid: np.ndarray
    response: np.ndarray
    downstream: np.ndarray

    def response_at(self, s: np.ndarray) -> np.ndarray:
        return np.interp(s, self.grid, self.response)

    def downstream_at(self, s: np.ndarray) -> np.ndarray:
        return np.interp(s, self.grid, self.downstream)


@dataclass(frozen=True)
class SpneProfile:
    """
    Selling profile along the equilibrium path: who sells (order), when (periods), at what
    price and how much, with prefix sums of the amounts.
    """

    order: Tuple[int, ...]
    periods: Tuple[int, ...]
    prices: Tuple[float, ...]
    amounts: Tuple[float, ...]
    cumulative: Tuple[float, ...]
    terminal_round: int
    iterations: int = 1

    @property
    def total(self) -> float:
        return self.cumulative[-1] if self.cumulative else 0.0


@dataclass(frozen=True)
class InductionResult:
    profile: SpneProfile
    tables: Tuple[ResponseTable, ...]
    grid_step: float


@dataclass(frozen=True)
class DominanceCertificate:
    """Revenue of a two-round split against the same total sold at the later round."""

    split_payoff: float
    concentrated_payoff: float
    dominates: bool
    equal: bool

    def __bool__(self) -> bool:
        return bool(self.dominates)


@dataclass(frozen=True)
class ScheduleChoice:
    B0: float
    dB: float
    objective: float
    evaluated: Tuple[Tuple[float, float, float], ...]
    skipped: Tuple[Tuple[float, float, str], ...]
