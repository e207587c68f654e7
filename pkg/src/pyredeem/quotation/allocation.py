from typing import List, Optional, Sequence

import numpy as np

from pyredeem.models.market import OversupplyStrategy
from pyredeem.utils.errors import DomainError
from pyredeem.utils.numeric import floor_to_unit


def _greedy(units: Sequence[int], order: Sequence[int], capacity: int) -> List[int]:
    allocation = [0] * len(units)
    left = capacity
    for index in order:
        take = min(units[index], left)
        allocation[index] = take
        left -= take
        if left == 0:
            break
    return allocation


def _proportional(units: Sequence[int], capacity: int) -> List[int]:
    total = sum(units)
    floors = [capacity * q // total for q in units]
    remainders = [capacity * q % total for q in units]
    residue = capacity - sum(floors)
    # largest remainder first, lower index on ties
    ranked = sorted(range(len(units)), key=lambda i: (-remainders[i], i))
    for index in ranked[:residue]:
        floors[index] += 1
    return floors


def allocate_oversupply(
    supplies: Sequence[float],
    demand: float,
    strategy: OversupplyStrategy,
    unit: float = 1.0,
    rng: Optional[np.random.Generator] = None,
) -> List[float]:
    """
    Description: Ration one round's purchase when offered supply exceeds demand.

    Args:
    - supplies (Sequence[float]): Per-user offers, all multiples of ``unit``.
    - demand (float): What the server wants this round.
    - strategy (OversupplyStrategy): Rationing rule.
    - unit (float): Trading granularity Δd.
    - rng (np.random.Generator, optional): Required for RANDOM_ORDER.

    Returns:
    List[float]: Per-user purchases summing to the largest unit multiple not above demand,
    each no larger than the user's offer.

    Raises:
    DomainError: if demand is negative or does not fall short of the total supply.
    """
    units = [floor_to_unit(q, unit) for q in supplies]
    if demand < 0.0:
        raise DomainError(f"demand must be nonnegative, got {demand}")
    capacity = floor_to_unit(demand, unit)
    if capacity >= sum(units):
        raise DomainError(
            f"no oversupply to ration: demand {demand} covers supply {sum(units) * unit}"
        )

    indices = range(len(units))
    match strategy:
        case OversupplyStrategy.MAJOR_FIRST:
            allocation = _greedy(units, sorted(indices, key=lambda i: (-units[i], i)), capacity)
        case OversupplyStrategy.MINOR_FIRST:
            allocation = _greedy(units, sorted(indices, key=lambda i: (units[i], i)), capacity)
        case OversupplyStrategy.PROPORTIONAL:
            allocation = _proportional(units, capacity)
        case OversupplyStrategy.RANDOM_ORDER:
            if rng is None:
                raise DomainError("random-order rationing needs a random generator")
            order = [int(i) for i in rng.permutation(len(units))]
            allocation = _greedy(units, order, capacity)
        case _:
            raise DomainError(f"unknown oversupply strategy {strategy}")
    return [count * unit for count in allocation]
