from typing import Dict, List, Sequence

from pyredeem.econ.privacy import user_supply
from pyredeem.models.market import MarketPhase, MarketState
from pyredeem.models.user import UserProfile
from pyredeem.utils.numeric import floor_to_unit


def greedy_persistence(
    state: MarketState, users: Sequence[UserProfile], unit: float = 1.0
) -> List[int]:
    """
    Description: Check that every informed user follows the once-started, never-stopped
    selling path during the quotation phase.

    After each fully served round, a greedy user's cumulative sale equals its floored
    supply from zero at that round's price. Rounds with rationing are skipped because
    rationing truncates the path; the next served round must catch up again.

    Returns: Indices of users whose ledger leaves the greedy path.
    """
    cumulative: Dict[int, Dict[int, float]] = {}
    for trade in state.ledger:
        cumulative.setdefault(trade.round, {}).setdefault(trade.user, 0.0)
        cumulative[trade.round][trade.user] += trade.quantity

    running = [0.0] * len(users)
    violations = set()
    for record in state.rounds:
        if record.phase != MarketPhase.QUOTATION:
            continue
        for user, quantity in cumulative.get(record.round, {}).items():
            running[user] += quantity
        if record.purchased < record.supply:
            continue
        for index, user in enumerate(users):
            if not user.informed:
                continue
            target = floor_to_unit(user_supply(user, 0.0, record.price), unit) * unit
            if abs(running[index] - target) > 1e-9 * max(1.0, target):
                violations.add(index)
    return sorted(violations)
