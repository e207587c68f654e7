import logging
from typing import Sequence

import numpy as np

from pyredeem.econ.server import optimal_retention, server_cost, server_demand
from pyredeem.equilibrium.responses import simultaneous_responses
from pyredeem.models.outcome import MechanismOutcome
from pyredeem.models.server import ServerCostModel
from pyredeem.models.user import UserProfile
from pyredeem.utils.errors import DomainError

logger = logging.getLogger(__name__)


def bsp_solve(
    users: Sequence[UserProfile], model: ServerCostModel, price_grid: Sequence[float]
) -> MechanismOutcome:
    """
    Description: Best single uniform price chosen by the server.

    At every grid price, informed users supply their joint best responses (accuracy
    included) and the server buys up to its demand, rationing proportionally when supply
    exceeds it. The price with the highest server payoff C(base) − C(base + bought) − B·bought
    wins; ties keep the lowest price.

    Raises: DomainError on an empty or nonpositive grid.
    """
    grid = np.asarray(sorted(price_grid), dtype=float)
    if grid.size == 0:
        raise DomainError("price grid must be nonempty")
    if np.any(grid <= 0.0):
        raise DomainError("price grid must be positive")

    informed = [i for i, u in enumerate(users) if u.informed]
    sellers = [users[i] for i in informed]
    retained_base = float(sum(u.d_i for u in users if not u.informed))
    y_max = optimal_retention(model).y_max
    supplies = simultaneous_responses(
        sellers,
        np.tile(grid, (len(sellers), 1)),
        model,
        retained_base=retained_base,
    )

    base_cost = server_cost(model, retained_base)
    best_index, best_payoff, best_bought = 0, -np.inf, 0.0
    for column, price in enumerate(grid):
        offered = float(supplies[:, column].sum()) if sellers else 0.0
        demand = server_demand(model, retained_base, price) if retained_base < y_max else 0.0
        bought = min(offered, demand)
        payoff = base_cost - server_cost(model, retained_base + bought) - price * bought
        if payoff > best_payoff:
            best_index, best_payoff, best_bought = column, payoff, bought

    price = float(grid[best_index])
    column = supplies[:, best_index] if sellers else np.zeros(0)
    offered = float(column.sum())
    share = best_bought / offered if offered > 0.0 else 0.0
    retention = [u.d_i if not u.informed else 0.0 for u in users]
    payments = [0.0] * len(users)
    for position, index in enumerate(informed):
        retention[index] = float(column[position] * share)
        payments[index] = price * retention[index]
    logger.debug("BSP price %s buys %s units", price, best_bought)
    return MechanismOutcome(
        mechanism="BSP",
        retention=tuple(retention),
        payments=tuple(payments),
        parameters={"price": price, "rationing": "proportional", "server_payoff": best_payoff},
    )
