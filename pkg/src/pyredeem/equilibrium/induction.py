import logging
from typing import List, Optional, Sequence, Tuple

import numpy as np

from pyredeem.equilibrium.responses import best_response, best_responses
from pyredeem.models.equilibrium import InductionResult, ResponseTable, SpneProfile
from pyredeem.models.server import ServerCostModel
from pyredeem.models.user import UserProfile
from pyredeem.utils.errors import DomainError, GridResolutionError

logger = logging.getLogger(__name__)

DEFAULT_GRID_STEP = 10.0
MIN_GRID_STEP = 1.0
REFINEMENT_FACTOR = 4.0
RESIDUAL_TOLERANCE = 1.0


def supply_grid(users: Sequence[UserProfile], grid_step: float) -> np.ndarray:
    """Strictly increasing grid over [0, Σ d_j] with the end point included."""
    upper = float(sum(u.d_i for u in users))
    count = int(np.ceil(upper / grid_step)) if upper > 0.0 else 0
    grid = np.linspace(0.0, count * grid_step, count + 1)
    if grid[-1] < upper:
        grid = np.append(grid, upper)
    if grid.size == 1:
        grid = np.array([0.0, grid_step])
    return grid


def backward_induction(
    users: Sequence[UserProfile],
    prices: Sequence[float],
    model: ServerCostModel,
    grid_step: float = DEFAULT_GRID_STEP,
    periods: Optional[Sequence[int]] = None,
    order: Optional[Sequence[int]] = None,
    retained_base: float = 0.0,
) -> InductionResult:
    """
    Description: Equilibrium of the sequential selling game for a fixed order and prices.

    Response tables are built from the last seller backwards over a grid of predecessor
    supply, each user optimising against the interpolated reaction of everyone after it.
    The chain is then rolled forward from zero, with every response recomputed exactly
    against the downstream table. When a table misses the exact response by more than
    one data unit, the grid is refined by a factor of four (not below one unit) and the
    tables are rebuilt.

    Args:
    - users (Sequence[UserProfile]): Sellers in selling order.
    - prices (Sequence[float]): Each seller's unit price.
    - model (ServerCostModel): Server cost parameters.
    - grid_step (float): Starting spacing of the predecessor-supply grid.
    - periods (Sequence[int], optional): Selling rounds; defaults to the dense rank of prices.
    - order (Sequence[int], optional): Population indices of the sellers; defaults to 0..n-1.
    - retained_base (float): Data kept on the server without trading.

    Returns: InductionResult with the forward-rolled profile, one table per seller and the
    grid spacing that was finally used.

    Raises:
    - DomainError: mismatched inputs or a nonpositive grid step.
    - GridResolutionError: a table still misses the exact response at the finest grid.
    """
    if grid_step <= 0.0:
        raise DomainError(f"grid_step must be positive, got {grid_step}")
    if len(prices) != len(users):
        raise DomainError(f"{len(users)} users but {len(prices)} prices")
    indices = tuple(order) if order is not None else tuple(range(len(users)))
    if periods is None:
        ranks = {price: rank for rank, price in enumerate(sorted(set(prices)))}
        periods = [ranks[price] for price in prices]
    if len(indices) != len(users) or len(periods) != len(users):
        raise DomainError("order, periods and users must have equal length")
    if not users:
        return InductionResult(SpneProfile((), (), (), (), (), 0), (), grid_step)

    step = grid_step
    while True:
        try:
            tables, amounts = _induct(users, prices, model, step, indices, retained_base)
            break
        except GridResolutionError:
            if step <= MIN_GRID_STEP:
                raise
            step = max(step / REFINEMENT_FACTOR, MIN_GRID_STEP)
            logger.info("refining the supply grid to %s units", step)

    logger.debug("backward induction over %d sellers, total %s", len(users), sum(amounts))
    profile = SpneProfile(
        order=indices,
        periods=tuple(int(t) for t in periods),
        prices=tuple(float(p) for p in prices),
        amounts=tuple(amounts),
        cumulative=tuple(np.cumsum(amounts).tolist()),
        terminal_round=max(int(t) for t in periods),
    )
    return InductionResult(profile, tables, step)


def _induct(
    users: Sequence[UserProfile],
    prices: Sequence[float],
    model: ServerCostModel,
    grid_step: float,
    indices: Sequence[int],
    retained_base: float,
) -> Tuple[Tuple[ResponseTable, ...], List[float]]:
    grid = supply_grid(users, grid_step)
    tables: List[Optional[ResponseTable]] = [None] * len(users)
    downstream: Optional[ResponseTable] = None
    for position in range(len(users) - 1, -1, -1):
        user = users[position]
        response = best_responses(
            user, grid, prices[position], model, downstream, retained_base
        )
        total = response.copy()
        if downstream is not None:
            total += downstream.downstream_at(grid + response)
        downstream = ResponseTable(indices[position], grid, response, total)
        tables[position] = downstream

    amounts = []
    s = 0.0
    for position, user in enumerate(users):
        later = tables[position + 1] if position + 1 < len(users) else None
        amount = best_response(user, s, prices[position], model, later, retained_base)
        tabulated = float(tables[position].response_at(s))
        if abs(tabulated - amount) > RESIDUAL_TOLERANCE:
            raise GridResolutionError(
                f"response table for user {indices[position]} is off by "
                f"{abs(tabulated - amount):.3f} units; use a smaller grid_step than {grid_step}",
                details={"user": indices[position], "grid_step": grid_step},
            )
        s += amount
        amounts.append(amount)
    return tuple(t for t in tables if t is not None), amounts
