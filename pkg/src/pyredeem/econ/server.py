import math

from pyredeem.models.server import RetentionCase, RetentionTarget, ServerCostModel
from pyredeem.utils.errors import DomainError
from pyredeem.utils.numeric import guarded_exp

_TOLERANCE = 1e-9


def _check_range(value: float, upper: float, name: str) -> None:
    slack = _TOLERANCE * max(1.0, upper)
    if value < -slack or value > upper + slack:
        raise DomainError(f"{name}={value} outside [0, {upper}]")


def accuracy_degradation(model: ServerCostModel, x: float) -> float:
    """A(x) = A1·a^(A2·x) − A3 for x units redeemed."""
    _check_range(x, model.d_total, "x")
    return model.A1 * guarded_exp(model.A2 * x * model.log_a) - model.A3


def accuracy_slope(model: ServerCostModel, x: float) -> float:
    """A'(x) = A1·A2·ln a·a^(A2·x)."""
    return model.A1 * model.A2 * model.log_a * guarded_exp(model.A2 * x * model.log_a)


def accuracy_curvature(model: ServerCostModel, x: float) -> float:
    """A''(x), positive for every valid model."""
    return accuracy_slope(model, x) * model.A2 * model.log_a


def retraining_time(model: ServerCostModel, y: float) -> float:
    """T(y) = T0·y below full retention; exactly zero at y = d_total (nothing to unlearn)."""
    _check_range(y, model.d_total, "y")
    if y >= model.d_total:
        return 0.0
    return model.T0 * y


def server_cost(model: ServerCostModel, y: float, limit: bool = False) -> float:
    """
    Description: Server cost C(y) = α·A(d − y) + β·T(y) of retaining y units.

    Args:
    - model (ServerCostModel): Cost parameters.
    - y (float): Retained amount in [0, d_total].
    - limit (bool): Evaluate the continuous branch β·T0·y even at y = d_total, i.e. the
      left limit instead of the jump value.

    Returns: The cost.

    Raises: DomainError when y is outside [0, d_total].
    """
    _check_range(y, model.d_total, "y")
    y = min(max(y, 0.0), model.d_total)
    time = model.T0 * y if limit else retraining_time(model, y)
    return model.alpha * accuracy_degradation(model, model.d_total - y) + model.beta * time


def optimal_retention(model: ServerCostModel) -> RetentionTarget:
    """
    Description: Cost-minimising retention target on the continuous branch.

    The stationary point is y* = d + log_a(α·A1·A2·ln a / (β·T0)) / A2. It is clamped to
    [0, d_total] and labelled keep-none, keep-all or interior.

    Returns: RetentionTarget with the clamped y_max, its case and the raw stationary point
    (None when the cost has no stationary point).
    """
    time_weight = model.beta * model.T0
    accuracy_weight = model.alpha * model.A1 * model.A2 * model.log_a
    if time_weight == 0.0:
        return RetentionTarget(model.d_total, RetentionCase.KEEP_ALL, None)
    if accuracy_weight == 0.0:
        return RetentionTarget(0.0, RetentionCase.KEEP_NONE, None)

    stationary = model.d_total + (
        math.log(accuracy_weight / time_weight) / (model.A2 * model.log_a)
    )
    if stationary >= model.d_total:
        return RetentionTarget(model.d_total, RetentionCase.KEEP_ALL, stationary)
    if stationary <= 0.0:
        return RetentionTarget(0.0, RetentionCase.KEEP_NONE, stationary)
    return RetentionTarget(stationary, RetentionCase.INTERIOR, stationary)


def server_demand(model: ServerCostModel, y: float, B: float) -> float:
    """
    Description: Additional units η the server buys at unit price B having retained y.

    Closed form δ* = ln(α·A1·A2·ln a·a^(A2(d−y)) / (β·T0 + B)) / (A2·ln a), evaluated in
    log space and clamped to [0, y_max − y].

    Raises: DomainError when y exceeds y_max or B is negative.
    """
    if B < 0.0:
        raise DomainError(f"price must be nonnegative, got {B}")
    y_max = optimal_retention(model).y_max
    if y > y_max + _TOLERANCE * max(1.0, y_max) or y < 0.0:
        raise DomainError(f"retained amount {y} outside [0, y_max={y_max}]")
    headroom = max(0.0, y_max - y)
    if headroom == 0.0:
        return 0.0

    accuracy_weight = model.alpha * model.A1 * model.A2 * model.log_a
    marginal_cost = model.beta * model.T0 + B
    if accuracy_weight == 0.0:
        return 0.0
    if marginal_cost == 0.0:
        return headroom
    log_ratio = (
        math.log(accuracy_weight)
        + model.A2 * (model.d_total - y) * model.log_a
        - math.log(marginal_cost)
    )
    delta = log_ratio / (model.A2 * model.log_a)
    return min(max(delta, 0.0), headroom)


def buy_all_price(model: ServerCostModel, y: float) -> float:
    """
    Description: Average cost change per unit of buying everything up to y_max,
    (C(y_max) − C(y)) / (y_max − y), on the continuous cost branch.

    Raises: DomainError when y is not strictly below y_max (including the keep-none case).
    """
    y_max = optimal_retention(model).y_max
    if not 0.0 <= y < y_max:
        raise DomainError(f"buy-all price needs 0 <= y < y_max={y_max}, got {y}")
    change = server_cost(model, y_max, limit=True) - server_cost(model, y, limit=True)
    return change / (y_max - y)
