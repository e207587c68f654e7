import math
from typing import Optional, Sequence, Union

import numpy as np

from pyredeem.models.equilibrium import ResponseTable
from pyredeem.models.server import ServerCostModel
from pyredeem.models.user import UserProfile
from pyredeem.utils.errors import ConvergenceError, DomainError
from pyredeem.utils.numeric import EXP_LIMIT, bisect_decreasing, golden_section_max

ROOT_XTOL = 1e-6
FIXED_POINT_TOL = 1e-6

Price = Union[float, np.ndarray]
SEARCH_XTOL = 1e-6


def _accuracy(model: ServerCostModel, x: np.ndarray) -> np.ndarray:
    z = np.minimum(model.A2 * x * model.log_a, EXP_LIMIT)
    return model.A1 * np.exp(z) - model.A3


def _accuracy_slope(model: ServerCostModel, x: np.ndarray) -> np.ndarray:
    z = np.minimum(model.A2 * x * model.log_a, EXP_LIMIT)
    return model.A1 * model.A2 * model.log_a * np.exp(z)


def _privacy(user: UserProfile, x: np.ndarray) -> np.ndarray:
    if user.k_i == 1.0:
        return user.lambda_i * np.log1p(x)
    exponent = 1.0 - user.k_i
    return user.lambda_i * np.power(x + 1.0, exponent) / exponent


def _privacy_slope(user: UserProfile, x: np.ndarray) -> np.ndarray:
    return user.lambda_i * np.power(x + 1.0, -user.k_i)


def _marginal(
    user: UserProfile, y_bar: np.ndarray, s: np.ndarray, B: Price, model: ServerCostModel
) -> np.ndarray:
    kept = np.maximum(user.d_i - y_bar, 0.0)
    return (
        -_privacy_slope(user, kept)
        + user.theta_i * _accuracy_slope(model, model.d_total - y_bar - s)
        + B
    )


def marginal_payoff(
    user: UserProfile, y_bar: float, s: float, B: float, model: ServerCostModel
) -> float:
    """
    Description: dV/dȳ = −P'(d_i − ȳ) + θ_i·A'(d_total − ȳ − s) + B for a user who sells ȳ
    in total while everybody else keeps s on the server.

    Raises: DomainError when ȳ lies outside [0, d_i].
    """
    if y_bar < 0.0 or y_bar > user.d_i:
        raise DomainError(f"own total {y_bar} outside [0, {user.d_i}]")
    return float(_marginal(user, np.asarray(y_bar), np.asarray(s), B, model))


def selling_payoff(
    user: UserProfile, y_bar: Price, s: Price, B: Price, model: ServerCostModel
) -> np.ndarray:
    """V = P(d_i − ȳ) + B·ȳ − θ_i·A(d_total − ȳ − s), element-wise over ȳ, s and B."""
    y_bar = np.asarray(y_bar, dtype=float)
    redeemed = np.maximum(model.d_total - y_bar - np.asarray(s, dtype=float), 0.0)
    return (
        _privacy(user, np.maximum(user.d_i - y_bar, 0.0))
        + B * y_bar
        - user.theta_i * _accuracy(model, redeemed)
    )


def payoff_curvature(
    user: UserProfile, y_bar: float, s: float, model: ServerCostModel
) -> float:
    """d²V/dȳ² = P''(d_i − ȳ) − θ_i·A''(d_total − ȳ − s); never positive for valid users."""
    kept = user.d_i - y_bar
    privacy = -user.k_i * user.lambda_i * (kept + 1.0) ** (-user.k_i - 1.0)
    x = model.d_total - y_bar - s
    z = min(model.A2 * x * model.log_a, EXP_LIMIT)
    accuracy = model.A1 * (model.A2 * model.log_a) ** 2 * math.exp(z)
    return privacy - user.theta_i * accuracy


def _check_concave(user: UserProfile, model: ServerCostModel) -> None:
    if not 0.0 <= user.k_i <= 1.0 or model.a <= 1.0:
        raise DomainError(
            f"payoff is not concave for k={user.k_i}, a={model.a}",
            details={"k_i": user.k_i, "a": model.a},
        )


def best_responses(
    user: UserProfile,
    s: np.ndarray,
    B: Price,
    model: ServerCostModel,
    downstream: Optional[ResponseTable] = None,
    retained_base: float = 0.0,
) -> np.ndarray:
    """
    Description: Optimal own totals for a vector of predecessor supplies s.

    Without a downstream table, or when the user ignores accuracy (θ = 0), the first-order
    condition is solved by bisection. Otherwise the payoff
    P(d_i − ȳ) + B·ȳ − θ·A(d − base − s − ȳ − R(s + ȳ)) is maximised by golden-section
    search with R read off the downstream table.

    Args:
    - user (UserProfile): The responding user.
    - s (np.ndarray): Aggregate supplied by the user's predecessors.
    - B (float): The user's selling price.
    - model (ServerCostModel): Server cost parameters.
    - downstream (ResponseTable, optional): Response of every later user.
    - retained_base (float): Data kept on the server without trading (uninformed users).

    Returns: Array of optimal totals within [0, d_i].
    """
    _check_concave(user, model)
    s = np.asarray(s, dtype=float)
    others = s + retained_base
    if user.d_i <= 0.0:
        return np.zeros_like(s)

    if downstream is None or user.theta_i == 0.0:
        return bisect_decreasing(
            lambda y: _marginal(user, y, others, B, model),
            np.zeros_like(s),
            np.full_like(s, user.d_i),
            xtol=ROOT_XTOL,
        )

    def objective(y: np.ndarray) -> np.ndarray:
        later = downstream.downstream_at(s + y)
        redeemed = np.maximum(model.d_total - others - y - later, 0.0)
        return (
            _privacy(user, np.maximum(user.d_i - y, 0.0))
            + B * y
            - user.theta_i * _accuracy(model, redeemed)
        )

    return golden_section_max(
        objective, np.zeros_like(s), np.full_like(s, user.d_i), xtol=SEARCH_XTOL
    )


def best_response(
    user: UserProfile,
    s: float,
    B: float,
    model: ServerCostModel,
    downstream: Optional[ResponseTable] = None,
    retained_base: float = 0.0,
) -> float:
    """Scalar form of :func:`best_responses`."""
    return float(
        best_responses(user, np.array([s]), B, model, downstream, retained_base)[0]
    )


def simultaneous_responses(
    users: Sequence[UserProfile],
    prices: np.ndarray,
    model: ServerCostModel,
    retained_base: float = 0.0,
    tol: float = FIXED_POINT_TOL,
    max_iterations: int = 500,
) -> np.ndarray:
    """
    Description: Nash fixed point of simultaneous best responses to personal prices.

    Each user answers its own price while treating everybody else's sale (plus the
    untraded base) as given. Gauss-Seidel sweeps repeat until aggregate retention moves by
    less than ``tol``. Columns of ``prices`` are independent scenarios solved together.

    Args:
    - users (Sequence[UserProfile]): Sellers.
    - prices (np.ndarray): Shape (len(users), m), one column per scenario.
    - model (ServerCostModel): Server cost parameters.
    - retained_base (float): Data on the server that nobody trades.
    - tol (float): Stopping threshold on aggregate change.
    - max_iterations (int): Sweep cap.

    Returns: Array of shape (len(users), m) with each user's total sold.

    Raises: ConvergenceError when the sweeps do not settle.
    """
    prices = np.atleast_2d(np.asarray(prices, dtype=float))
    amounts = np.zeros_like(prices)
    if not users:
        return amounts
    for _ in range(max_iterations):
        previous_total = amounts.sum(axis=0)
        for index, user in enumerate(users):
            others = amounts.sum(axis=0) - amounts[index]
            amounts[index] = best_responses(
                user, others, prices[index], model, retained_base=retained_base
            )
        if np.all(np.abs(amounts.sum(axis=0) - previous_total) < tol):
            return amounts
    raise ConvergenceError(
        f"best responses did not settle within {max_iterations} sweeps",
        details={"aggregate": amounts.sum(axis=0).tolist()},
    )
