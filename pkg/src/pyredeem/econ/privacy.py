import math

from pyredeem.models.user import UserProfile
from pyredeem.utils.errors import DomainError

_TOLERANCE = 1e-9


def _remaining(user: UserProfile, y_i: float) -> float:
    if y_i < 0.0 or y_i > user.d_i + _TOLERANCE * max(1.0, user.d_i):
        raise DomainError(f"sold amount {y_i} outside [0, {user.d_i}]")
    return max(0.0, user.d_i - y_i)


def privacy_utility(user: UserProfile, x: float) -> float:
    """P_i(x): λ(x+1)^(1−k)/(1−k) for k < 1, λ·ln(x+1) for k = 1."""
    if x < 0.0 or x > user.d_i + _TOLERANCE * max(1.0, user.d_i):
        raise DomainError(f"redeemed amount {x} outside [0, {user.d_i}]")
    if user.k_i == 1.0:
        return user.lambda_i * math.log1p(x)
    exponent = 1.0 - user.k_i
    return user.lambda_i * (x + 1.0) ** exponent / exponent


def privacy_slope(user: UserProfile, x: float) -> float:
    """P_i'(x) = λ(x+1)^(−k)."""
    return user.lambda_i * (x + 1.0) ** (-user.k_i)


def privacy_curvature(user: UserProfile, x: float) -> float:
    """P_i''(x) = −kλ(x+1)^(−k−1), never positive."""
    return -user.k_i * user.lambda_i * (x + 1.0) ** (-user.k_i - 1.0)


def privacy_loss(user: UserProfile, remaining: float, delta: float) -> float:
    """P_i(D) − P_i(D − δ), computed without cancellation for small δ."""
    if delta <= 0.0:
        return 0.0
    base = remaining + 1.0
    shrink = math.log1p(-delta / base)
    if user.k_i == 1.0:
        return -user.lambda_i * shrink
    exponent = 1.0 - user.k_i
    return -user.lambda_i * base**exponent * math.expm1(exponent * shrink) / exponent


def reservation_price(user: UserProfile, y_i: float) -> float:
    """Lowest unit price at which the user sells a marginal unit: λ(D+1)^(−k)."""
    remaining = _remaining(user, y_i)
    if remaining <= 0.0:
        raise DomainError("user has no data left to sell")
    return privacy_slope(user, remaining)


def min_price_for(user: UserProfile, y_i: float, delta: float) -> float:
    """Unit price that exactly compensates the privacy lost by selling δ more units."""
    remaining = _remaining(user, y_i)
    if remaining <= 0.0:
        raise DomainError("user has no data left to sell")
    if delta <= 0.0 or delta > remaining + _TOLERANCE * max(1.0, remaining):
        raise DomainError(f"delta {delta} outside (0, {remaining}]")
    return privacy_loss(user, remaining, min(delta, remaining)) / delta


def user_supply(user: UserProfile, y_i: float, B: float) -> float:
    """
    Description: Additional units the user sells at unit price B having sold y_i
    (privacy-only decision).

    Closed form clamp(D + 1 − (λ/B)^(1/k), 0, D); bang-bang for k = 0 with ties kept private.
    """
    remaining = _remaining(user, y_i)
    if B < 0.0:
        raise DomainError(f"price must be nonnegative, got {B}")
    if remaining <= 0.0 or B == 0.0:
        return 0.0
    if user.lambda_i == 0.0:
        return remaining
    if user.k_i == 0.0:
        return remaining if B > user.lambda_i else 0.0
    log_keep = (math.log(user.lambda_i) - math.log(B)) / user.k_i
    if log_keep > math.log(remaining + 1.0):
        return 0.0
    keep = math.exp(log_keep)
    return min(max(remaining + 1.0 - keep, 0.0), remaining)
