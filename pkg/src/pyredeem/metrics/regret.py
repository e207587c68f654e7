from typing import Sequence

from pyredeem.econ.privacy import privacy_utility
from pyredeem.econ.server import accuracy_degradation
from pyredeem.equilibrium.responses import best_response
from pyredeem.models.outcome import MechanismOutcome
from pyredeem.models.server import ServerCostModel
from pyredeem.models.user import UserProfile
from pyredeem.utils.errors import DomainError


def regret(
    index: int,
    outcome: MechanismOutcome,
    users: Sequence[UserProfile],
    model: ServerCostModel,
) -> float:
    """
    Description: Upper bound on a user's ex-post regret.

    The benchmark sells one amount in a single round at the final quote, with everyone
    else's realised retention held fixed and rationing ignored. Since no trade was priced
    above the final quote, the realised payoff cannot beat it.

    Raises: DomainError when the outcome carries no final quote.
    """
    if outcome.terminal_price is None:
        raise DomainError(f"{outcome.mechanism} outcome has no final quote to compare with")
    user = users[index]
    if not user.informed or user.d_i <= 0.0:
        return 0.0
    own = outcome.retention[index]
    others = min(outcome.total_retained, model.d_total) - own
    price = outcome.terminal_price

    def payoff(amount: float, paid: float) -> float:
        redeemed = max(model.d_total - others - amount, 0.0)
        return (
            privacy_utility(user, max(user.d_i - amount, 0.0))
            + paid
            - user.theta_i * accuracy_degradation(model, redeemed)
        )

    best = best_response(user, others, price, model)
    ideal = max(payoff(best, best * price), payoff(0.0, 0.0))
    return ideal - payoff(own, outcome.payments[index])
