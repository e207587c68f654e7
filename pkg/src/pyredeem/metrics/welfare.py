from typing import Sequence

from pyredeem.econ.privacy import privacy_utility
from pyredeem.econ.server import accuracy_degradation, server_cost
from pyredeem.models.market import MarketState
from pyredeem.models.metrics import PaymentConvention, WelfareBreakdown, WelfareConvention
from pyredeem.models.outcome import MechanismOutcome
from pyredeem.models.server import ServerCostModel
from pyredeem.models.user import UserProfile
from pyredeem.utils.errors import DomainError


def outcome_from_state(
    state: MarketState,
    users: Sequence[UserProfile],
    mechanism: str = "IIQ",
    payments: PaymentConvention = PaymentConvention.EXECUTION,
) -> MechanismOutcome:
    """
    Description: Turn a terminated quotation into a MechanismOutcome.

    Informed users retain what they sold; the uninformed keep their endowment on the server.
    Trades are paid at their execution quote, or at the previous quote with
    ``PaymentConvention.PREVIOUS`` (round 0 keeps B0).
    """
    if len(state.sold) != len(users):
        raise DomainError(f"state has {len(state.sold)} users, population {len(users)}")
    paid = [0.0] * len(users)
    for trade in state.ledger:
        price = trade.unit_price
        if payments == PaymentConvention.PREVIOUS:
            price = state.schedule.price_at(max(trade.round - 1, 0))
        paid[trade.user] += trade.quantity * price
    retention = [sold if user.informed else user.d_i for sold, user in zip(state.sold, users)]
    return MechanismOutcome(
        mechanism=mechanism,
        retention=tuple(float(y) for y in retention),
        payments=tuple(paid),
        parameters={"payments": payments.value},
        ledger=tuple(state.ledger),
        rounds=state.round,
        fulfillment=state.fulfillment,
        terminal_price=state.price,
    )


def welfare(
    outcome: MechanismOutcome,
    users: Sequence[UserProfile],
    model: ServerCostModel,
    convention: WelfareConvention = WelfareConvention.RELATIVE,
) -> WelfareBreakdown:
    """
    Description: Server payoff, users' payoff and social welfare of an outcome.

    RELATIVE measures every term against the no-trade state, in which informed users redeem
    everything and uninformed users keep their data on the server. ABSOLUTE counts the
    privacy utility of the data users keep and the accuracy loss at the final retention, with
    the server's saving measured against full redemption.

    Args:
    - outcome (MechanismOutcome): Retention and payments per user.
    - users (Sequence[UserProfile]): The population the outcome refers to.
    - model (ServerCostModel): Server cost parameters.
    - convention (WelfareConvention): Reference point of the payoffs.

    Returns:
    WelfareBreakdown with ξ_s, ξ_u, ξ = ξ_s + ξ_u, the same welfare computed without
    transfers, and each user's payoff.

    Raises:
    DomainError: if the outcome does not match the population.
    """
    if len(outcome.retention) != len(users):
        raise DomainError(
            f"outcome covers {len(outcome.retention)} users, population has {len(users)}"
        )
    for y, user in zip(outcome.retention, users):
        if y < -1e-9 or y > user.d_i * (1.0 + 1e-12) + 1e-9:
            raise DomainError(f"retention {y} outside [0, {user.d_i}]")

    retained = min(outcome.total_retained, model.d_total)
    base = float(sum(u.d_i for u in users if not u.informed))
    relative = convention == WelfareConvention.RELATIVE
    reference = base if relative else 0.0

    accuracy_now = accuracy_degradation(model, model.d_total - retained)
    accuracy_reference = accuracy_degradation(model, model.d_total - base) if relative else 0.0
    saving = server_cost(model, reference) - server_cost(model, retained)

    user_payoffs = []
    non_monetary = 0.0
    for user, y, paid in zip(users, outcome.retention, outcome.payments):
        kept = max(user.d_i - y, 0.0)
        privacy = privacy_utility(user, kept)
        if relative:
            kept_before = user.d_i if user.informed else 0.0
            privacy -= privacy_utility(user, kept_before)
        accuracy = -user.theta_i * (accuracy_now - accuracy_reference)
        non_monetary += privacy + accuracy
        user_payoffs.append(paid + privacy + accuracy)

    server_payoff = saving - outcome.total_payments
    users_payoff = float(sum(user_payoffs))
    return WelfareBreakdown(
        server_payoff=server_payoff,
        users_payoff=users_payoff,
        welfare=server_payoff + users_payoff,
        transfer_free=saving + non_monetary,
        user_payoffs=tuple(user_payoffs),
    )
