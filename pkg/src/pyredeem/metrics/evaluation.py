import logging
from typing import Sequence

from pyredeem.metrics.fairness import fairness
from pyredeem.metrics.regret import regret
from pyredeem.metrics.welfare import welfare
from pyredeem.models.metrics import RunMetrics, WelfareConvention
from pyredeem.models.outcome import MechanismOutcome
from pyredeem.models.server import ServerCostModel
from pyredeem.models.user import UserProfile

logger = logging.getLogger(__name__)


def run_metrics(
    outcome: MechanismOutcome,
    users: Sequence[UserProfile],
    model: ServerCostModel,
    convention: WelfareConvention = WelfareConvention.RELATIVE,
) -> RunMetrics:
    """All per-run metrics of one outcome. Regret is only defined for quote-based outcomes."""
    breakdown = welfare(outcome, users, model, convention)
    informed = [i for i, u in enumerate(users) if u.informed]
    payoffs = [max(breakdown.user_payoffs[i], 0.0) for i in informed]
    if any(breakdown.user_payoffs[i] < 0.0 for i in informed):
        logger.debug("%s: negative user payoffs clipped for fairness", outcome.mechanism)
    indices = fairness(payoffs) if payoffs else fairness([0.0])
    regrets = ()
    if outcome.terminal_price is not None:
        regrets = tuple(regret(i, outcome, users, model) for i in range(len(users)))
    return RunMetrics(
        server_payoff=breakdown.server_payoff,
        users_payoff=breakdown.users_payoff,
        welfare=breakdown.welfare,
        transfer_free=breakdown.transfer_free,
        jain=indices.jain,
        cv=indices.cv,
        min_max_ratio=indices.min_max_ratio,
        regret=regrets,
        fulfillment=outcome.fulfillment,
        rounds=outcome.rounds,
    )
