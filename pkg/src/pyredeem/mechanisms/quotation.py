from typing import Optional, Sequence

from pyee import EventEmitter

from pyredeem.equilibrium.ciq import (
    DEFAULT_MAX_ITERATIONS,
    ciq_outcome,
)
from pyredeem.equilibrium.induction import DEFAULT_GRID_STEP
from pyredeem.interfaces.mechanism import IMechanism
from pyredeem.metrics.welfare import outcome_from_state
from pyredeem.models.market import OversupplyStrategy, QuotationConfig
from pyredeem.models.outcome import MechanismOutcome
from pyredeem.models.schedule import PriceSchedule
from pyredeem.models.server import ServerCostModel
from pyredeem.models.user import UserProfile
from pyredeem.quotation.engine import run_quotation
from pyredeem.quotation.ledger import profile_trades


class QuotationMechanism(IMechanism):
    """Information-free ascending quotation with myopic, greedy users."""

    name = "IIQ"

    def __init__(
        self,
        schedule: PriceSchedule,
        unit: float = 1.0,
        oversupply: OversupplyStrategy = OversupplyStrategy.MINOR_FIRST,
        event_emitter: Optional[EventEmitter] = None,
    ):
        self.schedule = schedule
        self.unit = unit
        self.oversupply = oversupply
        self.event_emitter = event_emitter

    def solve(
        self, users: Sequence[UserProfile], model: ServerCostModel, seed: int
    ) -> MechanismOutcome:
        config = QuotationConfig(
            schedule=self.schedule, unit=self.unit, oversupply=self.oversupply, rng_seed=seed
        )
        state = run_quotation(model, users, config, self.event_emitter)
        outcome = outcome_from_state(state, users, mechanism=self.name)
        outcome.parameters["oversupply"] = self.oversupply.value
        return outcome


class CompleteInformationMechanism(IMechanism):
    """Selling profile of fully informed, forward-looking users under a known schedule."""

    name = "CIQ"

    def __init__(
        self,
        schedule: PriceSchedule,
        grid_step: float = DEFAULT_GRID_STEP,
        max_iterations: int = DEFAULT_MAX_ITERATIONS,
    ):
        self.schedule = schedule
        self.grid_step = grid_step
        self.max_iterations = max_iterations

    def solve(
        self, users: Sequence[UserProfile], model: ServerCostModel, seed: int
    ) -> MechanismOutcome:
        profile = ciq_outcome(
            users, self.schedule, model, self.grid_step, self.max_iterations
        )
        retention = [0.0 if u.informed else u.d_i for u in users]
        payments = [0.0] * len(users)
        for index, price, amount in zip(profile.order, profile.prices, profile.amounts):
            retention[index] = amount
            payments[index] = price * amount
        return MechanismOutcome(
            mechanism=self.name,
            retention=tuple(retention),
            payments=tuple(payments),
            parameters={
                "approximation": "fixed point over selling order",
                "iterations": profile.iterations,
            },
            ledger=tuple(profile_trades(profile)),
            rounds=profile.terminal_round,
            terminal_price=self.schedule.price_at(profile.terminal_round),
        )
