import logging
from typing import List, Optional, Sequence

from pyee import EventEmitter

from pyredeem.econ.privacy import user_supply
from pyredeem.econ.server import optimal_retention, server_cost, server_demand
from pyredeem.models.market import (
    MarketPhase,
    MarketState,
    QuotationConfig,
    RoundRecord,
    Trade,
)
from pyredeem.models.server import ServerCostModel
from pyredeem.models.user import UserProfile
from pyredeem.quotation.allocation import allocate_oversupply
from pyredeem.utils.numeric import floor_to_unit
from pyredeem.utils.rng import round_stream

logger = logging.getLogger(__name__)


class QuotationEngine:
    """Drives one information-free ascending quotation from the first quote to termination.

    The server announces a uniform unit price each round. Informed users answer with the
    additional amount they are willing to sell at that price. The server buys everything
    offered up to its current demand, rationing by the configured oversupply strategy, and
    the price then rises by one increment. Once demand is exhausted, a post-quotation phase
    checks whether buying every remaining unit beats paying the retraining cost of keeping
    only part of the data.

    Uninformed users never trade; their endowment counts as retained from the start.

    Progress is published on the event emitter:
    - "onphasechange" with the new MarketPhase
    - "onround" with a RoundRecord after every quote
    - "ontrade" with each executed Trade

    Usage:
    - emitter = EventEmitter()
    - emitter.on("ontrade", print)
    - state = QuotationEngine(model, users, config, event_emitter=emitter).run()
    """

    def __init__(
        self,
        model: ServerCostModel,
        users: Sequence[UserProfile],
        config: QuotationConfig,
        event_emitter: Optional[EventEmitter] = None,
        state: Optional[MarketState] = None,
    ):
        """Initialize the engine for one run.

        Args:
            model (ServerCostModel): The server's cost parameters.
            users (Sequence[UserProfile]): The population, indexed as in the ledger.
            config (QuotationConfig): Schedule, trading unit, oversupply rule and seed.
            event_emitter (EventEmitter, optional): Receives phase, round and trade events.
                Defaults to a private emitter nobody listens to.
            state (MarketState, optional): A state to continue instead of a fresh one.
        """
        self._model = model
        self._users = list(users)
        self._config = config
        self._event_emitter = event_emitter if event_emitter is not None else EventEmitter()
        self._retained_base = float(sum(u.d_i for u in self._users if not u.informed))
        self._state = state if state is not None else MarketState(
            schedule=config.schedule,
            sold=[0.0] * len(self._users),
            y_max=optimal_retention(model).y_max,
        )

    @property
    def state(self) -> MarketState:
        return self._state

    @property
    def retained(self) -> float:
        """Everything currently on the server: uninformed endowments plus purchases."""
        return self._retained_base + self._state.total_sold

    def run(self) -> MarketState:
        """Run both phases and return the terminated state.

        Returns:
            MarketState: Final state with the full ledger and per-round records.
        """
        self._set_phase(MarketPhase.QUOTATION)
        self._run_quotation_phase()
        self.run_post_quotation()
        return self._state

    def run_post_quotation(self) -> MarketState:
        """Try the all-or-nothing purchase of the remaining data.

        Skipped when the server's target is full retention or nothing is left. While the
        quote times the remaining amount stays within the saving C(y) − C(d_total), every
        user answers with their ordinary optimal increment. The server buys only when each
        user offers their whole remainder (Σq = d_total − y); otherwise the price rises.
        Ends with the purchase or with the cap breached.

        Returns:
            MarketState: The state in phase TERMINATED.
        """
        model = self._model
        if self._state.y_max < model.d_total and self.retained < model.d_total:
            self._set_phase(MarketPhase.POST_QUOTATION)
            remaining = model.d_total - self.retained
            cap = server_cost(model, self.retained) - server_cost(model, model.d_total)
            while self._state.price * remaining <= cap:
                price = self._state.price
                offers = self._offers(price)
                complete = self._covers_remainder(offers)
                self._record_round(remaining, sum(offers), sum(offers) if complete else 0.0)
                if complete:
                    self._execute(offers, price)
                    logger.debug("post-quotation purchase of %s units at %s", remaining, price)
                    break
                self._state.round += 1
        self._set_phase(MarketPhase.TERMINATED)
        return self._state

    def _run_quotation_phase(self) -> None:
        state = self._state
        unit = self._config.unit
        demand = self._demand()
        state.initial_demand = demand
        while demand > 0.0:
            price = state.price
            offers = self._offers(price)
            supply = sum(offers)
            if supply <= demand:
                purchases = offers
            else:
                purchases = allocate_oversupply(
                    offers,
                    demand,
                    self._config.oversupply,
                    unit,
                    round_stream(self._config.rng_seed, state.round),
                )
            self._record_round(demand, supply, sum(purchases))
            self._execute(purchases, price)
            state.round += 1
            demand = self._demand()
        logger.debug(
            "quotation phase ended at round %d, price %s, sold %s",
            state.round,
            state.price,
            state.total_sold,
        )

    def _demand(self) -> float:
        retained = self.retained
        if retained >= self._state.y_max:
            return 0.0
        eta = server_demand(self._model, retained, self._state.price)
        return floor_to_unit(eta, self._config.unit) * self._config.unit

    def _offers(self, price: float) -> List[float]:
        unit = self._config.unit
        offers = []
        for index, user in enumerate(self._users):
            if not user.informed:
                offers.append(0.0)
                continue
            q = user_supply(user, self._state.sold[index], price)
            offers.append(floor_to_unit(q, unit) * unit)
        return offers

    def _covers_remainder(self, offers: Sequence[float]) -> bool:
        unit = self._config.unit
        for index, user in enumerate(self._users):
            if not user.informed:
                continue
            rest = floor_to_unit(user.d_i - self._state.sold[index], unit) * unit
            if offers[index] < rest:
                return False
        return True

    def _execute(self, purchases: Sequence[float], price: float) -> None:
        for index, quantity in enumerate(purchases):
            if quantity <= 0.0:
                continue
            trade = Trade(round=self._state.round, user=index, quantity=quantity, unit_price=price)
            self._state.sold[index] += quantity
            self._state.ledger.append(trade)
            self._event_emitter.emit("ontrade", trade)

    def _record_round(self, demand: float, supply: float, purchased: float) -> None:
        record = RoundRecord(
            round=self._state.round,
            price=self._state.price,
            phase=self._state.phase,
            demand=demand,
            supply=supply,
            purchased=purchased,
        )
        self._state.rounds.append(record)
        self._event_emitter.emit("onround", record)

    def _set_phase(self, phase: MarketPhase) -> None:
        if self._state.phase == phase and phase != MarketPhase.QUOTATION:
            return
        self._state.phase = phase
        self._event_emitter.emit("onphasechange", phase)


def run_quotation(
    model: ServerCostModel,
    users: Sequence[UserProfile],
    config: QuotationConfig,
    event_emitter: Optional[EventEmitter] = None,
) -> MarketState:
    """Run the information-free quotation end to end and return the terminated state."""
    return QuotationEngine(model, users, config, event_emitter).run()


def post_quotation(
    state: MarketState,
    model: ServerCostModel,
    users: Sequence[UserProfile],
    config: QuotationConfig,
    event_emitter: Optional[EventEmitter] = None,
) -> MarketState:
    """
    Description: Apply the post-quotation procedure to a state whose quotation phase ended.

    The given state is continued in place: its round, sold amounts and ledger advance.

    Returns: The same state, now TERMINATED.
    """
    engine = QuotationEngine(model, users, config, event_emitter, state=state)
    return engine.run_post_quotation()
