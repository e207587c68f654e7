from abc import ABC, abstractmethod
from typing import Sequence

from pyredeem.models.outcome import MechanismOutcome
from pyredeem.models.server import ServerCostModel
from pyredeem.models.user import UserProfile


class IMechanism(ABC):
    """
    IMechanism is an abstract base class for anything that maps a population to retained
    amounts and payments.

    Implementations range from the price-discovery protocols (information-free quotation,
    complete-information selling) to the benchmarks (personalised pricing, single price)
    and the boundary baselines. All of them share one call signature, so the experiment
    driver can run them side by side on the same population.
    """

    name: str

    @abstractmethod
    def solve(
        self, users: Sequence[UserProfile], model: ServerCostModel, seed: int
    ) -> MechanismOutcome:
        """
        Description: Run the mechanism on one population.

        Args:
        - users (Sequence[UserProfile]): The population, including uninformed users, whose
          endowments always count towards ``model.d_total``.
        - model (ServerCostModel): The server's cost parameters.
        - seed (int): Seed for any randomness the mechanism needs (rationing order,
          estimation noise). Deterministic mechanisms ignore it.

        Returns:
        MechanismOutcome:
        - Per-user retention and payments, labelled with the mechanism name. Quote-based
          mechanisms also fill the ledger, round count and final quote.

        Raises:
        RedeemError (implementation-specific):
        Implementations may raise if:
        - A parameter lies outside an operation's domain.
        - An iterative solver fails to settle.
        """
        pass
