from typing import Sequence

from pyredeem.benchmarks.baselines import baseline
from pyredeem.benchmarks.bsp import bsp_solve
from pyredeem.benchmarks.opp import opp_noisy, opp_solve
from pyredeem.interfaces.mechanism import IMechanism
from pyredeem.models.outcome import BaselineKind, MechanismOutcome, NoiseSpec, OppPayment
from pyredeem.models.server import ServerCostModel
from pyredeem.models.user import UserProfile


class PersonalizedPricingMechanism(IMechanism):
    """Welfare-optimal personal prices, optionally computed from noisy parameter estimates."""

    def __init__(self, sigma: float = 0.0, payment: OppPayment = OppPayment.BUNDLE):
        self.sigma = sigma
        self.payment = payment
        self.name = "OPP" if sigma == 0.0 else "OPP-noisy"

    def solve(
        self, users: Sequence[UserProfile], model: ServerCostModel, seed: int
    ) -> MechanismOutcome:
        if self.name == "OPP":
            return opp_solve(users, model, self.payment)
        return opp_noisy(users, model, NoiseSpec(sigma=self.sigma, seed=seed))


class SinglePriceMechanism(IMechanism):
    name = "BSP"

    def __init__(self, price_grid: Sequence[float]):
        self.price_grid = tuple(price_grid)

    def solve(
        self, users: Sequence[UserProfile], model: ServerCostModel, seed: int
    ) -> MechanismOutcome:
        return bsp_solve(users, model, self.price_grid)


class BoundaryMechanism(IMechanism):
    def __init__(self, kind: BaselineKind):
        self.kind = kind
        self.name = kind.value

    def solve(
        self, users: Sequence[UserProfile], model: ServerCostModel, seed: int
    ) -> MechanismOutcome:
        return baseline(self.kind, users, model)
