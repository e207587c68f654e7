from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict, Tuple

from scipy import stats

from pyredeem.utils.errors import DomainError


class PriorFamily(Enum):
    UNIFORM = "uniform"
    EXPONENTIAL = "exponential"
    GAMMA = "gamma"
    PARETO = "pareto"


@dataclass(frozen=True)
class TerminationPrior:
    """
    Prior over the price at which the quotation terminates.

    Parameters per family (``params`` as sorted key/value pairs):
    - uniform: low, high
    - exponential: rate, with support starting at ``loc``
    - gamma: shape, rate, with support starting at ``loc``
    - pareto: shape, scale (support starts at scale)
    """

    family: PriorFamily
    params: Tuple[Tuple[str, float], ...]
    loc: float = 0.0

    @classmethod
    def uniform(cls, low: float, high: float) -> "TerminationPrior":
        if not high > low:
            raise DomainError(f"uniform prior needs high > low, got [{low}, {high}]")
        return cls(PriorFamily.UNIFORM, (("high", high), ("low", low)), loc=low)

    @classmethod
    def exponential(cls, rate: float, loc: float = 0.0) -> "TerminationPrior":
        if not rate > 0.0:
            raise DomainError(f"exponential rate must be positive, got {rate}")
        return cls(PriorFamily.EXPONENTIAL, (("rate", rate),), loc=loc)

    @classmethod
    def gamma(cls, shape: float, rate: float, loc: float = 0.0) -> "TerminationPrior":
        if not (shape > 0.0 and rate > 0.0):
            raise DomainError(f"gamma shape and rate must be positive, got {shape}, {rate}")
        return cls(PriorFamily.GAMMA, (("rate", rate), ("shape", shape)), loc=loc)

    @classmethod
    def pareto(cls, shape: float, scale: float) -> "TerminationPrior":
        if not (shape > 0.0 and scale > 0.0):
            raise DomainError(f"pareto shape and scale must be positive, got {shape}, {scale}")
        return cls(PriorFamily.PARETO, (("scale", scale), ("shape", shape)), loc=scale)

    @property
    def parameters(self) -> Dict[str, float]:
        return dict(self.params)

    def distribution(self) -> Any:
        """The frozen scipy.stats distribution backing this prior."""
        p = self.parameters
        match self.family:
            case PriorFamily.UNIFORM:
                return stats.uniform(loc=p["low"], scale=p["high"] - p["low"])
            case PriorFamily.EXPONENTIAL:
                return stats.expon(loc=self.loc, scale=1.0 / p["rate"])
            case PriorFamily.GAMMA:
                return stats.gamma(a=p["shape"], loc=self.loc, scale=1.0 / p["rate"])
            case PriorFamily.PARETO:
                return stats.pareto(b=p["shape"], scale=p["scale"])
        raise DomainError(f"unsupported prior family {self.family}")


@dataclass(frozen=True)
class BeliefState:
    """A prior left-truncated at the current quote."""

    prior: TerminationPrior
    current_price: float

    def advance(self, price: float) -> "BeliefState":
        return BeliefState(self.prior, max(self.current_price, price))
