import logging
import math
from typing import List, Sequence, Tuple

import numpy as np

from pyredeem.models.beliefs import BeliefState, PriorFamily, TerminationPrior
from pyredeem.utils.errors import BeliefExhaustedError, DegenerateFitError, DomainError

logger = logging.getLogger(__name__)


def _survival(prior: TerminationPrior, b: float) -> float:
    survival = float(prior.distribution().sf(b))
    if survival <= 0.0:
        raise BeliefExhaustedError(
            f"{prior.family.value} prior has no survival mass at price {b}",
            details={"price": b, "family": prior.family.value},
        )
    return survival


def posterior_cdf(state: BeliefState, b: float) -> float:
    """Left-truncated prior: (F(b) − F(B^t)) / (1 − F(B^t)); zero at or below B^t."""
    survival_now = _survival(state.prior, state.current_price)
    if b <= state.current_price:
        return 0.0
    survival_b = float(state.prior.distribution().sf(b))
    return min(1.0, max(0.0, (survival_now - survival_b) / survival_now))


def hazard_rate(prior: TerminationPrior, b: float) -> float:
    """f(b) / (1 − F(b)), evaluated as exp(log f − log S)."""
    _survival(prior, b)
    dist = prior.distribution()
    log_density = float(dist.logpdf(b))
    if log_density == -math.inf:
        return 0.0
    return math.exp(log_density - float(dist.logsf(b)))


def termination_probability(state: BeliefState, dB: float) -> float:
    """Exact chance the quotation stops before the next quote, given it reached B^t."""
    if dB < 0.0:
        raise DomainError(f"increment must be nonnegative, got {dB}")
    if dB == 0.0:
        _survival(state.prior, state.current_price)
        return 0.0
    return posterior_cdf(state, state.current_price + dB)


def sell_condition(state: BeliefState, dB: float, V_now: float, V_next: float) -> bool:
    """
    Description: Bayesian sell-now test h·V_now ≥ V_next·(1 − h·dB).

    Args:
    - state (BeliefState): Belief at the current quote.
    - dB (float): Price increment to the next quote.
    - V_now (float): Benefit of selling at the current quote.
    - V_next (float): Additional benefit of waiting one quote.

    Returns: True when selling now is at least as good as waiting.
    """
    if V_now < 0.0 or V_next < 0.0:
        raise DomainError("benefits must be nonnegative")
    h = hazard_rate(state.prior, state.current_price)
    return h * V_now >= V_next * (1.0 - h * dB)


def update_endowment(y_retained: float, g_new: float) -> float:
    """Endowment at the next redemption event: what stayed on the server plus new data."""
    if y_retained < 0.0 or g_new < 0.0:
        raise DomainError(f"amounts must be nonnegative, got {y_retained}, {g_new}")
    return y_retained + g_new


def fit_prior(
    history: Sequence[float],
    family: PriorFamily = PriorFamily.GAMMA,
    loc: float = 0.0,
) -> TerminationPrior:
    """
    Description: Method-of-moments fit of a termination prior to observed termination prices.

    Args:
    - history (Sequence[float]): At least two observed termination prices.
    - family (PriorFamily): Target family; gamma by default.
    - loc (float): Support lower bound for the exponential and gamma families. Pareto
      support starts at its fitted scale, so it takes no loc.

    Returns: The fitted TerminationPrior.

    Raises:
    - DomainError: fewer than two observations, or a nonzero loc for pareto.
    - DegenerateFitError: zero variance.
    """
    values = np.asarray(history, dtype=float)
    if values.size < 2:
        raise DomainError(f"need at least 2 observations, got {values.size}")
    mean = float(values.mean()) - loc
    variance = float(values.var())
    if variance <= 0.0:
        raise DegenerateFitError(
            "termination history has zero variance", details={"mean": mean}
        )

    match family:
        case PriorFamily.GAMMA:
            return TerminationPrior.gamma(mean * mean / variance, mean / variance, loc=loc)
        case PriorFamily.EXPONENTIAL:
            return TerminationPrior.exponential(1.0 / mean, loc=loc)
        case PriorFamily.UNIFORM:
            half_width = math.sqrt(3.0 * variance)
            return TerminationPrior.uniform(mean + loc - half_width, mean + loc + half_width)
        case PriorFamily.PARETO:
            if loc != 0.0:
                raise DomainError(
                    f"pareto fit takes no loc, got {loc}", details={"loc": loc}
                )
            shape = 1.0 + math.sqrt(1.0 + mean * mean / variance)
            return TerminationPrior.pareto(shape, mean * (shape - 1.0) / shape)
    raise DomainError(f"unsupported prior family {family}")


def hazard_error_profile(
    prior: TerminationPrior, price: float, dB_grid: Sequence[float]
) -> List[Tuple[float, float, float, float]]:
    """(dB, exact μ, hazard·dB, absolute error) for each increment on the grid."""
    state = BeliefState(prior, price)
    h = hazard_rate(prior, price)
    profile = []
    for dB in dB_grid:
        exact = termination_probability(state, dB)
        approx = h * dB
        profile.append((dB, exact, approx, abs(exact - approx)))
    logger.debug("hazard error profile at %s: %s", price, profile)
    return profile
