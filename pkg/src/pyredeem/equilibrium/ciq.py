import logging
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from pyredeem.econ.server import accuracy_slope, optimal_retention, server_cost, server_demand
from pyredeem.equilibrium.induction import DEFAULT_GRID_STEP, backward_induction
from pyredeem.equilibrium.responses import best_responses, selling_payoff
from pyredeem.models.equilibrium import (
    DominanceCertificate,
    InductionResult,
    ScheduleChoice,
    SpneProfile,
)
from pyredeem.models.schedule import PriceSchedule
from pyredeem.models.server import ServerCostModel
from pyredeem.models.user import UserProfile
from pyredeem.utils.errors import ConvergenceError, DomainError

logger = logging.getLogger(__name__)

DEFAULT_MAX_ITERATIONS = 50
MAX_CANDIDATE_ROUNDS = 5000


def _entry_threshold(
    user: UserProfile, model: ServerCostModel, others_retained: float
) -> float:
    """Price above which selling a first unit pays: λ(d_i+1)^(−k) − θ·A'(d − others)."""
    marginal_privacy = user.lambda_i * (user.d_i + 1.0) ** (-user.k_i)
    redeemed = max(model.d_total - others_retained, 0.0)
    return marginal_privacy - user.theta_i * accuracy_slope(model, redeemed)


def _room(model: ServerCostModel, retained: float, price: float, y_max: float) -> float:
    if retained >= y_max:
        return 0.0
    return server_demand(model, retained, price)


def _last_round(schedule: PriceSchedule, model: ServerCostModel, retained_base: float) -> int:
    """First round whose quote leaves the server no demand even with only the base retained."""
    if retained_base >= optimal_retention(model).y_max:
        return 0
    slope = accuracy_slope(model, model.d_total - retained_base)
    ceiling = model.alpha * slope - model.beta * model.T0
    if not np.isfinite(ceiling):
        return MAX_CANDIDATE_ROUNDS
    return min(schedule.first_round_above(ceiling), MAX_CANDIDATE_ROUNDS)


def _clearing_round(
    users: Sequence[UserProfile],
    active: Sequence[int],
    schedule: PriceSchedule,
    model: ServerCostModel,
    retained_base: float,
) -> int:
    """First round at which the sellers' combined best responses meet the server's demand."""
    last = _last_round(schedule, model, retained_base)
    if last <= 0:
        return 0
    rounds = np.arange(last)
    prices = schedule.B0 + rounds * schedule.dB
    supply = np.zeros(rounds.shape)
    for index in active:
        supply += best_responses(
            users[index], np.zeros(rounds.shape), prices, model, retained_base=retained_base
        )
    y_max = optimal_retention(model).y_max
    room = np.array([_room(model, retained_base, p, y_max) for p in prices])
    met = np.flatnonzero(supply >= room)
    return int(rounds[met[0]]) if met.size else last - 1


def _best_period(
    index: int,
    users: Sequence[UserProfile],
    periods: Dict[int, int],
    amounts: Dict[int, float],
    schedule: PriceSchedule,
    model: ServerCostModel,
    retained_base: float,
) -> Tuple[int, float]:
    """
    The round, no later than the current one, that maximises one seller's payoff against
    everybody else's current sale.

    At round t the seller gets what the server still demands after every sale served before
    it (earlier rounds, then lower indices within the round), so an earlier round trades a
    lower quote for a place ahead of the others. Ties keep the earliest round.
    """
    user = users[index]
    current = periods[index]
    others = [j for j in periods if j != index]
    others_total = float(sum(amounts[j] for j in others))
    entry = schedule.first_round_above(
        _entry_threshold(user, model, retained_base + others_total)
    )
    rounds = np.arange(min(entry, current), current + 1)
    prices = schedule.B0 + rounds * schedule.dB
    wanted = best_responses(
        user, np.full(rounds.shape, others_total), prices, model, retained_base=retained_base
    )
    before = np.full(rounds.shape, retained_base)
    for j in others:
        ahead = (periods[j] < rounds) | ((periods[j] == rounds) & (j < index))
        before += np.where(ahead, amounts[j], 0.0)
    y_max = optimal_retention(model).y_max
    room = np.array([_room(model, r, p, y_max) for r, p in zip(before, prices)])
    sold = np.minimum(wanted, room)
    payoff = selling_payoff(user, sold, retained_base + others_total, prices, model)
    best = int(np.argmax(payoff))
    return int(rounds[best]), float(sold[best])


def _periods_along(
    profile: SpneProfile,
    users: Sequence[UserProfile],
    schedule: PriceSchedule,
    model: ServerCostModel,
    retained_base: float,
) -> Dict[int, int]:
    """One sweep of sequential period choices in the current selling order."""
    periods = dict(zip(profile.order, profile.periods))
    amounts = dict(zip(profile.order, profile.amounts))
    for index in profile.order:
        periods[index], amounts[index] = _best_period(
            index, users, periods, amounts, schedule, model, retained_base
        )
    return periods


def _accept(
    result: InductionResult,
    schedule: PriceSchedule,
    model: ServerCostModel,
    retained_base: float,
    iterations: int,
) -> SpneProfile:
    """Cap each sale by what the server still demands at that seller's price."""
    profile = result.profile
    y_max = optimal_retention(model).y_max
    retained = retained_base
    amounts: List[float] = []
    cumulative: List[float] = []
    terminal = 0
    for amount, period in zip(profile.amounts, profile.periods):
        demand = 0.0
        if retained < y_max:
            demand = server_demand(model, retained, schedule.price_at(period))
        accepted = min(amount, demand)
        if accepted > 0.0:
            terminal = max(terminal, period)
        retained += accepted
        amounts.append(accepted)
        cumulative.append(retained - retained_base)
    return SpneProfile(
        order=profile.order,
        periods=profile.periods,
        prices=profile.prices,
        amounts=tuple(amounts),
        cumulative=tuple(cumulative),
        terminal_round=terminal,
        iterations=iterations,
    )


def ciq_outcome(
    users: Sequence[UserProfile],
    schedule: PriceSchedule,
    model: ServerCostModel,
    grid_step: float = DEFAULT_GRID_STEP,
    max_iterations: int = DEFAULT_MAX_ITERATIONS,
) -> SpneProfile:
    """
    Description: Complete-information selling profile under a known price schedule.

    Only informed users sell; uninformed endowments count as retained. Every seller starts
    at the clearing round, the first quote at which the combined best responses meet the
    server's demand, or at its own entry round when that comes later. Each iteration runs
    backward induction at the period prices and caps every sale by what the server still
    demands in (period, index) order. Then each seller in turn moves to the round, no
    later than its current one, that maximises its payoff against the others' accepted
    sales. Periods only move earlier, so the loop stops once a sweep changes nothing.
    This fixed point approximates the equilibrium path.

    Args:
    - users (Sequence[UserProfile]): Whole population, indexed as everywhere else.
    - schedule (PriceSchedule): Quote sequence known to everybody.
    - model (ServerCostModel): Server cost parameters.
    - grid_step (float): Backward-induction grid spacing.
    - max_iterations (int): Cap on fixed-point iterations.

    Returns: SpneProfile keyed by population index in ``order``.

    Raises: ConvergenceError when the periods still move at the cap; the last two profiles
    are attached under ``details``.
    """
    active = [index for index, user in enumerate(users) if user.informed]
    retained_base = float(sum(user.d_i for user in users if not user.informed))
    if not active:
        return SpneProfile((), (), (), (), (), 0, 0)

    clearing = _clearing_round(users, active, schedule, model, retained_base)
    entry = {
        i: schedule.first_round_above(_entry_threshold(users[i], model, retained_base))
        for i in active
    }
    start = {i: max(clearing, entry[i]) for i in active}
    order = tuple(sorted(active, key=lambda i: (start[i], i)))
    periods = tuple(start[i] for i in order)

    history: List[SpneProfile] = []
    for iteration in range(1, max_iterations + 1):
        result = backward_induction(
            [users[i] for i in order],
            [schedule.price_at(t) for t in periods],
            model,
            grid_step=grid_step,
            periods=periods,
            order=order,
            retained_base=retained_base,
        )
        profile = _accept(result, schedule, model, retained_base, iteration)
        history.append(profile)
        next_periods = _periods_along(profile, users, schedule, model, retained_base)
        next_order = tuple(sorted(active, key=lambda i: (next_periods[i], i)))
        next_pair = (next_order, tuple(next_periods[i] for i in next_order))
        if next_pair == (order, periods):
            logger.debug("complete-information profile settled after %d iterations", iteration)
            return profile
        order, periods = next_pair

    raise ConvergenceError(
        f"selling order did not settle within {max_iterations} iterations",
        details={"last_profiles": [repr(p) for p in history[-2:]]},
    )


def dominance_check(
    t: int, tau: int, a_t: float, a_tau: float, schedule: PriceSchedule
) -> DominanceCertificate:
    """
    Description: Compare selling a_t at round t plus a_tau at round tau with selling the
    same total at round tau only. Privacy and accuracy terms depend on the total alone and
    cancel, so only revenues are compared.

    Raises: DomainError unless t < tau and both amounts are nonnegative.
    """
    if not t < tau:
        raise DomainError(f"need t < tau, got {t}, {tau}")
    if a_t < 0.0 or a_tau < 0.0:
        raise DomainError("amounts must be nonnegative")
    split = a_t * schedule.price_at(t) + a_tau * schedule.price_at(tau)
    concentrated = (a_t + a_tau) * schedule.price_at(tau)
    return DominanceCertificate(
        split_payoff=split,
        concentrated_payoff=concentrated,
        dominates=concentrated > split,
        equal=concentrated == split,
    )


def schedule_objective(
    profile: SpneProfile, model: ServerCostModel, retained_base: float = 0.0
) -> float:
    """Server outlay plus cost: Σ B^(t_i)·ȳ_i + C(base + Σ ȳ_i)."""
    payments = sum(price * amount for price, amount in zip(profile.prices, profile.amounts))
    retained = min(retained_base + sum(profile.amounts), model.d_total)
    return payments + server_cost(model, retained)


def optimize_schedule(
    users: Sequence[UserProfile],
    model: ServerCostModel,
    B0_grid: Sequence[float],
    dB_grid: Sequence[float],
    grid_step: float = DEFAULT_GRID_STEP,
    max_iterations: int = DEFAULT_MAX_ITERATIONS,
) -> ScheduleChoice:
    """
    Description: Exhaustive search for the schedule minimising the server's outlay plus cost.

    Grid points where the complete-information profile does not settle are skipped and
    listed in the result. Ties keep the smallest B0, then the smallest dB.

    Raises: DomainError on empty grids; ConvergenceError when every point was skipped.
    """
    if not B0_grid or not dB_grid:
        raise DomainError("schedule grids must be nonempty")
    retained_base = float(sum(user.d_i for user in users if not user.informed))
    best: Optional[Tuple[float, float, float]] = None
    evaluated = []
    skipped = []
    for B0 in sorted(B0_grid):
        for dB in sorted(dB_grid):
            try:
                profile = ciq_outcome(
                    users, PriceSchedule(B0, dB), model, grid_step, max_iterations
                )
            except ConvergenceError as error:
                logger.warning("schedule (%s, %s) skipped: %s", B0, dB, error)
                skipped.append((B0, dB, str(error)))
                continue
            objective = schedule_objective(profile, model, retained_base)
            evaluated.append((B0, dB, objective))
            if best is None or objective < best[2]:
                best = (B0, dB, objective)
    if best is None:
        raise ConvergenceError("no schedule on the grid produced a settled profile")
    return ScheduleChoice(
        B0=best[0],
        dB=best[1],
        objective=best[2],
        evaluated=tuple(evaluated),
        skipped=tuple(skipped),
    )
