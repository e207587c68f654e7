import logging
from dataclasses import replace
from typing import List, Sequence, Tuple

import numpy as np

from pyredeem.econ.privacy import min_price_for, privacy_loss
from pyredeem.econ.server import accuracy_degradation, accuracy_slope, server_cost
from pyredeem.equilibrium.responses import simultaneous_responses
from pyredeem.models.outcome import MechanismOutcome, NoiseSpec, OppPayment
from pyredeem.models.server import ServerCostModel
from pyredeem.models.user import UserProfile
from pyredeem.utils.numeric import golden_section_max

logger = logging.getLogger(__name__)

MU_ITERATIONS = 200


def _retention_at(mu: float, lam: np.ndarray, k: np.ndarray, d: np.ndarray) -> np.ndarray:
    """Per-user retention where marginal privacy cost λ(d − y + 1)^(−k) equals μ."""
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        safe_k = np.where(k > 0.0, k, 1.0)
        kept_plus_one = np.where(lam > 0.0, np.power(lam / mu, 1.0 / safe_k), 0.0)
        smooth = np.clip(d + 1.0 - kept_plus_one, 0.0, d)
    linear = np.where(mu > lam, d, 0.0)
    zero_cost = lam == 0.0
    return np.where(zero_cost, d, np.where(k > 0.0, smooth, linear))


def water_fill(users: Sequence[UserProfile], total: float) -> np.ndarray:
    """
    Description: Spread a retained total across users at the least privacy cost.

    Users are filled until their marginal privacy cost reaches a common level μ found by
    bisection; whatever is left at the final bracket goes to the users that move inside it,
    in proportion to how far they move.

    Returns: Per-user retained amounts summing to ``total``.
    """
    lam = np.array([u.lambda_i for u in users], dtype=float)
    k = np.array([u.k_i for u in users], dtype=float)
    d = np.array([u.d_i for u in users], dtype=float)
    if total <= 0.0 or d.sum() <= 0.0:
        return np.zeros_like(d)
    if total >= d.sum():
        return d.copy()
    free = np.where(lam == 0.0, d, 0.0)
    if free.sum() >= total:
        return free * (total / free.sum())

    lo, hi = 0.0, float(lam.max()) * (1.0 + 1e-12) + 1e-300
    for _ in range(MU_ITERATIONS):
        if hi - lo <= 1e-15 * hi:
            break
        mid = 0.5 * (lo + hi)
        if _retention_at(mid, lam, k, d).sum() < total:
            lo = mid
        else:
            hi = mid
    low_fill = _retention_at(lo, lam, k, d) if lo > 0.0 else np.where(lam == 0.0, d, 0.0)
    high_fill = _retention_at(hi, lam, k, d)
    gap = high_fill - low_fill
    missing = total - low_fill.sum()
    if gap.sum() > 0.0:
        low_fill = low_fill + gap * (missing / gap.sum())
    return np.clip(low_fill, 0.0, d)


def _welfare_gain(
    users: Sequence[UserProfile],
    everyone: Sequence[UserProfile],
    model: ServerCostModel,
    retained_base: float,
    total: float,
    jump: bool,
) -> Tuple[float, np.ndarray]:
    retention = water_fill(users, total)
    retained = min(retained_base + total, model.d_total)
    cost = server_cost(model, retained, limit=not jump)
    saving = server_cost(model, retained_base, limit=True) - cost
    privacy = sum(privacy_loss(u, u.d_i, y) for u, y in zip(users, retention))
    accuracy_change = accuracy_degradation(model, model.d_total - retained) - accuracy_degradation(
        model, model.d_total - retained_base
    )
    theta = sum(u.theta_i for u in everyone)
    return saving - privacy - theta * accuracy_change, retention


def _optimum(
    everyone: Sequence[UserProfile], model: ServerCostModel
) -> Tuple[List[int], np.ndarray, float]:
    informed = [i for i, u in enumerate(everyone) if u.informed]
    sellers = [everyone[i] for i in informed]
    retained_base = float(sum(u.d_i for u in everyone if not u.informed))
    upper = float(sum(u.d_i for u in sellers))
    if not sellers or upper <= 0.0:
        return informed, np.zeros(len(sellers)), 0.0

    def objective(totals: np.ndarray) -> np.ndarray:
        flat = np.atleast_1d(totals)
        values = [
            _welfare_gain(sellers, everyone, model, retained_base, float(t), jump=False)[0]
            for t in flat
        ]
        return np.asarray(values).reshape(np.shape(totals))

    total = float(golden_section_max(objective, 0.0, upper))
    gain, retention = _welfare_gain(sellers, everyone, model, retained_base, total, jump=False)
    if retained_base + upper >= model.d_total:
        full_gain, full = _welfare_gain(
            sellers, everyone, model, retained_base, upper, jump=True
        )
        if full_gain > gain:
            total, retention = upper, full
    return informed, retention, total


def _supporting_prices(
    sellers: Sequence[UserProfile],
    retention: np.ndarray,
    model: ServerCostModel,
    retained: float,
) -> np.ndarray:
    slope = accuracy_slope(model, max(model.d_total - retained, 0.0))
    prices = [
        max(0.0, u.lambda_i * (u.d_i - y + 1.0) ** (-u.k_i) - u.theta_i * slope)
        for u, y in zip(sellers, retention)
    ]
    return np.asarray(prices)


def _bundle_prices(sellers: Sequence[UserProfile], retention: np.ndarray) -> np.ndarray:
    """Unit price at which each bundle exactly pays for the privacy it costs."""
    return np.asarray(
        [min_price_for(u, 0.0, float(y)) if y > 0.0 else 0.0 for u, y in zip(sellers, retention)]
    )


def _assemble(
    everyone: Sequence[UserProfile],
    informed: Sequence[int],
    retention: np.ndarray,
    prices: np.ndarray,
    mechanism: str,
    parameters: dict,
) -> MechanismOutcome:
    retained = [u.d_i if not u.informed else 0.0 for u in everyone]
    payments = [0.0] * len(everyone)
    for position, index in enumerate(informed):
        retained[index] = float(retention[position])
        payments[index] = float(prices[position] * retention[position])
    return MechanismOutcome(
        mechanism=mechanism,
        retention=tuple(retained),
        payments=tuple(payments),
        parameters=parameters,
    )


def opp_solve(
    users: Sequence[UserProfile],
    model: ServerCostModel,
    payment: OppPayment = OppPayment.BUNDLE,
) -> MechanismOutcome:
    """
    Description: Welfare-maximising personalised purchase under full information.

    A golden-section search over the total bought from informed users wraps an inner
    water-filling allocation at equal marginal privacy cost. Full retention is compared
    separately because the retraining cost vanishes there.

    With ``OppPayment.BUNDLE`` each user is offered its allocation as a bundle at the unit
    price that exactly covers its privacy loss, so its payoff relative to redeeming
    everything is its share of the accuracy gain. With ``OppPayment.SUPPORTING`` each user
    is paid per unit the price that makes its allocation a best response: its marginal
    privacy cost net of its own accuracy gain.

    Returns: MechanismOutcome labelled "OPP" with the unit prices in ``parameters``.
    """
    informed, retention, total = _optimum(users, model)
    sellers = [users[i] for i in informed]
    retained_base = float(sum(u.d_i for u in users if not u.informed))
    if payment == OppPayment.BUNDLE:
        prices = _bundle_prices(sellers, retention)
    else:
        prices = _supporting_prices(sellers, retention, model, retained_base + total)
    logger.debug("OPP buys %s units from %d informed users", total, len(sellers))
    return _assemble(
        users,
        informed,
        retention,
        prices,
        "OPP",
        {
            "prices": tuple(float(p) for p in prices),
            "payment": payment.value,
            "sigma": 0.0,
        },
    )


def opp_noisy(
    users: Sequence[UserProfile], model: ServerCostModel, noise: NoiseSpec
) -> MechanismOutcome:
    """
    Description: Personalised pricing computed from noisy estimates of λ and θ.

    Estimates are λ·(1 + ε) and θ·(1 + ε) with ε ~ N(0, σ²), floored at zero; k is known.
    Supporting prices come from the optimum for the estimated population, and users then
    answer those unit prices with their true parameters, jointly, as a best-response fixed
    point.

    Returns: MechanismOutcome labelled "OPP-noisy"; at σ = 0 the noiseless outcome under
    supporting prices.
    """
    if noise.sigma == 0.0:
        exact = opp_solve(users, model, OppPayment.SUPPORTING)
        return replace(exact, mechanism="OPP-noisy")

    rng = np.random.default_rng(noise.seed)
    eps_lambda = rng.normal(0.0, noise.sigma, size=len(users))
    eps_theta = rng.normal(0.0, noise.sigma, size=len(users))
    estimated = [
        replace(
            u,
            lambda_i=max(0.0, u.lambda_i * (1.0 + el)),
            theta_i=max(0.0, u.theta_i * (1.0 + et)),
        )
        for u, el, et in zip(users, eps_lambda, eps_theta)
    ]
    informed, retention, total = _optimum(estimated, model)
    retained_base = float(sum(u.d_i for u in users if not u.informed))
    prices = _supporting_prices(
        [estimated[i] for i in informed], retention, model, retained_base + total
    )
    responses = simultaneous_responses(
        [users[i] for i in informed],
        prices.reshape(-1, 1),
        model,
        retained_base=retained_base,
    )[:, 0]
    return _assemble(
        users,
        informed,
        responses,
        prices,
        "OPP-noisy",
        {
            "prices": tuple(float(p) for p in prices),
            "payment": OppPayment.SUPPORTING.value,
            "sigma": noise.sigma,
            "seed": noise.seed,
        },
    )
