import logging
from dataclasses import replace
from typing import List, Optional

from pyredeem.benchmarks.baselines import assign_informed
from pyredeem.models.config import ExperimentConfig, PopulationSpec
from pyredeem.models.server import ServerCostModel
from pyredeem.models.user import UserProfile
from pyredeem.utils.errors import ConfigError
from pyredeem.utils.rng import stream

logger = logging.getLogger(__name__)


def _draw(spec: PopulationSpec, master_seed: int, replicate: int) -> List[UserProfile]:
    if spec.n_users < 1:
        raise ConfigError(f"population.n_users must be at least 1, got {spec.n_users}")
    n = spec.n_users
    endowments = spec.endowment.sample(stream(master_seed, replicate, "endowment"), n)
    lambdas = spec.lambda_dist.sample(stream(master_seed, replicate, "lambda"), n)
    thetas = spec.theta_dist.sample(stream(master_seed, replicate, "theta"), n)
    return [
        UserProfile(d_i=float(d), lambda_i=float(lam), k_i=spec.k, theta_i=float(theta))
        for d, lam, theta in zip(endowments, lambdas, thetas)
    ]


def sample_population(
    config: ExperimentConfig, replicate: int, rho: Optional[float] = None
) -> List[UserProfile]:
    """
    Description: Draw the population of one Monte Carlo replicate.

    Endowments, privacy valuations and accuracy sensitivities each come from their own
    stream keyed by (master_seed, replicate, purpose), so changing the informed ratio or
    the mechanism list never changes the parameter draws.

    Args:
    - config (ExperimentConfig): Population spec and master seed.
    - replicate (int): The replicate index.
    - rho (float, optional): Informed ratio; defaults to the first entry of the rho grid.

    Returns: List[UserProfile] with informed flags assigned by a seeded shuffle.
    """
    users = _draw(config.population, config.master_seed, replicate)
    ratio = config.rho_grid[0] if rho is None else rho
    flags = assign_informed(len(users), ratio, stream(config.master_seed, replicate, "informed"))
    return [replace(u, informed=flag) for u, flag in zip(users, flags)]


def population_model(config: ExperimentConfig, users: List[UserProfile]) -> ServerCostModel:
    """Server model whose total data equals the population's endowments."""
    return config.server.to_model(float(sum(u.d_i for u in users)))
