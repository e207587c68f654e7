import numpy as np
import pytest

from pyredeem.models.config import DistributionSpec, ExperimentConfig, PopulationSpec
from pyredeem.models.schedule import PriceSchedule
from pyredeem.models.server import ServerCostModel
from pyredeem.models.user import UserProfile


@pytest.fixture
def model() -> ServerCostModel:
    return ServerCostModel()


@pytest.fixture
def schedule() -> PriceSchedule:
    return PriceSchedule()


@pytest.fixture
def population():
    """Ten informed users with the default endowment and spread privacy valuations."""
    lambdas = [0.5, 3.0, 6.0, 9.0, 12.0, 15.0, 18.0, 21.0, 25.0, 30.0]
    return [UserProfile(d_i=6000.0, lambda_i=lam) for lam in lambdas]


@pytest.fixture
def aware_population():
    lambdas = [2.0, 8.0, 14.0, 20.0, 26.0]
    thetas = [0.5, 4.0, 1.5, 3.0, 2.5]
    return [
        UserProfile(d_i=12000.0, lambda_i=lam, theta_i=theta)
        for lam, theta in zip(lambdas, thetas)
    ]


@pytest.fixture
def small_users():
    return [
        UserProfile(d_i=100.0, lambda_i=2.0, theta_i=1.0),
        UserProfile(d_i=100.0, lambda_i=5.0, theta_i=3.0),
        UserProfile(d_i=100.0, lambda_i=9.0, theta_i=0.0),
    ]


@pytest.fixture
def small_model() -> ServerCostModel:
    return ServerCostModel(d_total=300.0, A2=0.002)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(7)


@pytest.fixture
def small_config() -> ExperimentConfig:
    """A fast configuration: three users, two replicates."""
    return ExperimentConfig(
        population=PopulationSpec(
            n_users=3,
            endowment=DistributionSpec("constant", (2000.0,)),
        ),
        runs=2,
        mechanisms=("IIQ", "OPP", "GDPR"),
        output_dir="unused",
    )
