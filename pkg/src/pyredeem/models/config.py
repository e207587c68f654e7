import math
import re
from dataclasses import dataclass, field, replace
from typing import Any, Dict, Optional, Tuple

import numpy as np
import pandas as pd

from pyredeem.models.market import OversupplyStrategy
from pyredeem.models.metrics import WelfareConvention
from pyredeem.models.schedule import PriceSchedule
from pyredeem.models.server import ServerCostModel
from pyredeem.utils.errors import ConfigError

MECHANISMS = ("IIQ", "CIQ", "OPP", "BSP", "DNR", "GDPR", "FULL")
SWEEP_AXES = ("dB", "I", "lambda_dist", "theta_dist", "k", "alpha")
OVER_SUPPLY_PRESET = {"alpha": 10000.0, "T0": 0.05}

_SPEC_PATTERN = re.compile(r"^\s*([a-z_]+)\s*(?:\((.*)\))?\s*$")


@dataclass(frozen=True)
class DistributionSpec:
    """A named population distribution such as ``uniform(0.5,30)`` or ``constant(6000)``."""

    family: str
    params: Tuple[float, ...]

    def __str__(self) -> str:
        return f"{self.family}({','.join(repr(p) for p in self.params)})"

    @property
    def mean(self) -> float:
        p = self.params
        match self.family:
            case "constant":
                return p[0]
            case "uniform":
                return 0.5 * (p[0] + p[1])
            case "bimodal":
                w = p[4]
                return w * 0.5 * (p[0] + p[1]) + (1.0 - w) * 0.5 * (p[2] + p[3])
            case "pareto":
                return math.inf if p[0] <= 1.0 else p[0] * p[1] / (p[0] - 1.0)
        raise ConfigError(f"unknown distribution family '{self.family}'")

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        p = self.params
        match self.family:
            case "constant":
                return np.full(n, p[0], dtype=float)
            case "uniform":
                return rng.uniform(p[0], p[1], size=n)
            case "bimodal":
                first = rng.uniform(p[0], p[1], size=n)
                second = rng.uniform(p[2], p[3], size=n)
                pick_first = rng.random(size=n) < p[4]
                return np.where(pick_first, first, second)
            case "pareto":
                # numpy draws Lomax; shift by one for the classical Pareto on [scale, inf)
                return p[1] * (1.0 + rng.pareto(p[0], size=n))
        raise ConfigError(f"unknown distribution family '{self.family}'")


def distribution_spec(value: Any, key: str = "distribution") -> DistributionSpec:
    """
    Description: Parse a distribution label.

    Accepted forms: a bare number (constant), ``constant(v)``, ``uniform(lo,hi)``,
    ``bimodal`` or ``bimodal(lo1,hi1,lo2,hi2[,w])``, ``pareto(shape,scale)``.

    Raises: ConfigError naming ``key`` when the label is unknown or malformed.
    """
    if isinstance(value, DistributionSpec):
        return value
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return DistributionSpec("constant", (float(value),))
    match_ = _SPEC_PATTERN.match(str(value))
    if not match_:
        raise ConfigError(f"{key}: cannot parse distribution '{value}'")
    family, raw = match_.group(1), match_.group(2)
    try:
        params = tuple(float(part) for part in raw.split(",")) if raw else ()
    except ValueError as error:
        raise ConfigError(f"{key}: malformed number in '{value}'") from error

    match family, len(params):
        case "constant", 1:
            return DistributionSpec(family, params)
        case "uniform", 2 if params[0] <= params[1]:
            return DistributionSpec(family, params)
        case "bimodal", 0:
            return DistributionSpec(family, (0.5, 5.0, 25.0, 30.0, 0.5))
        case "bimodal", 4:
            return DistributionSpec(family, params + (0.5,))
        case "bimodal", 5 if 0.0 <= params[4] <= 1.0:
            return DistributionSpec(family, params)
        case "pareto", 2 if params[0] > 0.0 and params[1] > 0.0:
            return DistributionSpec(family, params)
        case _:
            raise ConfigError(f"{key}: unsupported distribution '{value}'")


@dataclass(frozen=True)
class PopulationSpec:
    n_users: int = 10
    endowment: DistributionSpec = DistributionSpec("constant", (6000.0,))
    lambda_dist: DistributionSpec = DistributionSpec("uniform", (0.5, 30.0))
    theta_dist: DistributionSpec = DistributionSpec("uniform", (0.0, 5.0))
    k: float = 1.0


@dataclass(frozen=True)
class ServerSpec:
    a: float = math.e
    A1: float = 0.1
    A2: float = 3.33e-5
    A3: float = 0.0
    T0: float = 2.85e-4
    alpha: float = 1500.0
    beta: float = 1.0
    preset: str = "default"

    def to_model(self, d_total: float) -> ServerCostModel:
        spec = replace(self, **OVER_SUPPLY_PRESET) if self.preset == "over-supply" else self
        return ServerCostModel(
            a=spec.a,
            A1=spec.A1,
            A2=spec.A2,
            A3=spec.A3,
            T0=spec.T0,
            alpha=spec.alpha,
            beta=spec.beta,
            d_total=d_total,
        )


@dataclass(frozen=True)
class SweepSpec:
    axis: str = "k"
    values: Tuple[str, ...] = ("0", "0.25", "0.5", "0.75", "1")
    runs: int = 500


@dataclass(frozen=True)
class CiqSpec:
    grid_step: float = 10.0
    max_iterations: int = 50


@dataclass(frozen=True)
class BspSpec:
    grid_points: int = 100


@dataclass(frozen=True)
class ConvergenceSpec:
    dB_grid: Tuple[float, ...] = (
        0.05, 0.02, 0.01, 0.005, 0.002, 0.001, 0.0005, 0.0002, 0.0001,
    )
    n_users_grid: Tuple[int, ...] = (5, 10, 20, 50, 100)


@dataclass(frozen=True)
class ExperimentConfig:
    population: PopulationSpec = field(default_factory=PopulationSpec)
    server: ServerSpec = field(default_factory=ServerSpec)
    schedule: PriceSchedule = field(default_factory=PriceSchedule)
    unit: float = 1.0
    mechanisms: Tuple[str, ...] = MECHANISMS
    rho_grid: Tuple[float, ...] = (1.0,)
    sigma_grid: Tuple[float, ...] = (0.0, 0.05, 0.1, 0.2, 0.5, 1.0, 2.0, 5.0)
    sweep: SweepSpec = field(default_factory=SweepSpec)
    runs: int = 5000
    master_seed: int = 42
    oversupply: OversupplyStrategy = OversupplyStrategy.MINOR_FIRST
    ciq: CiqSpec = field(default_factory=CiqSpec)
    bsp: BspSpec = field(default_factory=BspSpec)
    convergence: ConvergenceSpec = field(default_factory=ConvergenceSpec)
    free_rider_bins: int = 3
    welfare_convention: WelfareConvention = WelfareConvention.ABSOLUTE
    workers: int = 1
    output_dir: str = "results"

    def bsp_price_grid(self) -> Tuple[float, ...]:
        return tuple(self.schedule.price_at(t) for t in range(self.bsp.grid_points))


@dataclass
class ExperimentReport:
    """Raw per-run rows, their per-cell aggregate, and where they came from."""

    name: str
    raw: pd.DataFrame
    summary: pd.DataFrame
    config: ExperimentConfig
    provenance: Dict[str, Any] = field(default_factory=dict)
    extras: Optional[Dict[str, Any]] = None
