from typing import Optional

from pyredeem.interfaces.mechanism import IMechanism
from pyredeem.mechanisms.pricing import (
    BoundaryMechanism,
    PersonalizedPricingMechanism,
    SinglePriceMechanism,
)
from pyredeem.mechanisms.quotation import CompleteInformationMechanism, QuotationMechanism
from pyredeem.models.config import ExperimentConfig
from pyredeem.models.market import OversupplyStrategy
from pyredeem.models.outcome import BaselineKind
from pyredeem.utils.errors import ConfigError


def build_mechanism(
    name: str,
    config: ExperimentConfig,
    sigma: float = 0.0,
    oversupply: Optional[OversupplyStrategy] = None,
) -> IMechanism:
    """Adapter for a mechanism label, configured from the experiment settings."""
    match name:
        case "IIQ":
            return QuotationMechanism(
                config.schedule, config.unit, oversupply or config.oversupply
            )
        case "CIQ":
            return CompleteInformationMechanism(
                config.schedule, config.ciq.grid_step, config.ciq.max_iterations
            )
        case "OPP":
            return PersonalizedPricingMechanism(sigma)
        case "BSP":
            return SinglePriceMechanism(config.bsp_price_grid())
        case "DNR" | "GDPR" | "FULL":
            return BoundaryMechanism(BaselineKind(name))
        case _:
            raise ConfigError(f"unknown mechanism '{name}'")
