from .pricing import BoundaryMechanism, PersonalizedPricingMechanism, SinglePriceMechanism
from .quotation import CompleteInformationMechanism, QuotationMechanism
from .registry import build_mechanism
