from pyredeem.mechanisms.registry import build_mechanism
from pyredeem.models.config import ExperimentConfig
from pyredeem.quotation.engine import QuotationEngine, run_quotation
