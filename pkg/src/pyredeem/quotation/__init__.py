from .allocation import allocate_oversupply
from .engine import QuotationEngine, post_quotation, run_quotation
