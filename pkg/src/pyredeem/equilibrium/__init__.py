from .ciq import ciq_outcome, dominance_check, optimize_schedule
from .induction import backward_induction
from .responses import best_response, simultaneous_responses
