from .evaluation import run_metrics
from .fairness import fairness
from .freerider import freerider_bins
from .regret import regret
from .welfare import outcome_from_state, welfare
