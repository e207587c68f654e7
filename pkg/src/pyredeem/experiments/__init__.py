from .config import parse_config
from .families import (
    run_comparison,
    run_convergence,
    run_ledger,
    run_oversupply,
    run_robustness,
    run_sweep,
)
from .population import sample_population
from .report import emit_report
