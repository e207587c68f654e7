from .diagnostics import greedy_persistence
from .termination import (
    fit_prior,
    hazard_error_profile,
    hazard_rate,
    posterior_cdf,
    sell_condition,
    termination_probability,
    update_endowment,
)
