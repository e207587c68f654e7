from .baselines import assign_informed, baseline
from .bsp import bsp_solve
from .opp import opp_noisy, opp_solve
