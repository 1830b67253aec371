from .context import SolveContext, build_context, p2_objective
from .state import PrimalState, DualState, SolverReport
from .al import (al_value, al_value_cccp, cccp_linearize, penalty_terms,
                 residual_families, violation)
from .blocks import (solve_grouping_sinr, solve_power, solve_analog_bf,
                     solve_digital_bf, solve_aux, abf_objective,
                     w_objective_grad)
from .solver import initialize, outer_update, solve_sp

__all__ = [
    "SolveContext", "build_context", "p2_objective",
    "PrimalState", "DualState", "SolverReport",
    "al_value", "al_value_cccp", "cccp_linearize", "penalty_terms",
    "residual_families", "violation",
    "solve_grouping_sinr", "solve_power", "solve_analog_bf",
    "solve_digital_bf", "solve_aux", "abf_objective", "w_objective_grad",
    "initialize", "outer_update", "solve_sp",
]
