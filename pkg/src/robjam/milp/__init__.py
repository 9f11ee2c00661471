"""Exact MILP engine: bounded-variable simplex plus branch-and-bound."""

from .bnb import (STATUS_INFEASIBLE, STATUS_LIMIT, STATUS_OPTIMAL, Limits,
                  MilpSolution, SolverFailure, bb_solve)
from .simplex import (INFEASIBLE, NUMERICAL, OPTIMAL, UNBOUNDED, LpSolution,
                      dual_bound, lp_solve, solve_lp)

__all__ = [
    "Limits", "MilpSolution", "SolverFailure", "bb_solve",
    "STATUS_OPTIMAL", "STATUS_INFEASIBLE", "STATUS_LIMIT",
    "LpSolution", "lp_solve", "solve_lp", "dual_bound",
    "OPTIMAL", "INFEASIBLE", "UNBOUNDED", "NUMERICAL",
]
