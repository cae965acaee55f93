"""Mixed-integer linear programs and an embedded solver for them."""

from .lpformat import LpFormatError, export_lp_file, parse_lp_file
from .model import (Constraint, LpArrays, LpResult, MilpModel, MilpResult,
                    SolveOptions, Status)
from .solver import BranchAndBound, solve, solve_lp

__all__ = [
    "BranchAndBound", "Constraint", "LpArrays", "LpFormatError", "LpResult",
    "MilpModel", "MilpResult", "SolveOptions", "Status", "export_lp_file",
    "parse_lp_file", "solve", "solve_lp",
]
