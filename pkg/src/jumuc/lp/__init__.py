"""LP/MIP core: built-in simplex and branch and bound, HiGHS delegation, MPS IO."""
from .model import LpModel, LpSolution, Certificate, certify, solve_lp
from .mip import MipSolution, branch_and_bound, relative_gap, solve_mip, EXTERNAL_SOLVER_ENV
from .mps import parse_mps, read_mps, write_mps, mps_text, read_solution, write_solution
from .tolerances import FEAS_TOL, INT_TOL, DUAL_REL_TOL
