"""Stand-in external solver obeying the MPS/solution file contract (backed by HiGHS)."""
import sys

from jumuc.lp import read_mps, solve_mip, write_solution
from jumuc.lp.mps import column_names

if __name__ == "__main__":
    model = read_mps(sys.argv[1])
    sol = solve_mip(model, 0.0, backend="highs")
    if not sol.has_incumbent:
        print("infeasible")
        sys.exit(1)
    write_solution(sys.argv[2], column_names(model), sol.x)
