from __future__ import annotations

import heapq
import os
import shlex
import subprocess
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.optimize import Bounds, LinearConstraint, milp

from .model import LpModel, solve_lp
from .tolerances import INT_TOL

EXTERNAL_SOLVER_ENV = "JUMUC_EXTERNAL_SOLVER"


@dataclass
class MipSolution:
    status: str  # optimal | node_limit | time_limit | infeasible | unbounded | error
    x: np.ndarray | None = None
    objective: float = float("nan")
    bound: float = float("nan")
    nodes: int = 0
    log: list[str] = field(default_factory=list)
    backend: str = ""

    @property
    def gap(self) -> float:
        if self.x is None or not np.isfinite(self.bound):
            return float("inf")
        return abs(self.objective - self.bound) / max(1.0, abs(self.objective))

    @property
    def has_incumbent(self) -> bool:
        return self.x is not None


def relative_gap(incumbent: float, bound: float) -> float:
    return abs(incumbent - bound) / max(1.0, abs(incumbent))


def _log_line(it: int, obj: float, bound: float, gap: float) -> str:
    return f"{it}, {obj:.10g}, {bound:.10g}, {gap:.6g}"


def branch_and_bound(model: LpModel, rel_gap: float = 1e-4, node_limit: int = 100_000,
                     time_limit: float = float("inf"), lp_backend: str = "simplex") -> MipSolution:
    """Best-first branch and bound; branches on the most fractional variable (smallest index on ties)."""
    if rel_gap < 0:
        raise ValueError("rel_gap must be >= 0")
    sign = -1.0 if model.maximize else 1.0
    integer = model.integrality if model.integrality is not None else np.zeros(model.shape[1], bool)
    t0 = time.monotonic()
    lb0 = np.where(integer, np.ceil(model.lb - INT_TOL), model.lb)
    ub0 = np.where(integer, np.floor(model.ub + INT_TOL), model.ub)

    def relax(lb, ub):
        if (lb > ub).any():
            return None
        sol = solve_lp(model.with_bounds(lb, ub), backend=lp_backend)
        if sol.status == "unbounded":
            raise _Unbounded
        return sol if sol.optimal else None

    log: list[str] = []
    inc_x, inc_obj = None, np.inf  # min-sense
    counter = 0
    try:
        root = relax(lb0, ub0)
    except _Unbounded:
        return MipSolution("unbounded", backend="bnb")
    if root is None:
        return MipSolution("infeasible", backend="bnb")
    heap = [(sign * root.objective, 0, lb0, ub0, root)]
    nodes = 0
    status = "optimal"
    while heap:
        bound = heap[0][0]
        gap = relative_gap(inc_obj, bound) if inc_x is not None else np.inf
        if inc_x is not None and (gap <= rel_gap or bound >= inc_obj):
            break
        if nodes >= node_limit:
            status = "node_limit"
            break
        if time.monotonic() - t0 > time_limit:
            status = "time_limit"
            break
        node_bound, _, lb, ub, sol = heapq.heappop(heap)
        nodes += 1
        if node_bound >= inc_obj - 1e-12 * max(1.0, abs(inc_obj)):
            continue
        x = sol.x
        frac = np.where(integer, np.abs(x - np.round(x)), 0.0)
        if frac.max(initial=0.0) <= INT_TOL:
            xi = np.where(integer, np.round(x), x)
            obj = sign * model.objective_value(xi)
            if obj < inc_obj:
                inc_x, inc_obj = xi, obj
                open_bound = min([h[0] for h in heap], default=inc_obj)
                open_bound = min(open_bound, inc_obj)
                log.append(_log_line(nodes, sign * inc_obj, sign * open_bound, relative_gap(inc_obj, open_bound)))
            continue
        j = int(np.argmax(frac))  # most fractional; argmax keeps the smallest index on ties
        for child_lb, child_ub in ((lb, np.where(np.arange(len(ub)) == j, np.floor(x[j]), ub)),
                                   (np.where(np.arange(len(lb)) == j, np.ceil(x[j]), lb), ub)):
            try:
                cs = relax(child_lb, child_ub)
            except _Unbounded:
                return MipSolution("unbounded", backend="bnb")
            if cs is None:
                continue
            counter += 1
            heapq.heappush(heap, (sign * cs.objective, counter, child_lb, child_ub, cs))
    if inc_x is None:
        return MipSolution("infeasible" if status == "optimal" else status, nodes=nodes, log=log, backend="bnb")
    bound = min([h[0] for h in heap], default=inc_obj)
    bound = min(bound, inc_obj)
    log.append(_log_line(nodes, sign * inc_obj, sign * bound, relative_gap(inc_obj, bound)))
    return MipSolution(status, inc_x, sign * inc_obj, sign * bound, nodes, log, "bnb")


class _Unbounded(Exception):
    pass


def _solve_highs_mip(model: LpModel, rel_gap, node_limit, time_limit) -> MipSolution:
    senses = np.array(model.senses)
    lo = np.where(senses == "<=", -np.inf, model.rhs)
    hi = np.where(senses == ">=", np.inf, model.rhs)
    sign = -1.0 if model.maximize else 1.0
    integrality = model.integrality.astype(int) if model.integrality is not None else None
    # HiGHS presolve in scipy 1.15 can return a suboptimal point flagged optimal
    options = {"mip_rel_gap": rel_gap, "disp": False, "presolve": False}
    if np.isfinite(time_limit):
        options["time_limit"] = float(time_limit)
    if node_limit is not None and np.isfinite(node_limit):
        options["node_limit"] = int(node_limit)
    constraints = [LinearConstraint(model.A, lo, hi)] if model.shape[0] else []
    res = milp(sign * model.c, constraints=constraints, integrality=integrality,
               bounds=Bounds(model.lb, model.ub), options=options)
    nodes = int(getattr(res, "mip_node_count", 0) or 0)
    if res.status == 2:
        return MipSolution("infeasible", nodes=nodes, backend="highs")
    if res.status == 3:
        return MipSolution("unbounded", nodes=nodes, backend="highs")
    if res.x is None:
        return MipSolution("time_limit" if res.status == 1 else "error", nodes=nodes, backend="highs")
    x = np.array(res.x)
    if model.integrality is not None:
        x[model.integrality] = np.round(x[model.integrality])
    obj = model.objective_value(x)
    raw = getattr(res, "mip_dual_bound", None)
    bound = sign * raw + model.offset if raw is not None and np.isfinite(raw) else obj
    if model.maximize:
        bound = max(bound, obj)
    else:
        bound = min(bound, obj)
    status = "optimal" if res.status == 0 else ("time_limit" if "time" in str(res.message).lower() else "node_limit")
    sol = MipSolution(status, x, obj, bound, nodes, backend="highs")
    sol.log.append(_log_line(nodes, obj, bound, sol.gap))
    return sol


def _solve_external(model: LpModel, command: str) -> MipSolution:
    from .mps import write_mps, read_solution

    with tempfile.TemporaryDirectory() as tmp:
        mps_path = Path(tmp) / "model.mps"
        sol_path = Path(tmp) / "solution.txt"
        names = write_mps(model, mps_path)
        proc = subprocess.run(shlex.split(command) + [str(mps_path), str(sol_path)],
                              capture_output=True, text=True)
        if proc.returncode != 0 or not sol_path.exists():
            status = "infeasible" if "infeasible" in (proc.stdout + proc.stderr).lower() else "error"
            return MipSolution(status, backend="external", log=[proc.stderr.strip()])
        x = read_solution(sol_path, names)
    obj = model.objective_value(x)
    return MipSolution("optimal", x, obj, obj, 0, [_log_line(0, obj, obj, 0.0)], "external")


def solve_mip(model: LpModel, rel_gap: float = 1e-4, node_limit: int | None = None,
              time_limit: float = float("inf"), backend: str = "highs") -> MipSolution:
    """Solve a MIP to relative gap ``rel_gap`` = |incumbent - bound| / max(1, |incumbent|).

    Backends: ``bnb`` (built-in branch and bound over the built-in simplex),
    ``highs`` (scipy/HiGHS), ``external`` (command named by
    ``$JUMUC_EXTERNAL_SOLVER``, see :mod:`jumuc.lp.mps`).
    """
    if rel_gap < 0:
        raise ValueError("rel_gap must be >= 0")
    if backend == "bnb":
        return branch_and_bound(model, rel_gap, node_limit or 100_000, time_limit)
    if backend == "highs":
        return _solve_highs_mip(model, rel_gap, node_limit, time_limit)
    if backend == "external":
        command = os.environ.get(EXTERNAL_SOLVER_ENV)
        if not command:
            raise RuntimeError(f"{EXTERNAL_SOLVER_ENV} is not set")
        return _solve_external(model, command)
    raise ValueError(f"unknown MIP backend {backend!r}")
