from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy import sparse
from scipy.optimize import linprog

from .simplex import bounded_simplex
from .tolerances import DUAL_REL_TOL, FEAS_TOL

SENSES = (">=", "<=", "=")


@dataclass(frozen=True)
class LpModel:
    """min/max c'x + offset  s.t.  rows (A x  sense  rhs),  lb <= x <= ub."""

    A: sparse.csr_matrix
    senses: tuple[str, ...]
    rhs: np.ndarray
    c: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    maximize: bool = False
    offset: float = 0.0
    integrality: np.ndarray | None = None
    col_names: tuple[str, ...] | None = None
    row_names: tuple[str, ...] | None = None
    name: str = "MODEL"

    def __post_init__(self):
        A = sparse.csr_matrix(self.A, dtype=float)
        m, n = A.shape
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "senses", tuple(self.senses))
        for fld, size in (("rhs", m), ("c", n), ("lb", n), ("ub", n)):
            arr = np.asarray(getattr(self, fld), dtype=float).reshape(-1)
            if arr.shape != (size,):
                raise ValueError(f"{fld} has shape {arr.shape}, expected ({size},)")
            object.__setattr__(self, fld, arr)
        if len(self.senses) != m or any(s not in SENSES for s in self.senses):
            raise ValueError("senses must be one of >=, <=, = per row")
        if not (np.isfinite(A.data).all() and np.isfinite(self.rhs).all() and np.isfinite(self.c).all()):
            raise ValueError("coefficients must be finite")
        if (self.lb > self.ub).any():
            raise ValueError("variable bounds need lb <= ub")
        if self.integrality is not None:
            object.__setattr__(self, "integrality", np.asarray(self.integrality, dtype=bool).reshape(n))

    @property
    def shape(self) -> tuple[int, int]:
        return self.A.shape

    def with_bounds(self, lb, ub) -> "LpModel":
        return replace(self, lb=lb, ub=ub)

    def objective_value(self, x) -> float:
        return float(self.c @ np.asarray(x, float) + self.offset)


@dataclass
class LpSolution:
    status: str  # optimal | infeasible | unbounded | iteration_limit | numerical_failure
    x: np.ndarray | None = None
    duals: np.ndarray | None = None  # per row; d(objective)/d(rhs)
    reduced_costs: np.ndarray | None = None
    objective: float = float("nan")
    iterations: int = 0
    backend: str = ""

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"


def _row_bounds(senses):
    lo = np.array([0.0 if s == "<=" else (-np.inf if s == ">=" else 0.0) for s in senses])
    hi = np.array([np.inf if s == "<=" else 0.0 for s in senses])
    return lo, hi


def _solve_simplex(model: LpModel) -> LpSolution:
    sign = -1.0 if model.maximize else 1.0
    c = sign * model.c
    m, n = model.shape
    if m == 0:
        x = np.where(c > 0, model.lb, np.where(c < 0, model.ub, np.where(np.isfinite(model.lb), model.lb,
                                                                          np.where(np.isfinite(model.ub), model.ub, 0.0))))
        if not np.isfinite(x).all():
            return LpSolution("unbounded", backend="simplex")
        return LpSolution("optimal", x, np.zeros(0), sign * c, model.objective_value(x), 0, "simplex")
    # Slack s_i = rhs_i - a_i x:  '<=' -> s >= 0,  '>=' -> s <= 0,  '=' -> s = 0.
    row_lo, row_hi = _row_bounds(model.senses)
    dense = model.A.toarray()
    for attempt in range(2):
        try:
            res = bounded_simplex(dense, model.rhs, c, model.lb, model.ub, row_lo, row_hi)
            break
        except np.linalg.LinAlgError:
            res = None
    if res is None:
        return LpSolution("numerical_failure", backend="simplex")
    if res.status != "optimal":
        return LpSolution(res.status, iterations=res.iterations, backend="simplex")
    return LpSolution("optimal", res.x, sign * res.y, sign * res.d, model.objective_value(res.x),
                      res.iterations, "simplex")


def _solve_highs(model: LpModel) -> LpSolution:
    sign = -1.0 if model.maximize else 1.0
    c = sign * model.c
    senses = np.array(model.senses)
    le, ge, eq = senses == "<=", senses == ">=", senses == "="
    A = model.A
    A_ub = sparse.vstack([A[le], -A[ge]]).tocsr() if (le | ge).any() else None
    b_ub = np.concatenate([model.rhs[le], -model.rhs[ge]]) if (le | ge).any() else None
    A_eq = A[eq] if eq.any() else None
    b_eq = model.rhs[eq] if eq.any() else None
    bounds = np.column_stack([np.where(np.isfinite(model.lb), model.lb, -np.inf),
                              np.where(np.isfinite(model.ub), model.ub, np.inf)])
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq, bounds=bounds, method="highs")
    status = {0: "optimal", 1: "iteration_limit", 2: "infeasible", 3: "unbounded"}.get(res.status, "numerical_failure")
    if status != "optimal":
        return LpSolution(status, iterations=int(getattr(res, "nit", 0)), backend="highs")
    y = np.zeros(len(senses))
    nle = int(le.sum())
    if A_ub is not None:
        mu = res.ineqlin.marginals
        y[np.nonzero(le)[0]] = mu[:nle]
        y[np.nonzero(ge)[0]] = -mu[nle:]
    if A_eq is not None:
        y[np.nonzero(eq)[0]] = res.eqlin.marginals
    d = c - A.T @ y
    return LpSolution("optimal", res.x, sign * y, sign * d, model.objective_value(res.x), int(res.nit), "highs")


def solve_lp(model: LpModel, backend: str = "simplex") -> LpSolution:
    """Solve the continuous relaxation of ``model``.

    ``backend="simplex"`` runs the built-in bounded revised simplex;
    ``backend="highs"`` delegates to HiGHS through scipy. Both return row
    duals with the convention dual_i = d(objective)/d(rhs_i).

    MIP backend names are accepted too: ``bnb`` means the built-in simplex,
    ``external`` means HiGHS (the external file contract carries no duals).
    """
    backend = {"bnb": "simplex", "external": "highs"}.get(backend, backend)
    if backend == "simplex":
        return _solve_simplex(model)
    if backend == "highs":
        return _solve_highs(model)
    raise ValueError(f"unknown LP backend {backend!r}")


@dataclass
class Certificate:
    primal_residual: float
    dual_residual: float
    complementarity: float
    primal_objective: float
    dual_objective: float

    @property
    def duality_gap(self) -> float:
        return abs(self.primal_objective - self.dual_objective) / max(1.0, abs(self.primal_objective))

    def ok(self, feas=FEAS_TOL, comp=1e-6, gap=DUAL_REL_TOL) -> bool:
        return (self.primal_residual <= feas and self.dual_residual <= feas
                and self.complementarity <= comp and self.duality_gap <= gap)


def certify(model: LpModel, sol: LpSolution) -> Certificate:
    """Optimality certificate residuals of ``sol`` (scaled to min-sense)."""
    x, y, d = sol.x, sol.duals, sol.reduced_costs
    sign = -1.0 if model.maximize else 1.0
    y, d = sign * y, sign * d
    c = sign * model.c
    ax = model.A @ x
    senses = np.array(model.senses)
    viol = np.zeros(len(senses))
    viol[senses == ">="] = np.maximum(model.rhs - ax, 0)[senses == ">="]
    viol[senses == "<="] = np.maximum(ax - model.rhs, 0)[senses == "<="]
    viol[senses == "="] = np.abs(ax - model.rhs)[senses == "="]
    bviol = np.maximum(model.lb - x, 0).max(initial=0.0), np.maximum(x - model.ub, 0).max(initial=0.0)
    primal_res = max(viol.max(initial=0.0), *bviol)

    dres = 0.0
    dres = max(dres, np.maximum(-y[senses == ">="], 0).max(initial=0.0))
    dres = max(dres, np.maximum(y[senses == "<="], 0).max(initial=0.0))
    d_true = c - model.A.T @ y
    lb_inf, ub_inf = ~np.isfinite(model.lb), ~np.isfinite(model.ub)
    dres = max(dres, np.maximum(d_true[lb_inf], 0).max(initial=0.0))  # no lower bound: d <= 0
    dres = max(dres, np.maximum(-d_true[ub_inf], 0).max(initial=0.0))  # no upper bound: d >= 0
    dres = max(dres, np.abs(d_true - d).max(initial=0.0))

    slack = ax - model.rhs
    comp_rows = np.abs(y * slack)[senses != "="].max(initial=0.0)
    dpos, dneg = np.maximum(d_true, 0), np.maximum(-d_true, 0)
    with np.errstate(invalid="ignore"):
        comp_lb = np.where(np.isfinite(model.lb), dpos * (x - model.lb), dpos * 0).max(initial=0.0)
        comp_ub = np.where(np.isfinite(model.ub), dneg * (model.ub - x), dneg * 0).max(initial=0.0)
    comp = max(comp_rows, comp_lb, comp_ub)

    lbf = np.where(np.isfinite(model.lb), model.lb, 0.0)
    ubf = np.where(np.isfinite(model.ub), model.ub, 0.0)
    dual_obj = float(model.rhs @ y + dpos @ lbf - dneg @ ubf) + sign * model.offset
    primal_obj = float(c @ x) + sign * model.offset
    return Certificate(primal_res, dres, comp, sign * primal_obj, sign * dual_obj)
