"""Second-stage duality, recourse evaluation and enumeration oracles.

For a fixed first-stage x the recourse is

    Q(x, v) = k'x + min_y (b + L'x)'y   s.t.  H y >= g - E x - G v,  F y = f - M v

and its LP dual (lambda >= 0 on the inequalities, mu free on the equalities)

    Q(x, v) = k'x + max  lambda'(g - E x - G v) + mu'(f - M v)
                    s.t. H'lambda + F'mu = b + L'x.
"""
from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import sparse

from .formulation import DispatchSolution, FirstStageDecision, MatrixForm, canonical_first_stage
from .lp import LpModel, solve_lp
from .system import ScenarioRealization, UncertaintySet, check_membership

ENUMERATION_LIMIT = 10**6


class RecourseInfeasibleError(RuntimeError):
    """The dispatch LP has no solution; shedding and curtailment should prevent this."""


class FirstStageInfeasibleError(ValueError):
    pass


def as_x_vector(mf: MatrixForm, x) -> np.ndarray:
    if isinstance(x, FirstStageDecision):
        return x.to_vector(mf)
    x = np.asarray(x, dtype=float)
    if x.shape != (mf.nx,):
        raise ValueError(f"x has shape {x.shape}, expected ({mf.nx},)")
    return x


def as_v_vector(mf: MatrixForm, v) -> np.ndarray:
    if isinstance(v, ScenarioRealization):
        return v.to_vector()
    v = np.asarray(v, dtype=float)
    if v.shape != (mf.nv,):
        raise ValueError(f"v has shape {v.shape}, expected ({mf.nv},)")
    return v


def to_scenario(mf: MatrixForm, v) -> ScenarioRealization:
    return ScenarioRealization.from_vector(v, len(mf.sys.loads), len(mf.sys.wind_farms), mf.sys.T)


@dataclass
class BilinearMaxProblem:
    """max over v in the set and dual-feasible (lambda, mu) of
    const + lambda'r + mu'f - lambda'G v - mu'M v, with r = g - E x."""

    mf: MatrixForm
    x: np.ndarray
    r: np.ndarray  # g - E x
    cost_y: np.ndarray  # b + L'x, right-hand side of the dual feasibility rows
    first_stage_cost: float  # c'x
    k_term: float  # k'x

    @property
    def uset(self) -> UncertaintySet:
        return self.mf.uset

    @property
    def n_lambda(self) -> int:
        return len(self.r)

    @property
    def n_mu(self) -> int:
        return len(self.mf.f)

    def dual_feasibility(self) -> tuple[sparse.csr_matrix, np.ndarray]:
        """Rows [H' F'] (lambda; mu) = b + L'x, one per y column."""
        return sparse.hstack([self.mf.H.T, self.mf.F.T]).tocsr(), self.cost_y

    def value(self, v, lam, mu) -> float:
        """Objective of the recourse dual at (v, lambda, mu), including k'x but not c'x."""
        v = as_v_vector(self.mf, v)
        return float(lam @ (self.r - self.mf.G @ v) + mu @ (self.mf.f - self.mf.M @ v) + self.k_term)

    def bilinear(self, v, lam, mu) -> float:
        """(lambda'G + mu'M) v."""
        v = as_v_vector(self.mf, v)
        return float(lam @ (self.mf.G @ v) + mu @ (self.mf.M @ v))

    def solve_fixed_v(self, v, backend: str = "highs") -> tuple[float, np.ndarray, np.ndarray]:
        """Dual LP at fixed v; returns (recourse value, lambda, mu)."""
        v = as_v_vector(self.mf, v)
        D, rhs = self.dual_feasibility()
        nl, nm = self.n_lambda, self.n_mu
        obj = np.concatenate([self.r - self.mf.G @ v, self.mf.f - self.mf.M @ v])
        lb = np.concatenate([np.zeros(nl), np.full(nm, -np.inf)])
        model = LpModel(D, ["="] * D.shape[0], rhs, obj, lb, np.full(nl + nm, np.inf),
                        maximize=True, offset=self.k_term, name="DUAL")
        sol = solve_lp(model, backend)
        if sol.status == "unbounded":
            raise RecourseInfeasibleError("recourse dual is unbounded: dispatch infeasible at this scenario")
        if not sol.optimal:
            raise RuntimeError(f"recourse dual LP failed: {sol.status}")
        return sol.objective, sol.x[:nl], sol.x[nl:]


def dualize(mf: MatrixForm, x) -> BilinearMaxProblem:
    xv = as_x_vector(mf, x)
    if not mf.is_first_stage_feasible(xv):
        raise FirstStageInfeasibleError("first-stage decision violates A x >= e or its bounds")
    return BilinearMaxProblem(mf, xv, mf.g - mf.E @ xv, mf.b + mf.L.T @ xv,
                              float(mf.c @ xv), float(mf.k @ xv))


def recourse_model(mf: MatrixForm, x, v) -> LpModel:
    """Primal dispatch LP for fixed (x, v); y is free, bounds live in the rows."""
    xv, vv = as_x_vector(mf, x), as_v_vector(mf, v)
    A = sparse.vstack([mf.H, mf.F]).tocsr()
    rhs = np.concatenate([mf.g - mf.E @ xv - mf.G @ vv, mf.f - mf.M @ vv])
    senses = [">="] * mf.H.shape[0] + ["="] * mf.F.shape[0]
    return LpModel(A, senses, rhs, mf.b + mf.L.T @ xv, np.full(mf.ny, -np.inf), np.full(mf.ny, np.inf),
                   offset=float(mf.k @ xv), name="RECOURSE")


def evaluate_recourse(mf: MatrixForm, x, v, backend: str = "highs",
                      check: bool = True) -> tuple[float, DispatchSolution]:
    """Second-stage cost (dispatch plus penalties, k'x included) and the optimal dispatch."""
    xv, vv = as_x_vector(mf, x), as_v_vector(mf, v)
    if check:
        if not mf.is_first_stage_feasible(xv):
            raise FirstStageInfeasibleError("first-stage decision violates A x >= e or its bounds")
        rep = check_membership(mf.uset, to_scenario(mf, vv))
        if not rep:
            raise ValueError("scenario outside the uncertainty set: " + "; ".join(rep.violations[:3]))
    sol = solve_lp(recourse_model(mf, xv, vv), backend)
    if sol.status == "infeasible":
        raise RecourseInfeasibleError("dispatch LP infeasible")
    if not sol.optimal:
        raise RuntimeError(f"dispatch LP failed: {sol.status}")
    return sol.objective, DispatchSolution.from_vector(mf, sol.x)


# ---------------------------------------------------------------- vertices


def _group_patterns(dev: np.ndarray, gamma: float) -> list[list[np.ndarray]]:
    """Per period, the extreme normalized deviations xi in [-1, 1]^n of one entity group."""
    if abs(gamma - round(gamma)) > 1e-9:
        raise ValueError(f"vertex enumeration needs an integer budget, got {gamma}")
    gamma = int(round(gamma))
    n, T = dev.shape
    out = []
    for t in range(T):
        active = [i for i in range(n) if dev[i, t] > 0]
        k = min(gamma, len(active))
        pats = []
        for chosen in itertools.combinations(active, k):
            for signs in itertools.product((1.0, -1.0), repeat=k):
                xi = np.zeros(n)
                xi[list(chosen)] = signs
                pats.append(xi)
        out.append(pats)
    return out


def count_vertices(uset: UncertaintySet) -> int:
    lp = _group_patterns(uset.load_dev, uset.gamma_load)
    wp = _group_patterns(uset.wind_dev, uset.gamma_wind)
    return math.prod(len(a) * len(b) for a, b in zip(lp, wp))


def enumerate_vertices(uset: UncertaintySet, limit: int = ENUMERATION_LIMIT):
    """Yield every vertex of the budgeted set as a flat v vector (loads then wind)."""
    lp = _group_patterns(uset.load_dev, uset.gamma_load)
    wp = _group_patterns(uset.wind_dev, uset.gamma_wind)
    total = math.prod(len(a) * len(b) for a, b in zip(lp, wp))
    if total > limit:
        raise ValueError(f"{total} vertices exceed the enumeration limit {limit}")
    per_period = [list(itertools.product(a, b)) for a, b in zip(lp, wp)]
    for combo in itertools.product(*per_period):
        xl = np.column_stack([c[0] for c in combo])
        xw = np.column_stack([c[1] for c in combo])
        load = uset.load_mean + uset.load_dev * xl
        wind = uset.wind_mean + uset.wind_dev * xw
        yield np.concatenate([load.ravel(), wind.ravel()])


def brute_force_worst_case(mf: MatrixForm, x, uset: UncertaintySet | None = None,
                           backend: str = "highs", workers: int = 1) -> tuple[np.ndarray, float]:
    """Worst-case recourse by evaluating every vertex; ties go to the first vertex in order."""
    uset = uset or mf.uset
    xv = as_x_vector(mf, x)
    if not mf.is_first_stage_feasible(xv):
        raise FirstStageInfeasibleError("first-stage decision violates A x >= e or its bounds")
    verts = list(enumerate_vertices(uset))

    def ev(v):
        return evaluate_recourse(mf, xv, v, backend, check=False)[0]

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            vals = list(pool.map(ev, verts))
    else:
        vals = [ev(v) for v in verts]
    best = int(np.argmax(vals))
    return verts[best], float(vals[best])


# ------------------------------------------------- robust enumeration oracle


def enumerate_first_stage(mf: MatrixForm, limit: int = 200_000):
    """Yield every first-stage feasible x with tau set to the actual start-ups."""
    sys = mf.sys
    T = sys.T
    starts = []
    for n, task in enumerate(sys.maintenance):
        opts = [t for t in range(T) if mf.x_ub[mf.xmap("q", n, t)] > 0 and mf.x_lb[mf.xmap("q", n, t)] <= 0
                or mf.x_lb[mf.xmap("q", n, t)] >= 1]
        starts.append(opts)
    n_u = len(sys.units) * T
    total = math.prod(len(s) for s in starts) * 2**n_u
    if total > limit:
        raise ValueError(f"{total} first-stage candidates exceed the limit {limit}")
    for combo in itertools.product(*starts):
        base = np.zeros(mf.nx)
        for n, s in enumerate(combo):
            base[mf.xmap("q", n, s)] = 1.0
            for t in range(s, min(T, s + sys.maintenance[n].duration)):
                base[mf.xmap("m", n, t)] = 1.0
        for bits in range(2**n_u):
            x = base.copy()
            u = np.array([(bits >> i) & 1 for i in range(n_u)], dtype=float)
            x[mf.xmap.slice("u")] = u
            x = canonical_first_stage(mf, x)
            if mf.is_first_stage_feasible(x):
                yield x


@dataclass
class RobustOracleResult:
    x: np.ndarray
    objective: float
    worst_v: np.ndarray
    candidates: int
    full_sweeps: int


def brute_force_robust(mf: MatrixForm, backend: str = "highs") -> RobustOracleResult:
    """min over all feasible x of c'x + max over vertices of Q(x, v), by exhaustive search.

    Candidates are ordered by a lower bound c'x + max over a pool of known bad
    vertices; a full vertex sweep runs only while that bound beats the incumbent.
    """
    verts = list(enumerate_vertices(mf.uset))
    xs = list(enumerate_first_stage(mf))
    if not xs:
        raise FirstStageInfeasibleError("no feasible first-stage schedule")

    def q(x, v):
        try:
            return evaluate_recourse(mf, x, v, backend, check=False)[0]
        except RecourseInfeasibleError:
            return np.inf

    pool = [mf.uset.mean_vector()]
    lbs = [float(mf.c @ x) + q(x, pool[0]) for x in xs]
    order = np.argsort(lbs, kind="stable")
    best_val, best_x, best_v = np.inf, None, None
    sweeps = 0
    for idx in order:
        x = xs[idx]
        cx = float(mf.c @ x)
        lb = cx + max(q(x, v) for v in pool)
        if lb >= best_val:
            continue
        sweeps += 1
        worst, worst_v = -np.inf, None
        for v in verts:
            val = q(x, v)
            if val > worst:
                worst, worst_v = val, v
            if cx + worst >= best_val:
                break
        if not any(np.array_equal(worst_v, p) for p in pool):
            pool.append(worst_v)
        if cx + worst < best_val:
            best_val, best_x, best_v = cx + worst, x, worst_v
    return RobustOracleResult(best_x, best_val, best_v, len(xs), sweeps)
