"""Outer approximation for the bilinear worst-case problem at a fixed x.

Each iteration solves the dual LP at the current scenario v_j (a lower
bound, since every evaluated scenario is a member of the set), then a
linear master over (xi+, xi-, lambda, mu, beta) in which the bilinear term
-(lambda'G + mu'M) v is replaced by the tangent planes collected so far.
The master's next v becomes the following iterate.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

from .duality import BilinearMaxProblem, as_v_vector
from .lp import LpModel, solve_lp
from .system import ScenarioRealization, UncertaintySet


@dataclass
class OaCut:
    """Tangent plane of the bilinear term (lambda'G + mu'M) v at (v_j, lambda_j, mu_j).

    L_j(v, lambda, mu) = w_j'v_j + w_j'(v - v_j) + (lambda'G + mu'M - w_j') v_j
    with w_j = G'lambda_j + M'mu_j.
    """

    j: int
    v: np.ndarray
    lam: np.ndarray
    mu: np.ndarray
    w: np.ndarray
    Gv: np.ndarray  # G v_j, the lambda coefficient
    Mv: np.ndarray  # M v_j, the mu coefficient

    def evaluate(self, v, lam, mu) -> float:
        return float(self.w @ self.v + self.w @ (v - self.v) + lam @ self.Gv + mu @ self.Mv - self.w @ self.v)


@dataclass
class OaState:
    L_OA: float = -np.inf
    U_OA: float = np.inf
    j: int = 0
    delta: float = 1e-3
    cuts: list[OaCut] = field(default_factory=list)
    trace: list[tuple[int, float, float]] = field(default_factory=list)
    converged: bool = False
    best_v: np.ndarray | None = None

    @property
    def upper(self) -> float:
        """Reported bound: the master value, never below a value actually attained."""
        return max(self.U_OA, self.L_OA)


def make_cut(bp: BilinearMaxProblem, j: int, v, lam, mu) -> OaCut:
    G, M = bp.mf.G, bp.mf.M
    v = as_v_vector(bp.mf, v)
    return OaCut(j, v.copy(), lam.copy(), mu.copy(), G.T @ lam + M.T @ mu, G @ v, M @ v)


def _master_model(bp: BilinearMaxProblem, cuts: list[OaCut]) -> tuple[LpModel, slice, slice]:
    """Columns: xi+ (nv) | xi- (nv) | lambda | mu | beta."""
    mf, uset = bp.mf, bp.uset
    nv, nl, nm = mf.nv, bp.n_lambda, bp.n_mu
    n = 2 * nv + nl + nm + 1
    mean, dev = uset.mean_vector(), uset.dev_vector()
    sl_p, sl_m = slice(0, nv), slice(nv, 2 * nv)
    sl_l, sl_u = slice(2 * nv, 2 * nv + nl), slice(2 * nv + nl, 2 * nv + nl + nm)
    ib = n - 1

    blocks, rhs, senses = [], [], []
    # dual feasibility: H'lambda + F'mu = b + L'x
    D, drhs = bp.dual_feasibility()
    blocks.append(sparse.hstack([sparse.csr_matrix((D.shape[0], 2 * nv)), D,
                                 sparse.csr_matrix((D.shape[0], 1))]))
    rhs.append(drhs)
    senses += ["="] * D.shape[0]
    # per-period budgets on the normalized deviations
    T, nd, nw = uset.T, uset.n_load, uset.n_wind
    rows, cols = [], []
    r = 0
    budget_rhs = []
    for group, offset, count, gamma in (("load", 0, nd, uset.gamma_load), ("wind", nd * T, nw, uset.gamma_wind)):
        for t in range(T):
            for e in range(count):
                k = offset + e * T + t
                rows += [r, r]
                cols += [k, nv + k]
            budget_rhs.append(gamma)
            r += 1
    if r:
        blocks.append(sparse.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(r, n)))
        rhs.append(np.array(budget_rhs, dtype=float))
        senses += ["<="] * r
    # cuts: beta <= -L_i(v, lambda, mu), with v = mean + dev*(xi+ - xi-)
    for cut in cuts:
        row = np.zeros(n)
        wd = cut.w * dev
        row[sl_p] = wd
        row[sl_m] = -wd
        row[sl_l] = cut.Gv
        row[sl_u] = cut.Mv
        row[ib] = 1.0
        blocks.append(sparse.csr_matrix(row))
        rhs.append(np.array([cut.w @ cut.v - cut.w @ mean]))
        senses.append("<=")
    A = sparse.vstack(blocks).tocsr()
    obj = np.zeros(n)
    obj[sl_l] = bp.r
    obj[sl_u] = mf.f
    obj[ib] = 1.0
    lb = np.zeros(n)
    ub = np.full(n, np.inf)
    ub[:2 * nv] = np.where(np.concatenate([dev, dev]) > 0, 1.0, 0.0)
    lb[sl_u] = -np.inf
    lb[ib] = -np.inf
    model = LpModel(A, senses, np.concatenate(rhs), obj, lb, ub, maximize=True,
                    offset=bp.first_stage_cost + bp.k_term, name="OAMASTER")
    return model, sl_p, sl_m


def solve_worst_case(bp: BilinearMaxProblem, v0, delta: float = 1e-3, max_iter: int = 100,
                     backend: str = "highs") -> tuple[np.ndarray, float, OaState]:
    """Outer-approximation worst case at a fixed x.

    Returns (v_hat, U_bar, state) where values include c'x. ``v_hat`` is the
    best scenario evaluated and ``U_bar`` = max(U_OA, L_OA).
    Stops when U_OA - L_OA < delta * max(1, |U_OA|).
    """
    if delta <= 0:
        raise ValueError("delta must be > 0")
    mf = bp.mf
    v = as_v_vector(mf, v0)
    mean, dev = bp.uset.mean_vector(), bp.uset.dev_vector()
    state = OaState(delta=delta)
    for j in range(1, max_iter + 1):
        state.j = j
        val, lam, mu = bp.solve_fixed_v(v, backend)
        total = val + bp.first_stage_cost
        if total > state.L_OA:
            state.L_OA, state.best_v = total, v.copy()
        state.cuts.append(make_cut(bp, j, v, lam, mu))
        model, sl_p, sl_m = _master_model(bp, state.cuts)
        sol = solve_lp(model, backend)
        if not sol.optimal:
            raise RuntimeError(f"OA master LP failed: {sol.status}")
        state.U_OA = min(state.U_OA, sol.objective)
        state.trace.append((j, state.L_OA, state.U_OA))
        v = mean + dev * (sol.x[sl_p] - sol.x[sl_m])
        if state.U_OA - state.L_OA < delta * max(1.0, abs(state.U_OA)):
            state.converged = True
            break
    return state.best_v, state.upper, state


def pick_initial_scenario(uset: UncertaintySet) -> ScenarioRealization:
    """Loads up on the highest-mean entities and wind down on the largest farms, per period."""
    load = np.array(uset.load_mean, dtype=float)
    wind = np.array(uset.wind_mean, dtype=float)
    for t in range(uset.T):
        budget = uset.gamma_load
        for i in np.argsort(-uset.load_mean[:, t], kind="stable"):
            if budget <= 0:
                break
            share = min(1.0, budget)
            load[i, t] += share * uset.load_dev[i, t]
            budget -= share
        budget = uset.gamma_wind
        for w in np.argsort(-uset.wind_mean[:, t], kind="stable"):
            if budget <= 0:
                break
            share = min(1.0, budget)
            wind[w, t] -= share * uset.wind_dev[w, t]
            budget -= share
    return ScenarioRealization(load, wind)
