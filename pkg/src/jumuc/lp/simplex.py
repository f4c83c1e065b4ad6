"""Dense bounded revised simplex (two-phase) with row duals.

Works on  min c'x  s.t.  A x + s = b,  lo <= x <= hi,  where the slack
bounds encode the row sense.  Dantzig pricing with smallest-index tie
breaking; falls back to Bland's rule after a run of degenerate pivots.
"""
from __future__ import annotations

import numpy as np

from .tolerances import FEAS_TOL

PIVOT_TOL = 1e-9
DJ_TOL = 1e-9
REFACTOR_EVERY = 64
DEGENERATE_RUN = 30


class SimplexResult:
    __slots__ = ("status", "x", "y", "d", "iterations")

    def __init__(self, status, x=None, y=None, d=None, iterations=0):
        self.status, self.x, self.y, self.d, self.iterations = status, x, y, d, iterations


def _initial_value(lo, hi):
    if np.isfinite(lo):
        return lo
    if np.isfinite(hi):
        return hi
    return 0.0


def bounded_simplex(A: np.ndarray, b: np.ndarray, c: np.ndarray, lo: np.ndarray, hi: np.ndarray,
                    row_lo: np.ndarray, row_hi: np.ndarray, max_iter: int = 50000) -> SimplexResult:
    """Solve min c'x s.t. A x + s = b with lo <= x <= hi and row_lo <= s <= row_hi.

    Returns primal x (structural only), row duals y and reduced costs d = c - A'y.
    """
    m, n = A.shape
    # Columns: structural (n) | slack (m) | artificial (m)
    sgn = np.ones(m)
    lo_all = np.concatenate([lo, row_lo, np.zeros(m)])
    hi_all = np.concatenate([hi, row_hi, np.full(m, np.inf)])
    N = n + 2 * m
    val = np.array([_initial_value(l, h) for l, h in zip(lo_all, hi_all)])
    val[n + m:] = 0.0
    resid = b - A @ val[:n] - val[n:n + m]
    sgn = np.where(resid >= 0, 1.0, -1.0)
    val[n + m:] = np.abs(resid)

    def column(j):
        if j < n:
            return A[:, j]
        col = np.zeros(m)
        if j < n + m:
            col[j - n] = 1.0
        else:
            col[j - n - m] = sgn[j - n - m]
        return col

    basis = np.arange(n + m, N)
    is_basic = np.zeros(N, bool)
    is_basic[basis] = True
    Binv = np.diag(1.0 / sgn)
    full = np.hstack([A, np.eye(m), np.diag(sgn)])

    def refactor():
        nonlocal Binv
        B = full[:, basis]
        Binv = np.linalg.inv(B)
        nb = ~is_basic
        val[basis] = Binv @ (b - full[:, nb] @ val[nb])

    total_iter = 0

    def run(cost):
        nonlocal Binv, total_iter
        degenerate = 0
        since_refactor = 0
        while True:
            if total_iter >= max_iter:
                return "iteration_limit"
            if since_refactor >= REFACTOR_EVERY:
                refactor()
                since_refactor = 0
            y = Binv.T @ cost[basis]
            d = cost - full.T @ y
            bland = degenerate >= DEGENERATE_RUN
            nb = ~is_basic
            inc = nb & (val < hi_all - 1e-12) & (d < -DJ_TOL)
            dec = nb & (val > lo_all + 1e-12) & (d > DJ_TOL)
            cand = np.nonzero(inc | dec)[0]
            if cand.size == 0:
                return "optimal"
            if bland:
                j = int(cand[0])
            else:
                j = int(cand[np.argmax(np.abs(d[cand]))])  # first maximal index on ties
            direction = 1.0 if inc[j] else -1.0
            alpha = Binv @ column(j)
            # basic x_B moves by -theta * delta
            delta = direction * alpha
            theta = np.inf
            if np.isfinite(lo_all[j]) and np.isfinite(hi_all[j]):
                theta = hi_all[j] - lo_all[j]
            bl, bh, bv = lo_all[basis], hi_all[basis], val[basis]
            ratio = np.full(m, np.inf)
            down = (delta > PIVOT_TOL) & np.isfinite(bl)
            up = (delta < -PIVOT_TOL) & np.isfinite(bh)
            ratio[down] = (bv[down] - bl[down]) / delta[down]
            ratio[up] = (bh[up] - bv[up]) / -delta[up]
            ratio = np.maximum(ratio, 0.0)
            leave = -1
            leave_to = 0.0
            rmin = ratio.min() if m else np.inf
            if rmin < theta - 1e-12:  # ties prefer the bound flip
                ties = np.nonzero(ratio <= rmin + 1e-12)[0]
                leave = int(ties[np.argmin(basis[ties])])
                theta = ratio[leave]
                leave_to = bl[leave] if down[leave] else bh[leave]
            if not np.isfinite(theta):
                return "unbounded"
            total_iter += 1
            degenerate = degenerate + 1 if theta <= 1e-12 else 0
            val[j] += direction * theta
            val[basis] -= theta * delta
            if leave < 0:
                # bound flip of the entering variable
                val[j] = hi_all[j] if direction > 0 else lo_all[j]
                continue
            out = basis[leave]
            val[out] = leave_to
            piv = alpha[leave]
            row = Binv[leave] / piv
            Binv -= np.outer(alpha, row)
            Binv[leave] = row
            is_basic[out] = False
            is_basic[j] = True
            basis[leave] = j
            since_refactor += 1

    # Phase 1: drive artificials to zero
    cost1 = np.zeros(N)
    cost1[n + m:] = 1.0
    if val[n + m:].sum() > 0:
        status = run(cost1)
        if status == "iteration_limit":
            return SimplexResult("iteration_limit", iterations=total_iter)
        refactor()
        infeas = val[n + m:].sum()
        if infeas > FEAS_TOL * max(1.0, np.abs(b).max(initial=0.0)):
            return SimplexResult("infeasible", iterations=total_iter)
    hi_all[n + m:] = 0.0
    val[n + m:] = np.where(is_basic[n + m:], val[n + m:], 0.0)

    cost2 = np.concatenate([c, np.zeros(2 * m)])
    status = run(cost2)
    if status != "optimal":
        return SimplexResult(status, iterations=total_iter)
    refactor()
    y = np.linalg.solve(full[:, basis].T, cost2[basis])
    d = c - A.T @ y
    return SimplexResult("optimal", x=val[:n].copy(), y=y, d=d, iterations=total_iter)
