"""Scenario-indexed first-stage master MILP.

Columns: x | alpha_val | per scenario s: (y^s, eta^s).  The product
x'L y^s in the epigraph row is carried by eta^s, one per nonzero of L,
tied to the binary and the dispatch column by four big-M rows.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

from .duality import as_v_vector
from .formulation import MatrixForm
from .lp import LpModel, MipSolution, solve_mip, write_mps

DEDUP_TOL = 1e-9


class DuplicateScenarioError(ValueError):
    pass


class MasterInfeasibleError(RuntimeError):
    def __init__(self, families: list[str]):
        self.families = families
        super().__init__("master problem infeasible; violated families: " + ", ".join(families or ["unknown"]))


@dataclass
class ScenarioBlock:
    v: np.ndarray
    A: sparse.csr_matrix  # rows over [x | alpha | y^s | eta^s]
    rhs: np.ndarray
    senses: list[str]
    tags: list[str]


@dataclass
class MasterModel:
    mf: MatrixForm
    big_m: float
    L_bar: float = 0.0
    scenarios: list[ScenarioBlock] = field(default_factory=list)
    L_pairs: tuple[np.ndarray, np.ndarray, np.ndarray] = None  # (x col, y col, coefficient)

    @property
    def n_eta(self) -> int:
        return len(self.L_pairs[0])

    @property
    def block_width(self) -> int:
        return self.mf.ny + self.n_eta

    @property
    def n_cols(self) -> int:
        return self.mf.nx + 1 + len(self.scenarios) * self.block_width

    def scenario_offset(self, s: int) -> int:
        return self.mf.nx + 1 + s * self.block_width

    def y_of(self, z: np.ndarray, s: int) -> np.ndarray:
        o = self.scenario_offset(s)
        return z[o:o + self.mf.ny]

    def eta_of(self, z: np.ndarray, s: int) -> np.ndarray:
        o = self.scenario_offset(s) + self.mf.ny
        return z[o:o + self.n_eta]


def init_master(mf: MatrixForm) -> MasterModel:
    L = mf.L.tocoo()
    pmax = max((u.p_max for u in mf.sys.units), default=0.0)
    return MasterModel(mf, 1.01 * pmax, 0.0, [], (L.row.copy(), L.col.copy(), L.data.copy()))


def build_scenario_block(m: MasterModel, v) -> ScenarioBlock:
    """Rows of one scenario, with its (y, eta) columns placed at local offset 0."""
    mf = m.mf
    v = as_v_vector(mf, v)
    nx, ny, ne = mf.nx, mf.ny, m.n_eta
    width = nx + 1 + ny + ne
    xr, yc, lv = m.L_pairs
    ni, nq = mf.H.shape[0], mf.F.shape[0]

    def place(X=None, a=None, Y=None, Z=None, rows=0):
        parts = [X if X is not None else sparse.csr_matrix((rows, nx)),
                 a if a is not None else sparse.csr_matrix((rows, 1)),
                 Y if Y is not None else sparse.csr_matrix((rows, ny)),
                 Z if Z is not None else sparse.csr_matrix((rows, ne))]
        return sparse.hstack(parts).tocsr()

    blocks = [place(X=mf.E, Y=mf.H, rows=ni), place(Y=mf.F, rows=nq)]
    rhs = [mf.g - mf.G @ v, mf.f - mf.M @ v]
    senses = [">="] * ni + ["="] * nq
    tags = list(mf.ineq_tags) + list(mf.eq_tags)
    # epigraph: alpha - b'y - sum L_ij eta_ij - k'x >= 0
    epi = place(X=sparse.csr_matrix(-mf.k), a=sparse.csr_matrix([[1.0]]),
                Y=sparse.csr_matrix(-mf.b), Z=sparse.csr_matrix(-lv.reshape(1, -1)), rows=1)
    blocks.append(epi)
    rhs.append(np.zeros(1))
    senses.append(">=")
    tags.append("epigraph")
    # big-M rows for eta_e = x_i * y_j
    M = m.big_m
    rows, cols, vals = [], [], []
    r = 0
    brhs, bsen = [], []
    for e, (i, j) in enumerate(zip(xr, yc)):
        eta = nx + 1 + ny + e
        yj = nx + 1 + j
        for sign_y, sign_x, rr, sense in ((-1.0, M, M, "<="),      # eta - y + M x <= M
                                          (-1.0, -M, -M, ">="),    # eta - y - M x >= -M
                                          (0.0, -M, 0.0, "<="),    # eta - M x <= 0
                                          (0.0, M, 0.0, ">=")):    # eta + M x >= 0
            rows += [r, r]
            cols += [eta, int(i)]
            vals += [1.0, sign_x]
            if sign_y:
                rows.append(r)
                cols.append(yj)
                vals.append(sign_y)
            brhs.append(rr)
            bsen.append(sense)
            r += 1
    if r:
        blocks.append(sparse.csr_matrix((vals, (rows, cols)), shape=(r, width)))
        rhs.append(np.array(brhs))
        senses += bsen
        tags += ["big-M"] * r
    return ScenarioBlock(v.copy(), sparse.vstack(blocks).tocsr(), np.concatenate(rhs), senses, tags)


def has_scenario(m: MasterModel, v) -> bool:
    v = as_v_vector(m.mf, v)
    return any(np.max(np.abs(b.v - v), initial=0.0) <= DEDUP_TOL for b in m.scenarios)


def add_scenario(m: MasterModel, v, block: ScenarioBlock | None = None) -> MasterModel:
    if has_scenario(m, v):
        raise DuplicateScenarioError("scenario already present in the master")
    m.scenarios.append(block if block is not None else build_scenario_block(m, v))
    return m


def master_lp_model(m: MasterModel) -> LpModel:
    mf = m.mf
    nx, w, K = mf.nx, m.block_width, len(m.scenarios)
    n = m.n_cols
    parts = [sparse.hstack([mf.A, sparse.csr_matrix((mf.A.shape[0], n - nx))])]
    rhs = [mf.e]
    senses = [">="] * mf.A.shape[0]
    tags = list(mf.a_tags)
    lb_row = np.zeros(n)
    lb_row[:nx] = mf.c
    lb_row[nx] = 1.0
    parts.append(sparse.csr_matrix(lb_row))
    rhs.append(np.array([m.L_bar]))
    senses.append(">=")
    tags.append("lower-bound")
    for s, blk in enumerate(m.scenarios):
        head = blk.A[:, :nx + 1]
        tail = blk.A[:, nx + 1:]
        left = sparse.csr_matrix((blk.A.shape[0], s * w))
        right = sparse.csr_matrix((blk.A.shape[0], (K - s - 1) * w))
        parts.append(sparse.hstack([head, left, tail, right]))
        rhs.append(blk.rhs)
        senses += blk.senses
        tags += blk.tags
    c = np.zeros(n)
    c[:nx] = mf.c
    c[nx] = 1.0
    lb = np.concatenate([mf.x_lb, [0.0], np.tile(np.concatenate([np.full(mf.ny, -np.inf), np.full(m.n_eta, -np.inf)]), K)])
    ub = np.concatenate([mf.x_ub, [np.inf], np.full(K * w, np.inf)])
    integ = np.zeros(n, bool)
    integ[:nx] = True
    return LpModel(sparse.vstack(parts).tocsr(), senses, np.concatenate(rhs), c, lb, ub,
                   integrality=integ, row_names=tuple(tags), name="MASTER")


@dataclass
class MasterResult:
    x: np.ndarray
    U_in: float
    L_in: float
    alpha: float
    z: np.ndarray
    mip: MipSolution


def first_stage_families(mf: MatrixForm, backend: str = "highs") -> list[str]:
    """Constraint families that cannot be met together: elastic MIP on A x >= e."""
    nx, na = mf.nx, mf.A.shape[0]
    A = sparse.hstack([mf.A, sparse.identity(na)]).tocsr()
    c = np.concatenate([np.zeros(nx), np.ones(na)])
    integ = np.concatenate([np.ones(nx, bool), np.zeros(na, bool)])
    model = LpModel(A, [">="] * na, mf.e, c, np.concatenate([mf.x_lb, np.zeros(na)]),
                    np.concatenate([mf.x_ub, np.full(na, np.inf)]), integrality=integ)
    sol = solve_mip(model, 0.0, backend=backend)
    if not sol.has_incumbent:
        return ["bounds"]
    slack = sol.x[nx:]
    return sorted({mf.a_tags[i] for i in np.nonzero(slack > 1e-6)[0]})


def solve_master(m: MasterModel, eps_mp: float, L_bar: float | None = None,
                 backend: str = "highs", time_limit: float = float("inf")) -> MasterResult:
    """Solve to relative gap eps_mp; L_in = max(best bound, L_bar)."""
    if eps_mp < 0:
        raise ValueError("eps_mp must be >= 0")
    if L_bar is not None:
        m.L_bar = float(L_bar)
    model = master_lp_model(m)
    sol = solve_mip(model, eps_mp, time_limit=time_limit, backend=backend)
    if sol.status == "infeasible":
        fams = first_stage_families(m.mf, backend if backend != "external" else "highs")
        raise MasterInfeasibleError(fams or ["lower-bound", "recourse"])
    if not sol.has_incumbent:
        raise RuntimeError(f"master MIP returned no incumbent ({sol.status})")
    z = sol.x
    nx = m.mf.nx
    bound = sol.bound if np.isfinite(sol.bound) else -np.inf
    return MasterResult(np.round(z[:nx]), sol.objective, max(bound, m.L_bar), float(z[nx]), z, sol)


def export_master_mps(m: MasterModel, path) -> list[str]:
    """Write the current master MILP in fixed MPS format; returns the column names."""
    return write_mps(master_lp_model(m), path)
