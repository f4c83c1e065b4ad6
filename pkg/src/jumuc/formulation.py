"""Constraint blocks for the joint maintenance / commitment / dispatch model
and their assembly into the matrix form

    min  c'x + max_{v in V} min_y  b'y + x'Ly + k'x
    s.t. A x >= e,   E x + H y + G v >= g,   F y + M v = f.

x holds the binaries (q, m, u, tau), y the dispatch (p, f, delta, d, dpw) and
v the realized loads and wind outputs (absolute MW, not deviations).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

import numpy as np
from scipy import sparse

from .system import PowerSystem, ScenarioRealization, UncertaintySet

X_KINDS = ("q", "m", "u", "tau")
Y_KINDS = ("p", "f", "delta", "d", "dpw")
V_KINDS = ("load", "wind")

FAMILY_ORDER = ('maint-start', 'maint-contiguous', 'maint-duration', 'maint-resource', 'min-up', 'min-down', 'reserve', 'startup', 'maint-outage', 'gen-limits', 'ramping', 'line-limit', 'angle-limit', 'shed-limit', 'curtail-limit', 'dc-flow', 'balance')


@dataclass(frozen=True)
class VariableIndex:
    kind: str
    entity: int  # position in the owning PowerSystem list
    t: int
    col: int


class IndexMap:
    """Bijection between (kind, entity, t) triples and flat column indices."""

    def __init__(self):
        self.entries: list[VariableIndex] = []
        self._lookup: dict[tuple[str, int, int], int] = {}
        self._ranges: dict[str, tuple[int, int, int]] = {}

    def add_grid(self, kind: str, n_entities: int, T: int) -> None:
        if kind in self._ranges:
            raise ValueError(f"kind {kind} already present")
        start = len(self.entries)
        for e in range(n_entities):
            for t in range(T):
                col = len(self.entries)
                self.entries.append(VariableIndex(kind, e, t, col))
                self._lookup[(kind, e, t)] = col
        self._ranges[kind] = (start, n_entities, T)

    def __call__(self, kind: str, entity: int, t: int) -> int:
        return self._lookup[(kind, entity, t)]

    def __len__(self) -> int:
        return len(self.entries)

    def slice(self, kind: str) -> slice:
        start, n, T = self._ranges[kind]
        return slice(start, start + n * T)

    def shape(self, kind: str) -> tuple[int, int]:
        _, n, T = self._ranges[kind]
        return n, T

    def grid(self, vec: np.ndarray, kind: str) -> np.ndarray:
        return np.asarray(vec)[self.slice(kind)].reshape(self.shape(kind))

    @property
    def kinds(self) -> list[str]:
        return list(self._ranges)


def first_stage_index(sys: PowerSystem) -> IndexMap:
    im = IndexMap()
    im.add_grid("q", len(sys.maintenance), sys.T)
    im.add_grid("m", len(sys.maintenance), sys.T)
    im.add_grid("u", len(sys.units), sys.T)
    im.add_grid("tau", len(sys.units), sys.T)
    return im


def second_stage_index(sys: PowerSystem) -> IndexMap:
    im = IndexMap()
    im.add_grid("p", len(sys.units), sys.T)
    im.add_grid("f", len(sys.lines), sys.T)
    im.add_grid("delta", len(sys.buses), sys.T)
    im.add_grid("d", len(sys.loads), sys.T)
    im.add_grid("dpw", len(sys.wind_farms), sys.T)
    return im


def uncertainty_index(sys: PowerSystem) -> IndexMap:
    im = IndexMap()
    im.add_grid("load", len(sys.loads), sys.T)
    im.add_grid("wind", len(sys.wind_farms), sys.T)
    return im


@dataclass
class Row:
    terms: dict[tuple[str, int], float]  # (space, col) -> coefficient, space in {"x", "y", "v"}
    sense: str  # ">=", "<=", "="
    rhs: float
    tag: str


@dataclass
class ConstraintBlock:
    rows: list[Row] = field(default_factory=list)

    def add(self, terms: Iterable[tuple[str, int, float]], sense: str, rhs: float, tag: str) -> None:
        acc: dict[tuple[str, int], float] = {}
        for space, col, coef in terms:
            acc[(space, col)] = acc.get((space, col), 0.0) + coef
        acc = {key: val for key, val in acc.items() if val != 0.0}
        if not acc:
            # A structurally empty row is either trivially true or a hard infeasibility.
            ok = {">=": 0.0 >= rhs, "<=": 0.0 <= rhs, "=": rhs == 0.0}[sense]
            if ok:
                return
        self.rows.append(Row(acc, sense, float(rhs), tag))

    def extend(self, other: "ConstraintBlock") -> "ConstraintBlock":
        self.rows.extend(other.rows)
        return self

    def __len__(self) -> int:
        return len(self.rows)

    @property
    def tags(self) -> set[str]:
        return {r.tag for r in self.rows}

    def residuals(self, x=None, y=None, v=None) -> np.ndarray:
        """Signed slack per row: >= 0 means satisfied (for '=' rows, minus |lhs-rhs|)."""
        vals = {"x": x, "y": y, "v": v}
        out = np.empty(len(self.rows))
        for i, r in enumerate(self.rows):
            lhs = sum(coef * vals[space][col] for (space, col), coef in r.terms.items())
            if r.sense == ">=":
                out[i] = lhs - r.rhs
            elif r.sense == "<=":
                out[i] = r.rhs - lhs
            else:
                out[i] = -abs(lhs - r.rhs)
        return out

    def violated(self, x=None, y=None, v=None, tol: float = 1e-9) -> list[Row]:
        res = self.residuals(x, y, v)
        return [r for r, s in zip(self.rows, res) if s < -tol]

    def matrices(self, sizes: dict[str, int]) -> tuple[dict[str, sparse.csr_matrix], np.ndarray, list[str], list[str]]:
        """Sparse coefficient matrices per space, rhs, senses and tags (rows in block order)."""
        data = {s: ([], [], []) for s in sizes}
        for i, r in enumerate(self.rows):
            for (space, col), coef in r.terms.items():
                d = data[space]
                d[0].append(i)
                d[1].append(col)
                d[2].append(coef)
        mats = {s: sparse.csr_matrix((d[2], (d[0], d[1])), shape=(len(self.rows), sizes[s]))
                for s, d in data.items()}
        rhs = np.array([r.rhs for r in self.rows], dtype=float)
        return mats, rhs, [r.sense for r in self.rows], [r.tag for r in self.rows]

    def dump(self, maps: dict[str, IndexMap] | None = None) -> str:
        """Human-readable row listing with provenance tags."""
        lines = []
        for i, r in enumerate(self.rows):
            parts = []
            for (space, col), coef in sorted(r.terms.items()):
                if maps and space in maps:
                    vi = maps[space].entries[col]
                    name = f"{vi.kind}[{vi.entity},{vi.t + 1}]"
                else:
                    name = f"{space}{col}"
                parts.append(f"{coef:+g} {name}")
            lines.append(f"{i:5d} [{r.tag}] {' '.join(parts)} {r.sense} {r.rhs:g}")
        return "\n".join(lines)


# ------------------------------------------------------------- blocks


def maintenance_cost_vector(task, T: int) -> np.ndarray:
    """Cost of starting ``task`` in each period; ``inf`` where the window overruns T."""
    hours = np.arange(1, T + 1)
    cost = task.initial_cost + task.penalty * np.abs(hours - task.reported_start)
    return np.where(hours + task.duration - 1 <= T, cost, np.inf).astype(float)


def build_maintenance_block(sys: PowerSystem) -> ConstraintBlock:
    X = first_stage_index(sys)
    T = sys.T
    blk = ConstraintBlock()
    for n, task in enumerate(sys.maintenance):
        S = task.duration
        q = lambda t: X("q", n, t)
        m = lambda t: X("m", n, t)
        blk.add([("x", q(0), 1.0), ("x", m(0), -1.0)], ">=", 0.0, "maint-start")
        for t in range(1, T):
            blk.add([("x", q(t), 1.0), ("x", m(t), -1.0), ("x", m(t - 1), 1.0)], ">=", 0.0, "maint-start")
        blk.add([("x", m(S - 1), 1.0), ("x", m(0), -1.0)], ">=", 0.0, "maint-contiguous")
        for t in range(1, T - S + 1):
            blk.add([("x", m(t - 1 + S), 1.0), ("x", m(t), -1.0), ("x", m(t - 1), 1.0)], ">=", 0.0, "maint-contiguous")
        blk.add([("x", m(t), 1.0) for t in range(T)], "=", float(S), "maint-duration")
        blk.add([("x", q(t), 1.0) for t in range(T)], "=", 1.0, "maint-duration")
        for t in range(T - S + 1, T):
            blk.add([("x", q(t), 1.0)], "<=", 0.0, "maint-duration")
    if sys.maintenance:
        for t in range(T):
            blk.add([("x", X("m", n, t), 1.0) for n in range(len(sys.maintenance))], "<=",
                    sys.resource_budget[t], "maint-resource")
    return blk


def build_commitment_block(sys: PowerSystem, uset: UncertaintySet | None = None) -> ConstraintBlock:
    """Min up/down, reserve (at forecast means), start-up linking and maintenance exclusion.

    Units are off before the first period, so the min-down row also
    applies at t=1; windows running past the horizon are truncated.
    """
    X = first_stage_index(sys)
    T = sys.T
    blk = ConstraintBlock()
    for g, unit in enumerate(sys.units):
        u = lambda t: X("u", g, t)
        # after a shut-down the unit stays off min_up periods.
        for t in range(1, T):
            W = min(unit.min_up, T - t)
            terms = [("x", u(k), -1.0) for k in range(t, t + W)]
            terms += [("x", u(t - 1), -float(W)), ("x", u(t), float(W))]
            blk.add(terms, ">=", -float(W), "min-up")
        # after a start-up the unit stays on min_down periods.
        for t in range(T):
            W = min(unit.min_down, T - t)
            terms = [("x", u(k), 1.0) for k in range(t, t + W)]
            terms.append(("x", u(t), -float(W)))
            if t > 0:
                terms.append(("x", u(t - 1), float(W)))
            blk.add(terms, ">=", 0.0, "min-down")
    load_mean = uset.load_mean if uset is not None else sys.load_forecast
    wind_mean = uset.wind_mean if uset is not None else sys.wind_forecast
    net = load_mean.sum(axis=0) - wind_mean.sum(axis=0) if len(sys.wind_farms) else load_mean.sum(axis=0)
    for t in range(T):
        blk.add([("x", X("u", g, t), unit.p_max) for g, unit in enumerate(sys.units)], ">=",
                sys.reserve_rate * float(net[t]), "reserve")
    for g in range(len(sys.units)):
        blk.add([("x", X("tau", g, 0), 1.0), ("x", X("u", g, 0), -1.0)], ">=", 0.0, "startup")
        for t in range(1, T):
            blk.add([("x", X("tau", g, t), 1.0), ("x", X("u", g, t), -1.0), ("x", X("u", g, t - 1), 1.0)],
                    ">=", 0.0, "startup")
    for n, task in enumerate(sys.maintenance):
        g = sys.unit_index(task.unit)
        for t in range(T):
            blk.add([("x", X("u", g, t), 1.0), ("x", X("m", n, t), 1.0)], "<=", 1.0, "maint-outage")
    return blk


def build_dispatch_block(sys: PowerSystem) -> tuple[ConstraintBlock, ConstraintBlock]:
    """Inequality rows (limits, ramping, shedding, curtailment) and equality rows (DC flow, balance) of the recourse."""
    X = first_stage_index(sys)
    Y = second_stage_index(sys)
    V = uncertainty_index(sys)
    T = sys.T
    ineq, eq = ConstraintBlock(), ConstraintBlock()
    for g, unit in enumerate(sys.units):
        for t in range(T):
            p, u = Y("p", g, t), X("u", g, t)
            ineq.add([("y", p, 1.0), ("x", u, -unit.p_min)], ">=", 0.0, "gen-limits")
            ineq.add([("y", p, -1.0), ("x", u, unit.p_max)], ">=", 0.0, "gen-limits")
    for g, unit in enumerate(sys.units):
        ineq.add([("y", Y("p", g, 0), -1.0)], ">=", -unit.startup_ramp, "ramping")
        for t in range(1, T):
            p1, p0 = Y("p", g, t), Y("p", g, t - 1)
            ineq.add([("y", p1, -1.0), ("y", p0, 1.0), ("x", X("u", g, t - 1), unit.ramp_up - unit.startup_ramp)],
                     ">=", -unit.startup_ramp, "ramping")
            ineq.add([("y", p0, -1.0), ("y", p1, 1.0), ("x", X("u", g, t), unit.ramp_down - unit.shutdown_ramp)],
                     ">=", -unit.shutdown_ramp, "ramping")
    for l, line in enumerate(sys.lines):
        for t in range(T):
            ineq.add([("y", Y("f", l, t), 1.0)], ">=", -line.limit, "line-limit")
            ineq.add([("y", Y("f", l, t), -1.0)], ">=", -line.limit, "line-limit")
    for b in range(len(sys.buses)):
        for t in range(T):
            ineq.add([("y", Y("delta", b, t), 1.0)], ">=", -sys.angle_limit, "angle-limit")
            ineq.add([("y", Y("delta", b, t), -1.0)], ">=", -sys.angle_limit, "angle-limit")
    for i in range(len(sys.loads)):
        for t in range(T):
            ineq.add([("y", Y("d", i, t), 1.0)], ">=", 0.0, "shed-limit")
            ineq.add([("y", Y("d", i, t), -1.0), ("v", V("load", i, t), 1.0)], ">=", 0.0, "shed-limit")
    for w in range(len(sys.wind_farms)):
        for t in range(T):
            ineq.add([("y", Y("dpw", w, t), 1.0)], ">=", 0.0, "curtail-limit")
            ineq.add([("y", Y("dpw", w, t), -1.0), ("v", V("wind", w, t), 1.0)], ">=", 0.0, "curtail-limit")

    bus_pos = {b.id: k for k, b in enumerate(sys.buses)}
    for l, line in enumerate(sys.lines):
        o, d = bus_pos[line.from_bus], bus_pos[line.to_bus]
        for t in range(T):
            # flow in MW: (f / base) * x = delta_o - delta_d
            eq.add([("y", Y("f", l, t), line.reactance / sys.base_mva),
                    ("y", Y("delta", o, t), -1.0), ("y", Y("delta", d, t), 1.0)], "=", 0.0, "dc-flow")
    for b, bus in enumerate(sys.buses):
        for t in range(T):
            terms = []
            for w, farm in enumerate(sys.wind_farms):
                if farm.bus == bus.id:
                    terms += [("v", V("wind", w, t), 1.0), ("y", Y("dpw", w, t), -1.0)]
            for g, unit in enumerate(sys.units):
                if unit.bus == bus.id:
                    terms.append(("y", Y("p", g, t), 1.0))
            for l, line in enumerate(sys.lines):
                if line.from_bus == bus.id:
                    terms.append(("y", Y("f", l, t), -1.0))
                if line.to_bus == bus.id:
                    terms.append(("y", Y("f", l, t), 1.0))
            for i, load in enumerate(sys.loads):
                if load.bus == bus.id:
                    terms += [("y", Y("d", i, t), 1.0), ("v", V("load", i, t), -1.0)]
            eq.add(terms, "=", 0.0, "balance")
    return ineq, eq


# -------------------------------------------------------- matrix form


@dataclass
class MatrixForm:
    sys: PowerSystem
    uset: UncertaintySet
    xmap: IndexMap
    ymap: IndexMap
    vmap: IndexMap
    A: sparse.csr_matrix
    e: np.ndarray
    a_tags: list[str]
    E: sparse.csr_matrix
    H: sparse.csr_matrix
    G: sparse.csr_matrix
    g: np.ndarray
    ineq_tags: list[str]
    F: sparse.csr_matrix
    M: sparse.csr_matrix
    f: np.ndarray
    eq_tags: list[str]
    L: sparse.csr_matrix
    c: np.ndarray
    b: np.ndarray
    k: np.ndarray
    x_lb: np.ndarray
    x_ub: np.ndarray

    @property
    def nx(self) -> int:
        return len(self.xmap)

    @property
    def ny(self) -> int:
        return len(self.ymap)

    @property
    def nv(self) -> int:
        return len(self.vmap)

    def objective(self, x, y) -> float:
        x, y = np.asarray(x, float), np.asarray(y, float)
        return float(self.c @ x + self.b @ y + x @ (self.L @ y) + self.k @ x)

    def first_stage_residual(self, x) -> np.ndarray:
        return self.A @ np.asarray(x, float) - self.e

    def is_first_stage_feasible(self, x, tol: float = 1e-6) -> bool:
        x = np.asarray(x, float)
        return bool((self.first_stage_residual(x) >= -tol).all()
                    and (x >= self.x_lb - tol).all() and (x <= self.x_ub + tol).all())

    def ineq_residual(self, x, y, v) -> np.ndarray:
        return self.E @ x + self.H @ y + self.G @ v - self.g

    def eq_residual(self, y, v) -> np.ndarray:
        return self.F @ y + self.M @ v - self.f

    def v_vector(self, scenario: ScenarioRealization) -> np.ndarray:
        return scenario.to_vector()

    def fix_maintenance(self, starts: dict[int, int] | None = None) -> "MatrixForm":
        """Copy with q/m fixed; ``starts`` maps task index -> 0-based start (default: reported)."""
        lb, ub = self.x_lb.copy(), self.x_ub.copy()
        for n, task in enumerate(self.sys.maintenance):
            s = (starts or {}).get(n, task.reported_start - 1)
            for t in range(self.sys.T):
                qv = 1.0 if t == s else 0.0
                mv = 1.0 if s <= t < s + task.duration else 0.0
                lb[self.xmap("q", n, t)] = ub[self.xmap("q", n, t)] = qv
                lb[self.xmap("m", n, t)] = ub[self.xmap("m", n, t)] = mv
        out = MatrixForm(**{f: getattr(self, f) for f in self.__dataclass_fields__})
        out.x_lb, out.x_ub = lb, ub
        return out


def _to_geq(mats, rhs, senses, tags):
    """Normalize rows to >= form; '=' rows are split into a (>=, <=) pair."""
    keep, sign, out_tags = [], [], []
    for i, s in enumerate(senses):
        if s == ">=":
            keep.append(i); sign.append(1.0); out_tags.append(tags[i])
        elif s == "<=":
            keep.append(i); sign.append(-1.0); out_tags.append(tags[i])
        else:
            keep += [i, i]; sign += [1.0, -1.0]; out_tags += [tags[i], tags[i]]
    D = sparse.diags(sign)
    sel = {k: D @ m[keep] for k, m in mats.items()}
    return sel, np.asarray(sign) * rhs[keep], out_tags


def assemble_matrix_form(sys: PowerSystem, uset: UncertaintySet) -> MatrixForm:
    xmap, ymap, vmap = first_stage_index(sys), second_stage_index(sys), uncertainty_index(sys)
    sizes = {"x": len(xmap), "y": len(ymap), "v": len(vmap)}

    first = build_maintenance_block(sys).extend(build_commitment_block(sys, uset))
    mats, rhs, senses, tags = first.matrices(sizes)
    if mats["y"].nnz or mats["v"].nnz:
        raise AssertionError("first-stage rows reference second-stage columns")
    amats, e, a_tags = _to_geq(mats, rhs, senses, tags)

    ineq, eq = build_dispatch_block(sys)
    imats, irhs, isenses, itags = ineq.matrices(sizes)
    imats, g, itags = _to_geq(imats, irhs, isenses, itags)
    emats, f, esenses, etags = eq.matrices(sizes)
    if any(s != "=" for s in esenses) or emats["x"].nnz:
        raise AssertionError("equality block must be '=' rows over y and v only")

    nx, ny = sizes["x"], sizes["y"]
    c = np.zeros(nx)
    x_lb, x_ub = np.zeros(nx), np.ones(nx)
    for n, task in enumerate(sys.maintenance):
        cost = maintenance_cost_vector(task, sys.T)
        for t in range(sys.T):
            col = xmap("q", n, t)
            if np.isfinite(cost[t]):
                c[col] = cost[t]
            else:
                x_ub[col] = 0.0
    b = np.zeros(ny)
    k = np.zeros(nx)
    Lr, Lc, Lv = [], [], []
    for gi, unit in enumerate(sys.units):
        for t in range(sys.T):
            c[xmap("u", gi, t)] = unit.no_load_cost
            c[xmap("tau", gi, t)] = unit.startup_cost
            k[xmap("u", gi, t)] = -unit.marginal_cost * unit.p_min
            if unit.marginal_cost:
                Lr.append(xmap("u", gi, t)); Lc.append(ymap("p", gi, t)); Lv.append(unit.marginal_cost)
    b[ymap.slice("d")] = sys.shed_penalty
    b[ymap.slice("dpw")] = sys.curtail_penalty
    L = sparse.csr_matrix((Lv, (Lr, Lc)), shape=(nx, ny))

    mf = MatrixForm(sys=sys, uset=uset, xmap=xmap, ymap=ymap, vmap=vmap,
                    A=amats["x"].tocsr(), e=e, a_tags=a_tags,
                    E=imats["x"].tocsr(), H=imats["y"].tocsr(), G=imats["v"].tocsr(), g=g, ineq_tags=itags,
                    F=emats["y"].tocsr(), M=emats["v"].tocsr(), f=f, eq_tags=etags,
                    L=L, c=c, b=b, k=k, x_lb=x_lb, x_ub=x_ub)
    _check_dimensions(mf)
    return mf


def _check_dimensions(mf: MatrixForm) -> None:
    nx, ny, nv = mf.nx, mf.ny, mf.nv
    ok = (mf.A.shape == (len(mf.e), nx)
          and mf.E.shape[0] == mf.H.shape[0] == mf.G.shape[0] == len(mf.g)
          and mf.E.shape[1] == nx and mf.H.shape[1] == ny and mf.G.shape[1] == nv
          and mf.F.shape[0] == mf.M.shape[0] == len(mf.f)
          and mf.F.shape[1] == ny and mf.M.shape[1] == nv
          and mf.L.shape == (nx, ny) and len(mf.c) == len(mf.k) == nx and len(mf.b) == ny)
    if not ok:
        raise AssertionError("matrix form dimensions are inconsistent")


# ------------------------------------------------- decisions and costs


@dataclass
class FirstStageDecision:
    q: np.ndarray  # N_M x T
    m: np.ndarray  # N_M x T
    u: np.ndarray  # N_G x T
    tau: np.ndarray  # N_G x T

    @classmethod
    def from_vector(cls, mf: MatrixForm, x) -> "FirstStageDecision":
        x = np.round(np.asarray(x, float))
        return cls(*(mf.xmap.grid(x, k).copy() for k in X_KINDS))

    def to_vector(self, mf: MatrixForm) -> np.ndarray:
        x = np.zeros(mf.nx)
        for k in X_KINDS:
            x[mf.xmap.slice(k)] = np.ravel(getattr(self, k))
        return x

    def maintenance_intervals(self) -> list[tuple[int, int]]:
        """1-based (first, last) hour of each task's maintenance window."""
        out = []
        for row in self.m:
            on = np.nonzero(row > 0.5)[0]
            out.append((int(on[0]) + 1, int(on[-1]) + 1) if len(on) else (0, 0))
        return out


@dataclass
class DispatchSolution:
    p: np.ndarray
    f: np.ndarray
    delta: np.ndarray
    d: np.ndarray
    dpw: np.ndarray

    @classmethod
    def from_vector(cls, mf: MatrixForm, y) -> "DispatchSolution":
        return cls(*(mf.ymap.grid(y, k).copy() for k in Y_KINDS))

    def to_vector(self, mf: MatrixForm) -> np.ndarray:
        y = np.zeros(mf.ny)
        for k in Y_KINDS:
            y[mf.ymap.slice(k)] = np.ravel(getattr(self, k))
        return y


def canonical_first_stage(mf: MatrixForm, x) -> np.ndarray:
    """Round x and set tau to the actual start-ups (the cheapest valid choice)."""
    x = np.round(np.asarray(x, float))
    u = mf.xmap.grid(x, "u")
    prev = np.hstack([np.zeros((u.shape[0], 1)), u[:, :-1]])
    x[mf.xmap.slice("tau")] = np.maximum(u - prev, 0.0).ravel()
    return x


@dataclass
class CostBreakdown:
    maintenance: float
    commitment: float
    dispatch: float

    @property
    def total(self) -> float:
        return self.maintenance + self.commitment + self.dispatch


def cost_breakdown(sys: PowerSystem, first: FirstStageDecision, disp: DispatchSolution) -> CostBreakdown:
    """Objective recomputed from the raw schedule and dispatch (independent of the matrices)."""
    maint = 0.0
    for n, task in enumerate(sys.maintenance):
        for t in np.nonzero(first.q[n] > 0.5)[0]:
            maint += task.initial_cost + task.penalty * abs(int(t) + 1 - task.reported_start)
    commit = 0.0
    disp_cost = 0.0
    for g, unit in enumerate(sys.units):
        u = first.u[g] > 0.5
        starts = u & ~np.concatenate([[False], u[:-1]])
        commit += unit.startup_cost * starts.sum() + unit.no_load_cost * u.sum()
        disp_cost += unit.marginal_cost * float(np.sum(u * (disp.p[g] - unit.p_min)))
    disp_cost += sys.shed_penalty * float(disp.d.sum()) + sys.curtail_penalty * float(disp.dpw.sum())
    return CostBreakdown(maint, float(commit), disp_cost)
