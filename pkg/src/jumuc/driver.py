"""Inexact / exact column-and-constraint generation and the experiment modes."""
from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .duality import dualize, evaluate_recourse, to_scenario
from .formulation import (CostBreakdown, DispatchSolution, FirstStageDecision, MatrixForm,
                          assemble_matrix_form, cost_breakdown)
from .master import add_scenario, has_scenario, init_master, solve_master
from .oa import pick_initial_scenario, solve_worst_case
from .system import PowerSystem, ScenarioRealization, UncertaintySet, build_uncertainty_set

MODES = ("iccg", "ccg", "deterministic-joint", "deterministic-decoupled", "robust-decoupled")
ADD, SHRINK, CONVERGED = "ADD_SCENARIO", "SHRINK_EPS", "CONVERGED"


@dataclass
class SolverConfig:
    mode: str = "iccg"
    delta: float = 0.002  # final relative gap
    delta_tilde: float = 0.0015  # inexact relative gap
    delta_oa: float = 0.001
    eps_mp: float = 0.001  # initial master gap
    alpha_shrink: float = 0.9
    ccg_gap: float = 1e-4
    gamma_d: float | str = 0.0
    gamma_w: float | str = 0.0
    error_frac: float = 0.10
    max_iter: int = 100
    oa_max_iter: int = 100
    time_limit: float = math.inf
    seed: int = 0
    backend: str = "highs"

    def __post_init__(self):
        problems = []
        if self.mode not in MODES:
            problems.append(f"mode must be one of {', '.join(MODES)}")
        if not self.delta > 0:
            problems.append("delta must be > 0")
        if not self.delta_tilde >= 0:
            problems.append("delta_tilde must be >= 0")
        if not self.delta_oa > 0:
            problems.append("delta_oa must be > 0")
        if not 0 <= self.alpha_shrink < 1:
            problems.append("alpha_shrink must lie in [0, 1)")
        if not self.eps_mp >= 0 or not self.ccg_gap >= 0:
            problems.append("master gaps must be >= 0")
        if self.max_iter < 1:
            problems.append("max_iter must be >= 1")
        if problems:
            raise ValueError("; ".join(problems))

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class IterationRecord:
    iter: int
    eps_mp: float
    L_bar: float
    L_in: float
    U_in: float
    U_bar: float
    gap: float
    inexact_gap: float
    action: str
    wall_ms: float
    scenarios: int
    scenario_added: bool
    oa_trace: list = field(default_factory=list)


@dataclass
class IterationState:
    mode: str = "iccg"
    iteration: int = 0
    eps_mp: float = 0.0
    L_bar: float = 0.0
    L_in: float = -math.inf
    U_in: float = math.inf
    U_bar: float = math.inf
    best_U_bar: float = math.inf
    records: list[IterationRecord] = field(default_factory=list)
    converged: bool = False
    status: str = "running"

    @property
    def gap(self) -> float:
        return relative(self.U_bar, self.L_in)

    @property
    def inexact_gap(self) -> float:
        return relative(self.U_bar, self.U_in)


def relative(U_bar: float, other: float) -> float:
    return (U_bar - other) / max(1.0, abs(U_bar))


def decide(gap: float, inexact_gap: float, delta: float, delta_tilde: float, allow_shrink: bool) -> str:
    if gap <= delta:
        return CONVERGED
    if allow_shrink and inexact_gap < delta_tilde:
        return SHRINK
    return ADD


def replay_actions(records: list[IterationRecord], cfg: SolverConfig) -> list[str]:
    """Recompute each branch decision from the logged bounds alone."""
    allow = cfg.mode != "ccg"
    return [decide(relative(r.U_bar, r.L_in), relative(r.U_bar, r.U_in), cfg.delta, cfg.delta_tilde, allow)
            for r in records]


@dataclass
class RobustSolution:
    mode: str
    x: np.ndarray
    first_stage: FirstStageDecision
    worst_case: ScenarioRealization
    dispatch: DispatchSolution
    breakdown: CostBreakdown
    objective: float  # U_bar at termination (or the deterministic optimum)
    state: IterationState
    converged: bool
    wall_s: float = 0.0

    @property
    def total(self) -> float:
        return self.breakdown.total


def _finish(mf: MatrixForm, mode, x, v, objective, state, converged, t0, backend) -> RobustSolution:
    val, disp = evaluate_recourse(mf, x, v, backend, check=False)
    first = FirstStageDecision.from_vector(mf, x)
    return RobustSolution(mode, x, first, to_scenario(mf, v), disp, cost_breakdown(mf.sys, first, disp),
                          objective, state, converged, time.monotonic() - t0)


def _ccg_loop(mf: MatrixForm, cfg: SolverConfig, exact: bool) -> RobustSolution:
    t0 = time.monotonic()
    master = init_master(mf)
    state = IterationState(mode="ccg" if exact else cfg.mode, eps_mp=cfg.ccg_gap if exact else cfg.eps_mp)
    best = None  # (U_bar, x, v)
    seed = pick_initial_scenario(mf.uset)
    while True:
        if state.iteration >= cfg.max_iter or time.monotonic() - t0 > cfg.time_limit:
            state.status = "iteration_limit" if state.iteration >= cfg.max_iter else "time_limit"
            break
        state.iteration += 1
        it0 = time.monotonic()
        remaining = cfg.time_limit - (it0 - t0)
        res = solve_master(master, state.eps_mp, state.L_bar, cfg.backend, time_limit=max(remaining, 1.0))
        state.U_in, state.L_in = res.U_in, res.L_in
        eps_used = state.eps_mp
        L_bar_used = state.L_bar
        state.L_bar = max(state.L_bar, res.L_in)
        bp = dualize(mf, res.x)
        v_hat, U_bar, oa = solve_worst_case(bp, seed, cfg.delta_oa, cfg.oa_max_iter, cfg.backend)
        state.U_bar = U_bar
        if U_bar < state.best_U_bar:
            state.best_U_bar = U_bar
            best = (U_bar, res.x, v_hat)
        action = decide(state.gap, state.inexact_gap, cfg.delta, cfg.delta_tilde, not exact)
        added = False
        if action == ADD or (action == SHRINK and not has_scenario(master, v_hat)):
            if action == ADD and has_scenario(master, v_hat):
                state.status = "stalled"
            else:
                add_scenario(master, v_hat)
                added = True
        if action == SHRINK:
            state.eps_mp *= cfg.alpha_shrink
        state.records.append(IterationRecord(
            state.iteration, eps_used, L_bar_used, state.L_in, state.U_in, U_bar, state.gap, state.inexact_gap,
            action, 1e3 * (time.monotonic() - it0), len(master.scenarios), added, list(oa.trace)))
        if action == CONVERGED:
            state.converged = True
            state.status = "converged"
            return _finish(mf, state.mode, res.x, v_hat, U_bar, state, True, t0, cfg.backend)
        if state.status == "stalled":
            break
    _, x, v = best
    return _finish(mf, state.mode, x, v, state.best_U_bar, state, False, t0, cfg.backend)


def make_matrix_form(sys: PowerSystem, cfg: SolverConfig, robust: bool = True) -> MatrixForm:
    uset = build_uncertainty_set(sys, cfg.error_frac, cfg.gamma_d if robust else 0.0,
                                 cfg.gamma_w if robust else 0.0)
    mf = assemble_matrix_form(sys, uset)
    if cfg.mode in ("deterministic-decoupled", "robust-decoupled"):
        mf = mf.fix_maintenance()
    return mf


def run_iccg(sys: PowerSystem, cfg: SolverConfig) -> RobustSolution:
    return _ccg_loop(make_matrix_form(sys, cfg), cfg, exact=False)


def run_ccg(sys: PowerSystem, cfg: SolverConfig) -> RobustSolution:
    return _ccg_loop(make_matrix_form(sys, cfg), cfg, exact=True)


def run_robust_decoupled(sys: PowerSystem, cfg: SolverConfig) -> RobustSolution:
    return _ccg_loop(make_matrix_form(sys, cfg), cfg, exact=False)


def run_deterministic(sys: PowerSystem, cfg: SolverConfig) -> RobustSolution:
    """Single MILP at the forecast; decoupled mode pins maintenance to the reported starts."""
    t0 = time.monotonic()
    mf = make_matrix_form(sys, cfg, robust=False)
    master = init_master(mf)
    center = mf.uset.mean_vector()
    add_scenario(master, center)
    res = solve_master(master, cfg.ccg_gap, 0.0, cfg.backend, cfg.time_limit)
    state = IterationState(mode=cfg.mode, iteration=1, eps_mp=cfg.ccg_gap, L_bar=res.L_in, L_in=res.L_in,
                           U_in=res.U_in, U_bar=res.U_in, best_U_bar=res.U_in, converged=True, status="converged")
    state.records.append(IterationRecord(1, cfg.ccg_gap, 0.0, res.L_in, res.U_in, res.U_in, state.gap,
                                         state.inexact_gap, CONVERGED, 1e3 * (time.monotonic() - t0), 1, True))
    return _finish(mf, cfg.mode, res.x, center, res.U_in, state, True, t0, cfg.backend)


def run(sys: PowerSystem, cfg: SolverConfig) -> RobustSolution:
    if cfg.mode == "iccg":
        return run_iccg(sys, cfg)
    if cfg.mode == "ccg":
        return run_ccg(sys, cfg)
    if cfg.mode == "robust-decoupled":
        return run_robust_decoupled(sys, cfg)
    return run_deterministic(sys, cfg)
