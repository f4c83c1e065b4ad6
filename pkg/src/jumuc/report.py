"""Solution documents, convergence logs, plot series and their re-verification."""
from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .driver import IterationRecord, RobustSolution, SolverConfig
from .formulation import (DispatchSolution, FirstStageDecision, assemble_matrix_form, build_commitment_block,
                          build_maintenance_block, cost_breakdown, first_stage_index)
from .system import PowerSystem, ScenarioRealization, build_uncertainty_set, check_membership

CONVERGENCE_FIELDS = ["iter", "eps_mp", "L_bar", "L_in", "U_in", "U_bar", "gap", "inexact_gap", "action", "wall_ms",
                      "scenarios", "scenario_added"]


def k(usd: float) -> float:
    return round(usd / 1000.0, 2)


def schedule_strings(sys: PowerSystem, first: FirstStageDecision) -> dict[str, str]:
    return {task.unit: f"{a}-{b}" for task, (a, b) in zip(sys.maintenance, first.maintenance_intervals())}


def solution_document(sys: PowerSystem, sol: RobustSolution, cfg: SolverConfig) -> dict:
    bd = sol.breakdown
    first, disp = sol.first_stage, sol.dispatch
    return {
        "case": sys.name,
        "mode": sol.mode,
        "converged": sol.converged,
        "status": sol.state.status,
        "iterations": sol.state.iteration,
        "scenarios": sol.state.records[-1].scenarios if sol.state.records else 0,
        "wall_s": round(sol.wall_s, 3),
        "costs_k": {"maintenance": k(bd.maintenance), "commitment": k(bd.commitment),
                    "dispatch": k(bd.dispatch), "total": k(bd.total)},
        "objective_k": k(sol.objective),
        "maintenance_schedule": schedule_strings(sys, first),
        "raw": {
            "costs_usd": {"maintenance": bd.maintenance, "commitment": bd.commitment,
                          "dispatch": bd.dispatch, "total": bd.total},
            "objective_usd": sol.objective,
            "first_stage": {kind: np.asarray(getattr(first, kind)).tolist() for kind in ("q", "m", "u", "tau")},
            "dispatch": {kind: np.asarray(getattr(disp, kind)).tolist() for kind in ("p", "f", "delta", "d", "dpw")},
            "worst_case": {"load": sol.worst_case.load.tolist(), "wind": sol.worst_case.wind.tolist()},
        },
        "config": cfg.to_dict(),
    }


def write_convergence(path: Path, records: list[IterationRecord]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CONVERGENCE_FIELDS)
        for r in records:
            w.writerow([r.iter, repr(r.eps_mp), repr(r.L_bar), repr(r.L_in), repr(r.U_in), repr(r.U_bar),
                        repr(r.gap), repr(r.inexact_gap), r.action, f"{r.wall_ms:.3f}", r.scenarios,
                        int(r.scenario_added)])


def read_convergence(path: Path) -> list[IterationRecord]:
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            out.append(IterationRecord(int(row["iter"]), float(row["eps_mp"]), float(row["L_bar"]),
                                       float(row["L_in"]), float(row["U_in"]), float(row["U_bar"]),
                                       float(row["gap"]), float(row["inexact_gap"]), row["action"],
                                       float(row["wall_ms"]), int(row["scenarios"]), bool(int(row["scenario_added"]))))
    return out


def plot_series(sys: PowerSystem, sol: RobustSolution) -> tuple[list[dict], list[dict]]:
    """Net-load series and the per-period available capacity split (base / start-stop / maintained units)."""
    load_f, wind_f = sys.load_forecast.sum(axis=0), sys.wind_forecast.sum(axis=0)
    load_w, wind_w = sol.worst_case.load.sum(axis=0), sol.worst_case.wind.sum(axis=0)
    net = [{"t": t + 1, "load": float(load_f[t]), "wind": float(wind_f[t]), "net_load": float(load_f[t] - wind_f[t]),
            "worst_load": float(load_w[t]), "worst_wind": float(wind_w[t]),
            "worst_net_load": float(load_w[t] - wind_w[t])} for t in range(sys.T)]
    u = sol.first_stage.u > 0.5
    maintained = {sys.unit_index(task.unit) for task in sys.maintenance}
    pmax = np.array([unit.p_max for unit in sys.units])
    always_on = u.all(axis=1)
    cap = []
    for t in range(sys.T):
        m_cap = sum(pmax[g] for g in maintained if u[g, t])
        base = sum(pmax[g] for g in range(len(sys.units)) if g not in maintained and always_on[g])
        ss = sum(pmax[g] for g in range(len(sys.units)) if g not in maintained and not always_on[g] and u[g, t])
        cap.append({"t": t + 1, "base_units": float(base), "start_stop_units": float(ss),
                    "maintained_units": float(m_cap), "total": float(base + ss + m_cap)})
    return net, cap


def _write_rows(path: Path, rows: list[dict]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]))
        w.writeheader()
        w.writerows(rows)


def write_artifacts(out: Path, sys: PowerSystem, sol: RobustSolution, cfg: SolverConfig) -> dict:
    out.mkdir(parents=True, exist_ok=True)
    doc = solution_document(sys, sol, cfg)
    (out / "solution.json").write_text(json.dumps(doc, indent=1) + "\n")
    write_convergence(out / "convergence.csv", sol.state.records)
    net, cap = plot_series(sys, sol)
    _write_rows(out / "netload.csv", net)
    _write_rows(out / "capacity.csv", cap)
    return doc


def verify_document(sys: PowerSystem, doc: dict, rel_tol: float = 1e-6) -> list[str]:
    """Re-derive every reported number from the raw schedule, dispatch and case; list mismatches."""
    problems = []
    raw = doc["raw"]
    T = sys.T
    first = FirstStageDecision(*(np.asarray(raw["first_stage"][kd], float).reshape(-1, T) if raw["first_stage"][kd]
                                 else np.zeros((0, T)) for kd in ("q", "m", "u", "tau")))
    disp = DispatchSolution(*(np.asarray(raw["dispatch"][kd], float).reshape(-1, T) if raw["dispatch"][kd]
                              else np.zeros((0, T)) for kd in ("p", "f", "delta", "d", "dpw")))
    bd = cost_breakdown(sys, first, disp)
    for name in ("maintenance", "commitment", "dispatch", "total"):
        want = getattr(bd, name)
        got = raw["costs_usd"][name]
        if abs(want - got) > rel_tol * max(1.0, abs(want)):
            problems.append(f"{name} cost {got} != recomputed {want}")
        if doc["costs_k"][name] != k(want):
            problems.append(f"{name} k$ {doc['costs_k'][name]} != {k(want)}")
    parts = raw["costs_usd"]
    if abs(parts["maintenance"] + parts["commitment"] + parts["dispatch"] - parts["total"]) > rel_tol * max(1.0, abs(parts["total"])):
        problems.append("breakdown does not sum to total")
    if schedule_strings(sys, first) != doc["maintenance_schedule"]:
        problems.append("maintenance schedule strings do not match the raw schedule")
    # first-stage rows and dispatch rows at the reported worst case
    cfg = doc.get("config", {})
    uset = build_uncertainty_set(sys, cfg.get("error_frac", 0.1), cfg.get("gamma_d", 0), cfg.get("gamma_w", 0))
    xmap = first_stage_index(sys)
    x = np.zeros(len(xmap))
    for kd in ("q", "m", "u", "tau"):
        x[xmap.slice(kd)] = getattr(first, kd).ravel()
    blk = build_maintenance_block(sys).extend(build_commitment_block(sys, uset))
    bad = blk.violated(x=x, tol=1e-6)
    if bad:
        problems.append("first-stage rows violated: " + ", ".join(sorted({r.tag for r in bad})))
    v = ScenarioRealization(np.asarray(raw["worst_case"]["load"], float).reshape(-1, T),
                            np.asarray(raw["worst_case"]["wind"], float).reshape(-1, T))
    if not check_membership(uset, v):
        problems.append("reported worst case is outside the uncertainty set")
    mf = assemble_matrix_form(sys, uset)
    y = disp.to_vector(mf)
    tol = 1e-6
    if (mf.ineq_residual(x, y, v.to_vector()) < -tol * 10).any() or (np.abs(mf.eq_residual(y, v.to_vector())) > tol * 10).any():
        problems.append("dispatch violates the recourse rows at the reported worst case")
    return problems
