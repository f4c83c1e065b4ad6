"""Acceptance suite: one PASS/FAIL line per criterion, at the stated tolerances.

Run with ``pytest tests/test_acceptance.py -v``; the summary section lists
every criterion line.  Criterion 10 needs ``JUMUC_EXTERNAL_SOLVER``.
"""
from __future__ import annotations

import os
import time

import numpy as np
import pytest

from conftest import case, matrix_form, random_first_stage, random_scenario, solved
from jumuc.driver import CONVERGED, replay_actions
from jumuc.duality import (brute_force_robust, brute_force_worst_case, dualize, enumerate_first_stage,
                           evaluate_recourse)
from jumuc.formulation import DispatchSolution, FirstStageDecision, cost_breakdown
from jumuc.lp import EXTERNAL_SOLVER_ENV
from jumuc.master import add_scenario, has_scenario, init_master, solve_master
from jumuc.oa import pick_initial_scenario, solve_worst_case

DELTA = 0.002
REL = 1e-6


def rel(a, b):
    return abs(a - b) / max(1.0, abs(b))


@pytest.mark.parametrize("name", ["tiny3", "small5"])
def test_c1_singleton_reduction(name, report):
    t0 = time.monotonic()
    _, robust = solved(name, mode="iccg")
    _, det = solved(name, mode="deterministic-joint")
    wall = time.monotonic() - t0
    err = rel(robust.total, det.total)
    ok = err <= REL and wall < 10
    report(1, ok, f"{name}: iccg(Γ=0) {robust.total:.6f} vs deterministic {det.total:.6f}, rel {err:.1e}, {wall:.1f}s")
    assert ok


def test_c2_strong_duality(report):
    t0 = time.monotonic()
    mf = matrix_form("small5", "0.2N", "0.2N")
    rng = np.random.default_rng(2)
    xs = random_first_stage(mf, rng, 25)
    worst = 0.0
    for i in range(100):
        x = xs[i % len(xs)]
        v = random_scenario(mf.uset, rng)
        primal, _ = evaluate_recourse(mf, x, v)
        dual, lam, mu = dualize(mf, x).solve_fixed_v(v)
        worst = max(worst, rel(dual, primal))
    wall = time.monotonic() - t0
    ok = worst <= REL and wall < 60
    report(2, ok, f"small5: 100 (x, v) pairs, max primal/dual rel gap {worst:.1e}, {wall:.1f}s")
    assert ok


@pytest.mark.slow
@pytest.mark.parametrize("gamma", [1.0, 2.0])
def test_c3_robust_oracle(gamma, report):
    t0 = time.monotonic()
    mf = matrix_form("tiny3", gamma, gamma)
    oracle = brute_force_robust(mf)
    _, i = solved("tiny3", mode="iccg", gamma_d=gamma, gamma_w=gamma)
    _, c = solved("tiny3", mode="ccg", gamma_d=gamma, gamma_w=gamma)
    wall = time.monotonic() - t0
    ei, ec = rel(i.objective, oracle.objective), rel(c.objective, oracle.objective)
    ok = ei <= DELTA and ec <= DELTA and wall < 300
    report(3, ok, f"tiny3 Γ={gamma:g}: oracle {oracle.objective:.4f} ({oracle.candidates} schedules), "
                  f"iccg rel {ei:.1e}, ccg rel {ec:.1e}, {wall:.1f}s")
    assert ok


def test_c4_oa_upper_bound(report):
    t0 = time.monotonic()
    mf = matrix_form("tiny3", 1.0, 1.0)
    xs = list(enumerate_first_stage(mf))
    rng = np.random.default_rng(4)
    picks = rng.choice(len(xs), size=min(20, len(xs)), replace=False)
    v0 = pick_initial_scenario(mf.uset)
    delta_oa = 1e-3
    below, loose = [], []
    for idx in picks:
        x = xs[idx]
        _, U, _ = solve_worst_case(dualize(mf, x), v0, delta_oa)
        _, q = brute_force_worst_case(mf, x)
        worst = float(mf.c @ x) + q
        if U < worst - 1e-6:
            below.append(rel(U, worst))
        elif U - worst > delta_oa * max(1.0, abs(U)):
            loose.append(rel(U, worst))
    wall = time.monotonic() - t0
    ok = not below and not loose and wall < 120
    detail = f"tiny3: {len(picks)} schedules, {len(below)} with U below the true worst case"
    if below:
        detail += f" (max shortfall {max(below):.2%})"
    report(4, ok, detail + f", {len(loose)} looser than δ', {wall:.1f}s")
    assert ok


def _converged_runs():
    runs = [solved(n, mode=m) for n in ("tiny3", "small5") for m in ("iccg", "deterministic-joint")]
    runs += [solved("tiny3", mode=m, gamma_d=g, gamma_w=g) for m in ("iccg", "ccg") for g in (1.0, 2.0)]
    runs += [solved("small5", mode=m, gamma_d="0.2N", gamma_w="0.2N") for m in ("iccg", "ccg", "robust-decoupled")]
    return [(cfg, sol) for cfg, sol in runs if sol.converged]


def test_c5_bound_behaviour(report):
    runs = _converged_runs()
    problems = []
    for cfg, sol in runs:
        recs = sol.state.records
        L = [r.L_in for r in recs]
        if any(b < a - 1e-9 * max(1.0, abs(a)) for a, b in zip(L, L[1:])):
            problems.append(f"{cfg.mode}: L_in decreased")
        last = recs[-1]
        if (last.U_bar - last.L_in) / max(1.0, abs(last.U_bar)) > cfg.delta:
            problems.append(f"{cfg.mode}: final gap above delta")
        if last.action != CONVERGED:
            problems.append(f"{cfg.mode}: last action {last.action}")
        if replay_actions(recs, cfg) != [r.action for r in recs]:
            problems.append(f"{cfg.mode}: replay mismatch")
    ok = not problems and len(runs) > 0
    report(5, ok, f"{len(runs)} converged runs checked" + ("; " + "; ".join(problems) if problems else ""))
    assert ok


def _orderings(name, backend="highs"):
    kw = dict(gamma_d="0.2N", gamma_w="0.2N", backend=backend)
    tot = {m: solved(name, mode=m, **kw)[1].total
           for m in ("iccg", "robust-decoupled", "deterministic-joint", "deterministic-decoupled")}
    checks = [tot["iccg"] <= tot["robust-decoupled"] + 1e-6,
              tot["deterministic-joint"] <= tot["deterministic-decoupled"] + 1e-6,
              tot["iccg"] >= tot["deterministic-joint"] - 1e-6,
              tot["robust-decoupled"] >= tot["deterministic-decoupled"] - 1e-6]
    text = ", ".join(f"{m} {v / 1000:.2f}" for m, v in tot.items())
    return all(checks), text


@pytest.mark.slow
def test_c6_orderings(report):
    t0 = time.monotonic()
    ok, text = _orderings("small5")
    wall = time.monotonic() - t0
    ok = ok and wall < 600
    report(6, ok, f"small5 k$: {text}, {wall:.1f}s")
    assert ok


@pytest.mark.slow
def test_c7_iccg_vs_ccg(report):
    t0 = time.monotonic()
    kw = dict(gamma_d="0.2N", gamma_w="0.2N")
    ref = solved("small5", mode="ccg", **kw)[1].total
    errs = {}
    for eps in (0.008, 0.001):
        for alpha in (0.9, 0.2):
            errs[(eps, alpha)] = rel(solved("small5", mode="iccg", eps_mp=eps, alpha_shrink=alpha, **kw)[1].total, ref)
    wall = time.monotonic() - t0
    ok = max(errs.values()) <= DELTA and wall < 900
    report(7, ok, f"small5: ccg {ref / 1000:.2f} k$, max i-C&CG deviation {max(errs.values()):.2e}, {wall:.1f}s")
    assert ok


def test_c8_budget_monotonicity(report):
    t0 = time.monotonic()
    totals = [solved("tiny3", mode="iccg", gamma_d=g, gamma_w=g)[1].objective for g in (0.0, 1.0, 2.0)]
    wall = time.monotonic() - t0
    ok = all(b >= a - 1e-6 * max(1.0, abs(a)) for a, b in zip(totals, totals[1:])) and wall < 300
    report(8, ok, "tiny3 Γ=0,1,2: " + " <= ".join(f"{t:.2f}" for t in totals) + f", {wall:.1f}s")
    assert ok


def test_c9_linearization_exactness(report):
    mf = matrix_form("tiny3", 2.0, 2.0)
    sys = case("tiny3")
    m = init_master(mf)
    v = mf.uset.mean_vector()
    xr, yc, _ = m.L_pairs
    eta_err, obj_err, incumbents = 0.0, 0.0, 0
    for _ in range(20):
        if has_scenario(m, v):
            break
        add_scenario(m, v)
        res = solve_master(m, 1e-6)
        incumbents += 1
        first = FirstStageDecision.from_vector(mf, res.x)
        best = -np.inf
        for s in range(len(m.scenarios)):
            y, eta = m.y_of(res.z, s), m.eta_of(res.z, s)
            eta_err = max(eta_err, np.abs(eta - res.x[xr] * y[yc]).max(initial=0.0))
            best = max(best, cost_breakdown(sys, first, DispatchSolution.from_vector(mf, y)).total)
        model_obj = float(mf.c @ res.x) + res.alpha
        obj_err = max(obj_err, rel(best, model_obj))
        v, _ = brute_force_worst_case(mf, res.x)  # exact separation keeps new scenarios coming
    ok = eta_err <= 1e-6 and obj_err <= REL and incumbents > 0
    report(9, ok, f"tiny3: {incumbents} incumbents, max |eta - u p| {eta_err:.1e}, objective rel {obj_err:.1e}")
    assert ok


@pytest.mark.skipif(not os.environ.get(EXTERNAL_SOLVER_ENV), reason=f"{EXTERNAL_SOLVER_ENV} not set")
def test_c10_rts79_external(report):
    t0 = time.monotonic()
    ok, text = _orderings("rts79_24", backend="external")
    report(10, ok, f"rts79_24 k$: {text}, {time.monotonic() - t0:.1f}s")
    assert ok
