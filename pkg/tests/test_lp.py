import itertools
import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import example, given, settings, strategies as st
from scipy import sparse

from jumuc.lp import (EXTERNAL_SOLVER_ENV, LpModel, certify, mps_text, parse_mps, read_solution, relative_gap,
                      solve_lp, solve_mip, write_mps, write_solution)
from jumuc.lp.mps import MpsError, column_names, format_number

FAKE = f"{sys.executable} {Path(__file__).with_name('fake_solver.py')}"


def random_lp(seed, m=6, n=8, integer=False, maximize=False):
    """Bounded and feasible by construction: box bounds and rows slack around a known point."""
    rng = np.random.default_rng(seed)
    A = np.round(rng.uniform(-5, 5, (m, n)) * (rng.random((m, n)) < 0.6), 2)
    x0 = rng.integers(0, 4, n).astype(float)
    senses = list(rng.choice([">=", "<=", "="], m, p=[0.45, 0.45, 0.1]))
    ax = A @ x0
    rhs = np.array([ax[i] - rng.integers(0, 5) if s == ">=" else ax[i] + rng.integers(0, 5) if s == "<=" else ax[i]
                    for i, s in enumerate(senses)])
    c = np.round(rng.uniform(-10, 10, n), 2)
    lb = np.where(rng.random(n) < 0.2, -2.0, 0.0)
    ub = np.full(n, 5.0)
    return LpModel(sparse.csr_matrix(A), senses, rhs, c, lb, ub, maximize=maximize,
                   offset=float(rng.integers(-3, 3)), integrality=np.ones(n, bool) if integer else None)


def test_textbook_lp():
    # max 3x + 5y, x <= 4, 2y <= 12, 3x + 2y <= 18 -> 36 at (2, 6)
    model = LpModel(sparse.csr_matrix([[1, 0], [0, 2], [3, 2]]), ["<="] * 3, [4, 12, 18], [3, 5],
                    [0, 0], [np.inf, np.inf], maximize=True)
    for backend in ("simplex", "highs"):
        sol = solve_lp(model, backend)
        assert sol.optimal and sol.objective == pytest.approx(36)
        np.testing.assert_allclose(sol.x, [2, 6], atol=1e-9)
        # duals as d(obj)/d(rhs): shadow prices 0, 1.5, 1
        np.testing.assert_allclose(sol.duals, [0, 1.5, 1], atol=1e-9)


def test_infeasible_and_unbounded():
    infeas = LpModel(sparse.csr_matrix([[1.0], [1.0]]), [">=", "<="], [2, 1], [1.0], [0], [np.inf])
    unb = LpModel(sparse.csr_matrix([[1.0, -1.0]]), [">="], [0], [-1.0, 0.0], [0, 0], [np.inf, np.inf])
    for backend in ("simplex", "highs"):
        assert solve_lp(infeas, backend).status == "infeasible"
        assert solve_lp(unb, backend).status == "unbounded"


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 10**6), st.booleans())
def test_simplex_matches_highs(seed, maximize):
    model = random_lp(seed, maximize=maximize)
    a, b = solve_lp(model, "simplex"), solve_lp(model, "highs")
    assert a.status == b.status == "optimal"
    assert relative_gap(a.objective, b.objective) <= 1e-7
    for sol in (a, b):
        cert = certify(model, sol)
        assert cert.ok(), cert


def brute_force_ip(model):
    best = None
    n = model.shape[1]
    for pt in itertools.product(*[range(int(model.lb[j]), int(model.ub[j]) + 1) for j in range(n)]):
        x = np.array(pt, float)
        ax = model.A @ x
        ok = all((s == ">=" and v >= r - 1e-9) or (s == "<=" and v <= r + 1e-9) or (s == "=" and abs(v - r) < 1e-9)
                 for s, v, r in zip(model.senses, ax, model.rhs))
        if ok:
            val = model.objective_value(x)
            if best is None or (val > best if model.maximize else val < best):
                best = val
    return best


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6), st.booleans())
@example(618, True)  # HiGHS presolve returned 18.22 against a true optimum of 29.26
def test_mip_backends_match_enumeration(seed, maximize):
    model = random_lp(seed, m=4, n=4, integer=True, maximize=maximize)
    truth = brute_force_ip(model)
    for backend in ("bnb", "highs"):
        sol = solve_mip(model, 0.0, backend=backend)
        assert sol.has_incumbent
        assert sol.objective == pytest.approx(truth, abs=1e-6)


def test_bnb_respects_gap_and_logs():
    model = random_lp(7, m=5, n=6, integer=True)
    sol = solve_mip(model, 0.05, backend="bnb")
    assert sol.gap <= 0.05 + 1e-12 and sol.log
    assert sol.bound <= sol.objective + 1e-9
    with pytest.raises(ValueError):
        solve_mip(model, -1.0)


def test_format_number_width():
    for v in (0.0, 1.0, -2.5, 1e-12, 123456789.123, -9.87654321e-7, 1 / 3, 1e20):
        s = format_number(v)
        assert len(s) <= 12
        assert float(s) == pytest.approx(v, rel=1e-6, abs=1e-30)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.booleans(), st.booleans())
def test_mps_round_trip(seed, integer, maximize):
    model = random_lp(seed, integer=integer, maximize=maximize)
    back = parse_mps(mps_text(model))
    assert back.maximize == model.maximize
    assert back.offset == pytest.approx(model.offset)
    np.testing.assert_allclose(back.A.toarray(), model.A.toarray())
    np.testing.assert_allclose(back.rhs, model.rhs)
    np.testing.assert_allclose(back.c, model.c)
    np.testing.assert_array_equal(back.lb, model.lb)
    np.testing.assert_array_equal(back.ub, model.ub)
    assert back.senses == model.senses
    if integer:
        assert back.integrality.all()
    a, b = solve_mip(model, 0.0), solve_mip(back, 0.0)
    assert a.objective == pytest.approx(b.objective, abs=1e-7)


def test_mps_fixed_columns(tmp_path):
    model = random_lp(3, integer=True)
    names = write_mps(model, tmp_path / "m.mps")
    text = (tmp_path / "m.mps").read_text().splitlines()
    assert text[0].startswith("NAME") and text[-1] == "ENDATA"
    assert "MARKER" in "\n".join(text) and names == column_names(model)
    body = [ln for ln in text if ln.startswith(" ") and "MARKER" not in ln]
    assert all(len(ln) <= 61 for ln in body)


def test_mps_rejects_garbage():
    with pytest.raises(MpsError):
        parse_mps("NAME X\nROWS\n Q  R1\nENDATA\n")


def test_solution_file_round_trip(tmp_path):
    write_solution(tmp_path / "s.txt", ["A", "B", "C"], [1.5, -2.0, 0.0])
    np.testing.assert_array_equal(read_solution(tmp_path / "s.txt", ["C", "A", "B", "D"]), [0.0, 1.5, -2.0, 0.0])


def test_external_backend(monkeypatch):
    model = random_lp(11, m=4, n=5, integer=True)
    monkeypatch.setenv(EXTERNAL_SOLVER_ENV, FAKE)
    ext = solve_mip(model, 0.0, backend="external")
    assert ext.status == "optimal"
    assert ext.objective == pytest.approx(solve_mip(model, 0.0).objective, abs=1e-7)
    infeas = LpModel(sparse.csr_matrix([[1.0], [1.0]]), [">=", "<="], [2, 1], [1.0], [0], [5],
                     integrality=[True])
    assert solve_mip(infeas, 0.0, backend="external").status == "infeasible"


def test_external_backend_needs_env(monkeypatch):
    monkeypatch.delenv(EXTERNAL_SOLVER_ENV, raising=False)
    with pytest.raises(RuntimeError, match=EXTERNAL_SOLVER_ENV):
        solve_mip(random_lp(1, integer=True), 0.0, backend="external")


@pytest.mark.parametrize("seed", [2, 9, 21])
def test_bnb_log_is_monotone(seed):
    sol = solve_mip(random_lp(seed, m=6, n=8, integer=True), 0.0, backend="bnb")
    rows = [[float(t) for t in line.split(",")] for line in sol.log]
    bounds = [r[2] for r in rows if np.isfinite(r[2])]
    incs = [r[1] for r in rows if np.isfinite(r[1])]
    assert all(b >= a - 1e-9 for a, b in zip(bounds, bounds[1:]))
    assert all(b <= a + 1e-9 for a, b in zip(incs, incs[1:]))
    again = solve_mip(random_lp(seed, m=6, n=8, integer=True), 0.0, backend="bnb")
    assert again.log == sol.log  # deterministic


def test_mip_backend_names_route_lps():
    model = random_lp(4)
    ref = solve_lp(model, "highs").objective
    assert solve_lp(model, "bnb").objective == pytest.approx(ref, rel=1e-9)
    assert solve_lp(model, "external").objective == pytest.approx(ref, rel=1e-9)
    with pytest.raises(ValueError):
        solve_lp(model, "cplex")
