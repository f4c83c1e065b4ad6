from __future__ import annotations

import functools

import numpy as np
import pytest

from jumuc.driver import SolverConfig, run
from jumuc.formulation import assemble_matrix_form
from jumuc.system import build_uncertainty_set, load_case

_LINES_KEY = pytest.StashKey[list]()


@functools.lru_cache(maxsize=None)
def case(name: str):
    return load_case(name)


@functools.lru_cache(maxsize=None)
def matrix_form(name: str, gamma_d=0.0, gamma_w=0.0, error_frac=0.10):
    sys = case(name)
    return assemble_matrix_form(sys, build_uncertainty_set(sys, error_frac, gamma_d, gamma_w))


@functools.lru_cache(maxsize=None)
def solved(name: str, **kw):
    """Memoised driver run; keyword values must be hashable."""
    cfg = SolverConfig(**kw)
    return cfg, run(case(name), cfg)


def random_first_stage(mf, rng: np.random.Generator, count: int):
    """Feasible schedules from MILPs over A x >= e with random costs on the binaries."""
    from jumuc.lp import LpModel, solve_mip

    out = []
    for _ in range(count):
        c = rng.normal(size=mf.nx)
        model = LpModel(mf.A, [">="] * mf.A.shape[0], mf.e, c, mf.x_lb, mf.x_ub,
                        integrality=np.ones(mf.nx, bool))
        sol = solve_mip(model, 0.0)
        assert sol.has_incumbent
        out.append(np.round(sol.x))
    return out


def random_scenario(uset, rng: np.random.Generator) -> np.ndarray:
    """A point of the budget set: random signs and magnitudes scaled into each period's budget."""
    T = uset.T
    vec = []
    for kind, n, gamma in (("load", uset.n_load, uset.gamma_load), ("wind", uset.n_wind, uset.gamma_wind)):
        z = rng.uniform(-1, 1, size=(n, T))
        for t in range(T):
            s = np.abs(z[:, t]).sum()
            if s > gamma:
                z[:, t] *= gamma / s if s > 0 else 0.0
        vec.append(z)
    z = np.concatenate([vec[0].ravel(), vec[1].ravel()])
    return uset.mean_vector() + uset.dev_vector() * z


@pytest.fixture
def report(request):
    """Record one acceptance line: report(criterion, ok, detail)."""
    lines = request.config.stash.setdefault(_LINES_KEY, [])

    def _add(criterion: int, ok: bool, detail: str):
        lines.append(f"criterion {criterion:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
        print(lines[-1])
    return _add


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_LINES_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split(":")[0].split()[-1])):
            terminalreporter.write_line(line)
