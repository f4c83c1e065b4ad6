import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import matrix_form, random_scenario
from jumuc.duality import brute_force_worst_case, dualize, enumerate_first_stage, evaluate_recourse
from jumuc.oa import _master_model, make_cut, pick_initial_scenario, solve_worst_case
from jumuc.system import check_membership, ScenarioRealization


@pytest.fixture(scope="module")
def setup():
    mf = matrix_form("tiny3", 1.0, 1.0)
    xs = list(enumerate_first_stage(mf))
    return mf, xs


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6))
def test_cut_is_exact_on_both_slices(seed):
    mf = matrix_form("tiny3", 1.0, 1.0)
    rng = np.random.default_rng(seed)
    x = next(enumerate_first_stage(mf))
    bp = dualize(mf, x)
    vj, v = random_scenario(mf.uset, rng), random_scenario(mf.uset, rng)
    _, lj, mj = bp.solve_fixed_v(vj)
    _, l2, m2 = bp.solve_fixed_v(v)
    cut = make_cut(bp, 1, vj, lj, mj)
    assert cut.evaluate(vj, l2, m2) == pytest.approx(bp.bilinear(vj, l2, m2), rel=1e-9, abs=1e-6)
    assert cut.evaluate(v, lj, mj) == pytest.approx(bp.bilinear(v, lj, mj), rel=1e-9, abs=1e-6)


def test_master_row_encodes_cut(setup):
    mf, xs = setup
    rng = np.random.default_rng(5)
    bp = dualize(mf, xs[3])
    vj = random_scenario(mf.uset, rng)
    _, lam, mu = bp.solve_fixed_v(vj)
    cut = make_cut(bp, 1, vj, lam, mu)
    model, sl_p, sl_m = _master_model(bp, [cut])
    # a point of the master: some xi, the same duals, beta on the cut
    xi = (random_scenario(mf.uset, rng) - mf.uset.mean_vector()) / np.where(mf.uset.dev_vector() > 0,
                                                                            mf.uset.dev_vector(), 1.0)
    v = mf.uset.mean_vector() + mf.uset.dev_vector() * xi
    beta = -cut.evaluate(v, lam, mu)
    z = np.concatenate([np.maximum(xi, 0), np.maximum(-xi, 0), lam, mu, [beta]])
    lhs = model.A[-1] @ z
    assert lhs[0] == pytest.approx(model.rhs[-1], rel=1e-9, abs=1e-6)
    # its objective equals the dual value at v plus c'x
    assert model.objective_value(z) == pytest.approx(bp.value(v, lam, mu) + bp.first_stage_cost, rel=1e-9)


def test_singleton_set_is_exact():
    mf = matrix_form("tiny3")
    x = next(enumerate_first_stage(mf))
    v, U, state = solve_worst_case(dualize(mf, x), mf.uset.mean_vector())
    q = evaluate_recourse(mf, x, mf.uset.mean_vector())[0]
    assert U == pytest.approx(float(mf.c @ x) + q, rel=1e-9)
    assert state.converged and state.j == 1


def test_bounds_are_attained_and_monotone(setup):
    mf, xs = setup
    for x in xs[::5]:
        bp = dualize(mf, x)
        v, U, st_ = solve_worst_case(bp, pick_initial_scenario(mf.uset), 1e-3)
        L = [t[1] for t in st_.trace]
        Us = [t[2] for t in st_.trace]
        assert all(b >= a for a, b in zip(L, L[1:])) and all(b <= a for a, b in zip(Us, Us[1:]))
        assert U >= st_.L_OA
        # the lower bound is a real scenario's value
        assert float(mf.c @ x) + evaluate_recourse(mf, x, v)[0] == pytest.approx(st_.L_OA, rel=1e-9)
        assert check_membership(mf.uset, ScenarioRealization.from_vector(v, mf.uset.n_load, mf.uset.n_wind, mf.uset.T))
        if st_.converged:
            assert st_.U_OA - st_.L_OA < 1e-3 * max(1.0, abs(st_.U_OA))


def test_best_value_never_exceeds_true_worst(setup):
    mf, xs = setup
    for x in xs[::4]:
        _, _, state = solve_worst_case(dualize(mf, x), pick_initial_scenario(mf.uset))
        _, q = brute_force_worst_case(mf, x)
        assert state.L_OA <= float(mf.c @ x) + q + 1e-6


def test_initial_scenario_uses_budget():
    mf = matrix_form("small5", 1.5, 0.5)
    u = mf.uset
    sc = pick_initial_scenario(u)
    assert check_membership(u, sc)
    used = (np.abs(sc.load - u.load_mean) / u.load_dev).sum(axis=0)
    np.testing.assert_allclose(used, 1.5)
    assert (sc.wind <= u.wind_mean + 1e-12).all()


def test_rejects_bad_delta(setup):
    mf, xs = setup
    with pytest.raises(ValueError):
        solve_worst_case(dualize(mf, xs[0]), mf.uset.mean_vector(), delta=0.0)
