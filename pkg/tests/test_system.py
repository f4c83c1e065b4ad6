import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from jumuc.system import (CaseParseError, CaseValidationError, ScenarioRealization, build_uncertainty_set,
                          case_to_dict, check_membership, load_case, parse_case, resolve_case, save_case)


def tiny_doc():
    return json.loads(resolve_case("tiny3").read_text())


def test_bundled_cases_load():
    for name in ("tiny3", "small5", "rts79_24", "rts79"):
        sys = load_case(name)
        assert sys.load_forecast.shape == (len(sys.loads), sys.T)
    assert load_case("rts79").T == 168 and len(load_case("rts79").units) == 32


def test_round_trip(tmp_path):
    sys = load_case("small5")
    save_case(sys, tmp_path / "copy.case")
    again = load_case(tmp_path / "copy.case")
    assert case_to_dict(again) == case_to_dict(sys)


def test_parse_error_has_location():
    with pytest.raises(CaseParseError, match=r"2:"):
        parse_case('{\n "meta": ,}', "broken.case")


def test_missing_field_named():
    doc = tiny_doc()
    del doc["units"][0]["p_max"]
    with pytest.raises(CaseParseError, match="p_max"):
        parse_case(json.dumps(doc))


@pytest.mark.parametrize("mutate, needle", [
    (lambda d: d["units"][0].update(p_min=500), "p_min"),
    (lambda d: d["lines"][0].update({"from": 9}), "bus"),
    (lambda d: d["loads"][0].update(forecast=[1, 2]), "forecast"),
    (lambda d: d["maintenance"][0].update(duration=9), "duration"),
])
def test_validation_collects_problems(mutate, needle):
    doc = tiny_doc()
    mutate(doc)
    with pytest.raises(CaseValidationError) as info:
        parse_case(json.dumps(doc))
    assert any(needle in p for p in info.value.problems)


def test_missing_case_file():
    with pytest.raises(FileNotFoundError):
        resolve_case("no-such-case")


def test_relative_budget():
    sys = load_case("small5")
    u = build_uncertainty_set(sys, 0.1, "0.5N", "0.2N")
    assert u.gamma_load == pytest.approx(0.5 * len(sys.loads))
    assert u.gamma_wind == pytest.approx(0.2 * len(sys.wind_farms))
    assert build_uncertainty_set(sys, 0.1, 99, 0).gamma_load == len(sys.loads)


def test_singleton_and_center():
    sys = load_case("tiny3")
    u = build_uncertainty_set(sys, 0.1)
    assert u.is_singleton
    assert check_membership(u, u.center())
    np.testing.assert_allclose(u.dev_vector()[: u.load_mean.size], 0.1 * sys.load_forecast.ravel())


def test_membership_reports_box_and_budget():
    sys = load_case("tiny3")
    u = build_uncertainty_set(sys, 0.1, 1, 1)
    load = u.load_mean + u.load_dev  # both loads at +dev: budget 2 > 1
    rep = check_membership(u, ScenarioRealization(load, u.wind_mean.copy()))
    assert not rep and any(p.startswith("budget") for p in rep.violations)
    far = u.load_mean.copy()
    far[0, 0] += 2 * u.load_dev[0, 0]
    rep = check_membership(u, ScenarioRealization(far, u.wind_mean.copy()))
    assert any(p.startswith("box") for p in rep.violations)
    with pytest.raises(ValueError):
        check_membership(u, ScenarioRealization(far[:1], u.wind_mean))


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(-1, 1), min_size=6, max_size=6), st.lists(st.floats(-1, 1), min_size=3, max_size=3),
       st.floats(0, 2))
def test_membership_matches_definition(zl, zw, gamma):
    sys = load_case("tiny3")
    u = build_uncertainty_set(sys, 0.2, gamma, gamma)
    zl, zw = np.reshape(zl, (2, 3)), np.reshape(zw, (1, 3))
    v = ScenarioRealization(u.load_mean + u.load_dev * zl, u.wind_mean + u.wind_dev * zw)
    inside = bool((np.abs(zl).sum(0) <= u.gamma_load + 1e-9).all() and (np.abs(zw).sum(0) <= u.gamma_wind + 1e-9).all())
    assert bool(check_membership(u, v)) == inside


def test_scenario_vector_layout():
    v = ScenarioRealization(np.arange(6.0).reshape(2, 3), np.array([[7.0, 8.0, 9.0]]))
    vec = v.to_vector()
    np.testing.assert_array_equal(vec, [0, 1, 2, 3, 4, 5, 7, 8, 9])
    back = ScenarioRealization.from_vector(vec, 2, 1, 3)
    np.testing.assert_array_equal(back.wind, v.wind)
