import csv
import hashlib
import json

import numpy as np
import pytest

from conftest import case, solved
from jumuc.cli import EXIT_ARGS, EXIT_INFEASIBLE, EXIT_NOT_CONVERGED, EXIT_OK, main
from jumuc.report import k, plot_series, read_convergence, verify_document, write_convergence
from jumuc.system import case_to_dict, resolve_case


def test_k_rounding():
    assert k(2_060_041.9) == 2060.04 and k(-1234.5) == -1.23 and k(0) == 0.0


@pytest.fixture(scope="module")
def tiny_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("runs") / "tiny"
    code = main(["solve", "--case", "tiny3", "--gamma-d", "1", "--gamma-w", "1", "--out", str(out), "--verify"])
    return code, out


def test_solve_writes_artifacts(tiny_run):
    code, out = tiny_run
    assert code == EXIT_OK
    for name in ("manifest.json", "solution.json", "convergence.csv", "netload.csv", "capacity.csv"):
        assert (out / name).is_file()
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["case_sha256"] == hashlib.sha256(resolve_case("tiny3").read_bytes()).hexdigest()
    doc = json.loads((out / "solution.json").read_text())
    c = doc["costs_k"]
    assert c["total"] == pytest.approx(c["maintenance"] + c["commitment"] + c["dispatch"], abs=0.011)
    with open(out / "convergence.csv") as fh:
        header = next(csv.reader(fh))
    assert header[:10] == ["iter", "eps_mp", "L_bar", "L_in", "U_in", "U_bar", "gap", "inexact_gap", "action",
                           "wall_ms"]


def test_verify_catches_tampering(tiny_run):
    _, out = tiny_run
    doc = json.loads((out / "solution.json").read_text())
    sys = case("tiny3")
    assert verify_document(sys, doc) == []
    bad = json.loads(json.dumps(doc))
    bad["costs_k"]["dispatch"] += 0.01
    assert any("dispatch" in p for p in verify_document(sys, bad))
    bad = json.loads(json.dumps(doc))
    bad["raw"]["dispatch"]["p"][0][0] += 5.0
    assert verify_document(sys, bad)


def test_convergence_round_trip(tmp_path):
    _, sol = solved("tiny3", mode="iccg", gamma_d=1.0, gamma_w=1.0)
    write_convergence(tmp_path / "c.csv", sol.state.records)
    back = read_convergence(tmp_path / "c.csv")
    for a, b in zip(sol.state.records, back):
        assert (a.iter, a.action, a.U_bar, a.L_in, a.scenario_added) == (b.iter, b.action, b.U_bar, b.L_in,
                                                                         b.scenario_added)


def test_plot_series():
    _, sol = solved("small5", mode="iccg", gamma_d="0.2N", gamma_w="0.2N")
    sys = case("small5")
    net, cap = plot_series(sys, sol)
    assert len(net) == len(cap) == sys.T
    pmax = np.array([u.p_max for u in sys.units])
    for t, row in enumerate(cap):
        assert row["total"] == pytest.approx(float(pmax @ (sol.first_stage.u[:, t] > 0.5)))
        assert net[t]["net_load"] == pytest.approx(net[t]["load"] - net[t]["wind"])


@pytest.mark.parametrize("argv", [["solve"], ["solve", "--case", "tiny3", "--mode", "bogus"],
                                  ["solve", "--case", "tiny3", "--gamma-d", "lots"], ["frobnicate"]])
def test_bad_arguments(argv, capsys):
    with pytest.raises(SystemExit) as info:
        main(argv)
    assert info.value.code == EXIT_ARGS
    assert "usage" in capsys.readouterr().err


def test_bad_values_and_files(tmp_path):
    assert main(["solve", "--case", str(tmp_path / "nope.case")]) == EXIT_ARGS
    assert main(["solve", "--case", "tiny3", "--alpha-shrink", "1.5", "--out", str(tmp_path / "a")]) == EXIT_ARGS
    broken = tmp_path / "broken.case"
    broken.write_text("{ not json")
    assert main(["solve", "--case", str(broken), "--out", str(tmp_path / "b")]) == EXIT_ARGS


def test_infeasible_case(tmp_path):
    doc = case_to_dict(case("tiny3"))
    doc["system"]["reserve_rate"] = 5.0
    path = tmp_path / "tight.case"
    path.write_text(json.dumps(doc))
    out = tmp_path / "run"
    assert main(["solve", "--case", str(path), "--out", str(out)]) == EXIT_INFEASIBLE
    assert "reserve" in (out / "error.txt").read_text()


def test_not_converged_exit(tmp_path):
    out = tmp_path / "cap"
    code = main(["solve", "--case", "small5", "--gamma-d", "0.5N", "--gamma-w", "0.5N", "--max-iter", "1",
                 "--delta", "1e-9", "--eps-mp", "0", "--out", str(out)])
    assert code == EXIT_NOT_CONVERGED
    assert (out / "solution.json").is_file()


def test_compare_runs(tiny_run, tmp_path, capsys):
    _, out = tiny_run
    other = tmp_path / "det"
    assert main(["solve", "--case", "tiny3", "--mode", "deterministic-joint", "--out", str(other)]) == EXIT_OK
    capsys.readouterr()
    assert main(["compare", str(out), str(out), str(other), "--out", str(tmp_path / "cmp")]) == EXIT_OK
    rows = list(csv.reader(open(tmp_path / "cmp" / "comparison.csv")))
    assert rows[0][0] == "row" and len(rows[0]) == 4
    assert all(r[1] == r[2] for r in rows[1:])  # a run compared with itself
    assert "Total Cost (k$)" in capsys.readouterr().out
    assert main(["compare", str(tmp_path / "missing")]) == EXIT_ARGS
    assert main(["compare"]) == EXIT_ARGS


def test_sweep(tmp_path):
    out = tmp_path / "sweep"
    code = main(["compare", "--sweep", "--case", "tiny3", "--gamma-d", "1", "--gamma-w", "1",
                 "--eps-grid", "0.008,0.001", "--alpha-grid", "0.9", "--jobs", "2", "--out", str(out)])
    assert code == EXIT_OK
    rows = list(csv.reader(open(out / "sweep.csv")))
    assert len(rows[0]) == 4 and rows[1][0] == "Total Cost (k$)"
    assert len(set(rows[1][1:])) == 1
    assert main(["compare", "--sweep"]) == EXIT_ARGS
