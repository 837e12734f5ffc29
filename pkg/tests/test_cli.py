import io
import json
import math

import pytest
from hypothesis import given, settings, strategies as st

from collapse_spectra import scenarios
from collapse_spectra.cli import main
from collapse_spectra.scenarios import ResultRow


def run(argv):
    out = io.StringIO()
    code = main(argv, out)
    return code, out.getvalue()


# serialization ------------------------------------------------------------------

def test_one_row_csv():
    text = scenarios.emit([ResultRow("s", 1.0, 0, 1, 0.5, "flat-spectra")], "csv")
    assert text.splitlines() == ["scenario,t,p,j,lambda,source", "s,1,0,1,0.5,flat-spectra"]


def test_json_round_trip():
    rows, _ = scenarios.evaluate(scenarios.get_scenario("example4-scan"))
    back = scenarios.read_rows(scenarios.emit(rows, "json"), "json")
    assert back == rows
    assert set(json.loads(scenarios.emit(rows, "json"))[0]) == set(scenarios.FIELDS)


@settings(max_examples=200, deadline=None)
@given(st.floats(0, 1e12, allow_nan=False, allow_infinity=False), st.one_of(st.none(), st.floats(1e-6, 10)))
def test_csv_reparses_exactly(lam, t):
    row = ResultRow("x", t, 2, 3, lam, "superconn")
    assert scenarios.read_rows(scenarios.emit([row], "csv"), "csv") == [row]


def test_csv_is_deterministic():
    s = scenarios.get_scenario("maptorus-compare")
    a = scenarios.emit(scenarios.run_scenario(s), "csv")
    b = scenarios.emit(scenarios.run_scenario(s), "csv")
    assert a == b


def test_rows_sorted():
    rows = scenarios.run_scenario(scenarios.get_scenario("cor8-functions"))
    keys = [(r.scenario, r.t, r.p, r.j) for r in rows]
    assert keys == sorted(keys)


def test_empty_grid_gives_no_rows():
    s = scenarios.get_scenario("example4-scan").with_grid(t=())
    rows, claim = scenarios.evaluate(s)
    assert rows == [] and claim.passed


def test_scenario_validation():
    with pytest.raises(scenarios.ScenarioError):
        scenarios.get_scenario("missing")
    with pytest.raises(scenarios.ScenarioError):
        scenarios.Scenario("x", "example4", t=(0.0,))
    with pytest.raises(scenarios.ScenarioError):
        scenarios.Scenario("x", "gysin", models=("no-such-complex",))
    with pytest.raises(scenarios.ScenarioError):
        ResultRow("x", None, 0, 0, 1.0, "s")


def test_scenario_rows_agree_on_scaling():
    rows = scenarios.run_scenario(scenarios.get_scenario("example4-scan"))
    scaled = [r.lam * r.t ** 2 for r in rows]
    assert max(scaled) - min(scaled) <= 1e-9 * min(scaled)


def test_e2_rows():
    rows = scenarios.run_scenario(scenarios.get_scenario("ex5-e2"))
    e2 = [(r.p, r.j - 1, r.lam) for r in rows if r.source == "sheaf-ss" and r.scenario.startswith("ex5-e2")]
    assert (0, 0, 1.0) in e2 and (1, 2, 1.0) in e2


# command line ---------------------------------------------------------------------

def test_list():
    code, text = run(["list"])
    assert code == 0
    for name, s in scenarios.SCENARIOS.items():
        assert name in text and s.anchor in text
    assert run(["--list"])[1] == text


def test_scan_passes(capsys):
    code, text = run(["scan", "--scenario", "example4-scan"])
    assert code == 0
    assert text.startswith("scenario,t,p,j,lambda,source\n")
    assert len(text.splitlines()) == 4
    assert "[PASS]" in capsys.readouterr().err


def test_scan_json_to_file(tmp_path):
    path = tmp_path / "rows.json"
    code, text = run(["scan", "--scenario", "z2-interval", "--format", "json", "--out", str(path)])
    assert code == 0 and text == ""
    rows = scenarios.read_rows(path.read_text(), "json")
    assert rows


def test_claim_failure_exit_code(tmp_path, capsys):
    # no degree-2 rows, so the scaling claim has nothing to check
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"name": "forced", "kind": "example4", "t": [1.0], "p": [1]}))
    code, _ = run(["scan", "--file", str(path)])
    assert code == 2
    assert "[FAIL]" in capsys.readouterr().err


def test_usage_errors(tmp_path, capsys):
    assert run(["scan", "--scenario", "missing"])[0] == 1
    assert run(["spectrum"])[0] == 1
    assert run([])[0] == 1
    with pytest.raises(SystemExit) as exc:
        main(["scan", "--k", "many"])
    assert exc.value.code == 1
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"name": "x", "kind": "nope"}))
    assert run(["scan", "--file", str(bad)])[0] == 1
    assert run(["scan", "--file", str(tmp_path / "absent.json")])[0] == 1


def test_spectrum_of_a_model():
    code, text = run(["spectrum", "--model", "s1xg6", "--t", "0.5", "--p", "2", "--k", "1"])
    assert code == 0
    (row,) = scenarios.read_rows(text)
    assert row.t == 0.5 and row.p == 2
    assert row.lam * 0.25 == pytest.approx(4 * math.pi ** 2, rel=1e-9)


def test_ss_of_a_model():
    code, text = run(["ss", "--model", "interval-constant"])
    assert code == 0
    rows = scenarios.read_rows(text)
    assert [(r.p, r.j, r.lam) for r in rows] == [(0, 1, 1.0)]


def test_gysin_default_and_file(tmp_path):
    assert run(["gysin"])[0] == 0
    path = tmp_path / "s2.json"
    path.write_text(json.dumps({"facets": [[0, 1, 2], [0, 1, 3], [0, 2, 3], [1, 2, 3]], "chi": [[0, 1, 2, 1]]}))
    code, text = run(["gysin", "--file", str(path), "--p", "1,2"])
    assert code == 0
    assert [r.lam for r in scenarios.read_rows(text)] == [1.0, 0.0]


def test_bounds_command(tmp_path):
    path = tmp_path / "inputs.json"
    path.write_text(json.dumps({
        "gap": {"A": 1, "C": 1, "diam": 0.1, "norm_tfm": 5, "provenance": "worked example"},
        "perturbation": {"lam1": [0, 1], "lam2": [0, 4], "opnorm": 0.2},
        "tcor2": {"b1X": 0, "dimM": 3, "dimX": 2, "b1M": 0},
        "tcor3": {"dims": [1, 0, 0, 1], "p": 1},
    }))
    code, text = run(["bounds", "--file", str(path)])
    assert code == 0
    result = json.loads(text)
    assert result["gap_threshold"] == pytest.approx(25.0)
    assert result["perturbation"]["holds"] is False
    assert result["tcor2_budget"] == 1 and result["tcor3_budget"] == 0
    path.write_text(json.dumps({"gap": {"A": 1, "C": 1, "diam": 0.1}}))
    assert run(["bounds", "--file", str(path)])[0] == 1
