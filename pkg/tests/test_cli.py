import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from trafseed.cli import main, parse_range
from trafseed.network import AltruismProfile, Demand
from trafseed.scenario import ScenarioError, load_scenario, parse_scenario, scenario_dict

from conftest import PI, SCENARIOS, four_roads

TWO = str(SCENARIOS / "two_roads.json")
FOUR = str(SCENARIOS / "four_roads.json")


def run_json(args, tmp_path, name="out.json"):
    out = tmp_path / name
    code = main(args + ["--out", str(out)])
    return code, (json.loads(out.read_text()) if out.exists() else None)


def test_solve_rbne(tmp_path):
    code, doc = run_json(["solve", "--mode", "rbne", "--scenario", TWO], tmp_path)
    assert code == 0
    assert doc["cost"] == pytest.approx(135.608, rel=0.005)
    assert doc["mode"] == "rbne" and doc["m_eq"] == 2
    assert [r["road"] for r in doc["roads"]] == [1, 2]
    assert doc["avg_latency"] * 0.6 == pytest.approx(doc["cost"], rel=1e-9)
    assert doc["beta"] is not None


def test_solve_modes(tmp_path):
    code, doc = run_json(["solve", "--mode", "ne", "--scenario", TWO, "--m-all", "2",
                          "--ell0", "540"], tmp_path)
    assert code == 0 and doc["cost"] == pytest.approx(324)
    code, doc = run_json(["solve", "--mode", "bane", "--scenario", FOUR], tmp_path)
    assert code == 0 and doc["cost"] == pytest.approx(164.56, rel=0.01)
    code, doc = run_json(["solve", "--mode", "bane", "--scenario", FOUR, "--kappa", "1.25"], tmp_path)
    assert doc["cost"] == pytest.approx(169.469, rel=0.01)
    assert main(["solve", "--mode", "ne", "--scenario", TWO]) == 3
    assert main(["solve", "--mode", "ne", "--scenario", TWO, "--m-all", "2", "--ell0", "10"]) == 2


def write_scenario(tmp_path, doc, name="s.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return str(p)


def test_tie_rejected(tmp_path, capsys):
    doc = json.loads(open(TWO).read())
    doc["roads"] = [doc["roads"][0], dict(doc["roads"][0])]
    code = main(["validate", "--scenario", write_scenario(tmp_path, doc)])
    assert code == 3
    assert "distinct" in capsys.readouterr().err


def test_parse_errors(tmp_path, capsys):
    p = tmp_path / "bad.json"
    p.write_text('{"roads": [\n  {"length_m": 1}\n')
    assert main(["validate", "--scenario", str(p)]) == 3
    assert "line" in capsys.readouterr().err
    doc = json.loads(open(TWO).read())
    doc["roads"][1]["speed_limit_mps"] = "fast"
    assert main(["validate", "--scenario", write_scenario(tmp_path, doc)]) == 3
    assert "roads[1].speed_limit_mps" in capsys.readouterr().err
    assert main(["validate", "--scenario", str(tmp_path / "missing.json")]) == 3
    assert main(["frobnicate"]) == 3
    assert main(["solve", "--mode", "xyz", "--scenario", TWO]) == 3


def test_validate(tmp_path, capsys):
    assert main(["validate", "--scenario", TWO]) == 0
    assert "feasible" in capsys.readouterr().out
    doc = json.loads(open(TWO).read())
    doc["demand"] = {"human_vps": 3.0, "auto_vps": 3.0}
    assert main(["validate", "--scenario", write_scenario(tmp_path, doc)]) == 2
    assert main(["solve", "--mode", "bne", "--scenario", write_scenario(tmp_path, doc)]) == 2


def test_sweep_kappa_one(tmp_path):
    out = tmp_path / "grid.csv"
    code = main(["sweep", "--xbar", "0:1.5:0.05", "--ybar", "0:1.5:0.05", "--scenario", FOUR,
                 "--kappa", "1", "--out", str(out)])
    assert code == 0
    with open(out) as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 961
    assert list(rows[0]) == ["xbar", "ybar", "avg_latency", "status"]
    a = four_roads().free_flow_latencies
    ok = [r for r in rows if r["status"] == "ok"]
    assert ok and len(ok) < 961
    for r in ok:
        assert np.min(np.abs(a - float(r["avg_latency"])) / a) <= 1e-6
    for r in rows:
        if r["status"] == "infeasible":
            assert r["avg_latency"] == "nan"


def test_parse_range():
    assert len(parse_range("0:1.5:0.05")) == 31
    assert parse_range("0:1:0.5").tolist() == [0.0, 0.5, 1.0]
    from trafseed.cli import UsageError
    with pytest.raises(UsageError):
        parse_range("0:1")
    with pytest.raises(UsageError):
        parse_range("1:0:0.1")


def test_fd(tmp_path):
    out = tmp_path / "fd.csv"
    assert main(["fd", "--scenario", TWO, "--road", "1", "--alpha", "0.5", "--points", "11",
                 "--out", str(out)]) == 0
    with open(out) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["density_vpm", "flow_vps", "latency_s"]
    assert len(rows) == 12
    assert float(rows[1][2]) == pytest.approx(400 * PI / 13.9)
    assert float(rows[-1][1]) == 0.0 and rows[-1][2] == "inf"
    assert main(["fd", "--scenario", TWO, "--road", "3", "--alpha", "0.5"]) == 3
    assert main(["fd", "--scenario", TWO, "--road", "1", "--alpha", "1.5"]) == 3


def test_solve_sim_round_trip(tmp_path):
    code, _ = run_json(["solve", "--mode", "rbne", "--scenario", FOUR], tmp_path, "r.json")
    assert code == 0
    code, doc = run_json(["sim", "--scenario", FOUR, "--routing", str(tmp_path / "r.json"),
                          "--seed", "3", "--warmup", "300", "--measure", "1200"], tmp_path, "s.json")
    assert code == 0
    assert doc["cost"] == pytest.approx(199.575, rel=0.10)
    assert doc["roads"][3] is None
    assert doc["roads"][0]["road"] == 1
    # a routing for the wrong network
    code, _ = run_json(["sim", "--scenario", TWO, "--routing", str(tmp_path / "r.json")], tmp_path, "t.json")
    assert code == 3


def test_oracle_command(tmp_path):
    code, doc = run_json(["oracle", "--scenario", TWO, "--step", "0.01"], tmp_path)
    assert code == 0
    assert abs(doc["cost"] - 135.608) <= doc["resolution"]
    code, doc = run_json(["oracle", "--scenario", TWO, "--altruistic"], tmp_path)
    assert doc["cost"] == pytest.approx(65.8, rel=0.01)
    assert main(["oracle", "--scenario", FOUR]) == 3


def test_full_precision(tmp_path):
    out = tmp_path / "o.json"
    main(["solve", "--mode", "bne", "--scenario", FOUR, "--out", str(out)])
    doc = json.loads(out.read_text())
    assert doc["cost"] == 1.6 * 1000 * PI / 25 or abs(doc["cost"] - 1.6 * 1000 * PI / 25) < 1e-9
    text = out.read_text()
    digits = text.split('"cost": ')[1].split(",")[0]
    assert len(digits.replace(".", "").lstrip("0")) >= 12


def test_scenario_round_trip():
    sc = load_scenario(FOUR)
    again = parse_scenario(scenario_dict(sc.network, sc.demand, sc.profile))
    assert np.allclose(again.network.free_flow_latencies, sc.network.free_flow_latencies)
    assert again.demand == sc.demand and again.profile == sc.profile
    doc = scenario_dict(sc.network, Demand(0.1, 0.1), AltruismProfile.uniform(2))
    del doc["altruism"]
    assert parse_scenario(doc).profile == AltruismProfile.selfish()
    with pytest.raises(ScenarioError):
        parse_scenario({"roads": []})


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "trafseed", "validate", "--scenario", TWO],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    proc = subprocess.run([sys.executable, "-m", "trafseed", "solve"], capture_output=True, text=True)
    assert proc.returncode == 3 and proc.stdout == ""
