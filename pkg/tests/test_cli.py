import json

import pytest

from ordinal_thresholds import cli
from ordinal_thresholds.risk import FitDivergenceError


def test_load_plan_toml_and_json(tmp_path):
    (tmp_path / "p.toml").write_text('distributions = ["H-1"]\nmethods = ["squa-at-o"]\ntrials = 3\n[fit]\nepochs = 500\n')
    plan = cli.load_plan(str(tmp_path / "p.toml"), seed=7)
    assert plan.distributions == ["H-1"] and plan.trials == 3 and plan.seed == 7
    assert plan.fit_config().epochs == 500
    (tmp_path / "p.json").write_text(json.dumps({"methods": ["logi-it-n"]}))
    plan = cli.load_plan(str(tmp_path / "p.json"))
    assert plan.methods == ["logi-it-n"] and len(plan.distributions) == 15
    assert plan.fit_config(fast=True).epochs == 20_000


@pytest.mark.parametrize("bad", [{"bogus": 1}, {"methods": ["foo-at-o"]}, {"distributions": ["Z-1"]}, {"trials": 0}])
def test_load_plan_rejects(tmp_path, bad):
    (tmp_path / "p.json").write_text(json.dumps(bad))
    with pytest.raises(ValueError):
        cli.load_plan(str(tmp_path / "p.json"))


def test_main_reports_bad_plan(tmp_path, capsys):
    (tmp_path / "p.json").write_text("{not json")
    assert cli.main(["simulate", "--plan", str(tmp_path / "p.json"), "--out", str(tmp_path)]) == 1
    assert "error" in capsys.readouterr().err


def _simulate(tmp_path, name):
    plan = tmp_path / "plan.json"
    plan.write_text(json.dumps({"distributions": ["H-1", "O-(1/3,1)"], "methods": ["squa-at-o", "hing-it-n"],
                                "fit": {"epochs": 2000}}))
    out = tmp_path / name
    code = cli.main(["simulate", "--plan", str(plan), "--out", str(out)])
    return code, out


def test_simulate_writes_tables_and_is_reproducible(tmp_path):
    code, out = _simulate(tmp_path, "a")
    assert code == 0
    lines = (out / "simulation_H-1.csv").read_text().splitlines()
    assert lines[0] == "distribution,method,task,error,bayes,gap"
    assert lines[1].startswith("H-1,optimal,MZE,")
    assert len(lines) == 1 + 3 * 3
    assert (out / "simulation_O-1_3_1.csv").exists()
    fits = json.loads((out / "simulation_fits.json").read_text())
    assert len(fits["cells"]) == 4
    _, out2 = _simulate(tmp_path, "b")
    for f in ("simulation.csv", "simulation_fits.json"):
        assert (out / f).read_bytes() == (out2 / f).read_bytes()


def test_simulate_failure_manifest(tmp_path, monkeypatch):
    def boom(dist, spec, cfg=None, trace_every=1000):
        raise FitDivergenceError("non-finite risk", {"epoch": 3})

    monkeypatch.setattr(cli, "fit", boom)
    code, out = _simulate(tmp_path, "f")
    assert code == cli.EXIT_PARTIAL
    failures = json.loads((out / "failures.json").read_text())
    assert len(failures) == 4 and failures[0]["diagnostics"] == {"epoch": 3}
    # the Bayes rows are still written
    assert (out / "simulation_H-1.csv").read_text().count("optimal") == 3


def test_sample_small(tmp_path):
    plan = tmp_path / "plan.json"
    plan.write_text(json.dumps({"distributions": ["H-3"], "methods": ["hing-at-o"], "trials": 2,
                                "n_train": 40, "n_val": 10, "n_test": 100}))
    code = cli.main(["sample", "--plan", str(plan), "--out", str(tmp_path / "s")])
    assert code == 0
    summary = (tmp_path / "s" / "sampled_summary.csv").read_text().splitlines()
    assert summary[0] == "distribution,method,task,trials,mean,sd,mean_sd" and len(summary) == 4
    trials = json.loads((tmp_path / "s" / "sampled_trials.json").read_text())
    assert [t["trial"] for t in trials] == [0, 1]
    again = tmp_path / "s2"
    cli.main(["sample", "--plan", str(plan), "--out", str(again)])
    assert (again / "sampled_trials.csv").read_bytes() == (tmp_path / "s" / "sampled_trials.csv").read_bytes()


def test_phase_diagram_command(tmp_path):
    assert cli.main(["phase-diagram", "--out", str(tmp_path), "--resolution", "10"]) == 0
    assert len(list(tmp_path.glob("phase_p*.csv"))) == 6
    assert cli.main(["phase-diagram", "--out", str(tmp_path / "one"), "--p", "0.4", "0.1", "0.1", "0.4",
                     "--resolution", "10"]) == 0
    assert [p.name for p in (tmp_path / "one").iterdir()] == ["phase_p0.4_0.1.csv"]


def test_mean_sd_format():
    assert cli.mean_sd([0.37, 0.38, 0.39]) == "0.380(0.010)"


def test_unimodal_scan_rows():
    rows = cli.unimodal_scan_rows([0.0, 5.0])
    assert {r["model"] for r in rows} == {"cl", "acl"}
    acl_equal = [r for r in rows if r["model"] == "acl" and r["bias"] == "equal"]
    assert all(r["unimodal"] == 1 for r in acl_equal)
