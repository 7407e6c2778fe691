"""End-to-end pipeline, report formats and the command line."""

import csv
import io
import json

import numpy as np
import pytest

from twincheck import plant, twin
from twincheck.cli import main
from twincheck.pipeline import (
    ENV_OUT,
    EXIT_ERROR,
    EXIT_INCONCLUSIVE,
    EXIT_OK,
    EXIT_VIOLATED,
    PipelineError,
    RunConfig,
    default_output_dir,
    emit_report,
    run_pipeline,
    summarize,
)
from twincheck.trace import Trace, TraceError, ingest_trace, read_csv

STUCK = {"kind": "stuck_output", "signal": "pred_Bo_T", "t_from": 252, "t_to": 292}
NOISE = {"kind": "additive_noise", "t_from": 50, "t_to": 150, "amplitude": 1.0, "seed": 7}


def default_cfg(**kw) -> RunConfig:
    return RunConfig(params=plant.PlantParams().to_dict(), horizon=400, **kw)


@pytest.fixture(scope="module")
def stuck_report():
    return run_pipeline(default_cfg(faults=[STUCK]))


# -- pipeline -------------------------------------------------------------------

def test_identity_twin_satisfies_every_contract():
    r = run_pipeline(default_cfg())
    assert [c.status for c in r.results] == ["satisfied"] * 14
    assert r.exit_code == EXIT_OK


def test_stuck_boiler_prediction_violates_only_mc1(stuck_report):
    bad = [c.contract for c in stuck_report.results if c.status == "violated"]
    assert bad == ["MC1"]
    row = stuck_report.results[0].first_violation_row
    assert 252 <= row <= 292
    assert stuck_report.exit_code == EXIT_VIOLATED


def test_noisy_alarm_prediction_fails_fc9_with_dual_witness():
    r = run_pipeline(default_cfg(faults=[dict(NOISE, signal="pred_W_A")], contracts=["FC9"]))
    (res,) = r.results
    assert res.status == "violated"
    inv, dual = res.verdicts
    assert not inv.satisfied and dual.satisfied and dual.evidence is not None
    assert 50 <= dual.evidence.final.trace_row <= 150


def test_run_config_rejects_unknown_keys_and_contracts():
    with pytest.raises(PipelineError, match=r"\[config\] unknown configuration keys"):
        RunConfig.from_dict({"colour": "red"})
    with pytest.raises(PipelineError, match="unknown contract"):
        RunConfig(contracts=["XX1"])
    with pytest.raises(PipelineError, match="unknown twin source"):
        RunConfig(twin={"source": "oracle"})


def test_external_trace_matches_in_process(tmp_path, stuck_report):
    path = tmp_path / "ext.csv"
    stuck_report.trace.write_csv(path)
    again = run_pipeline(RunConfig(trace=str(path)))
    assert [(c.contract, c.status, c.first_violation_row) for c in again.results] == \
           [(c.contract, c.status, c.first_violation_row) for c in stuck_report.results]


def test_missing_column_names_the_column(tmp_path):
    tr = plant.run(plant.PlantParams(), 30)
    tr = twin.predict_trace(twin.identity_stub(), tr)
    cols = {c: v for c, v in tr.columns.items() if c != "pred_Bo_T"}
    Trace(cols, tr.period, tr.meta).write_csv(tmp_path / "t.csv")
    with pytest.raises(PipelineError, match="pred_Bo_T"):
        run_pipeline(RunConfig(trace=str(tmp_path / "t.csv"), contracts=["MC1"]))


# -- trace ingest -----------------------------------------------------------------

def test_ingest_round_trip(tmp_path):
    tr = twin.rollout(twin.identity_stub(), plant.random_scenario(3), 60, 3)
    tr.write_csv(tmp_path / "t.csv")
    again = ingest_trace(tmp_path / "t.csv")
    assert again.equals(tr) and again.meta == tr.meta


def test_header_only_is_empty_trace():
    with pytest.raises(TraceError, match="empty trace"):
        read_csv("t,B_T\n")


# -- report formats ---------------------------------------------------------------

def _strip_time(text):
    d = json.loads(text)
    d.pop("timestamp")
    return d


def test_report_json_deterministic_modulo_timestamp(tmp_path):
    a = run_pipeline(default_cfg(contracts=["MC1", "FC1"]))
    b = run_pipeline(default_cfg(contracts=["MC1", "FC1"]))
    emit_report(a, ["json"], tmp_path / "a")
    emit_report(b, ["json"], tmp_path / "b")
    ja, jb = ((tmp_path / d / "report.json").read_text() for d in "ab")
    assert _strip_time(ja) == _strip_time(jb)
    assert "wall_seconds" not in ja


def test_empty_violations_still_valid(tmp_path):
    r = run_pipeline(default_cfg(contracts=["FC5"]))
    emit_report(r, ["json", "csv"], tmp_path)
    d = json.loads((tmp_path / "report.json").read_text())
    assert d["contracts"][0]["violations"] == []
    rows = list(csv.reader(io.StringIO((tmp_path / "violations.csv").read_text())))
    assert rows == [["contract", "query", "row", "t", "signals"]]


def test_violation_csv_and_plotdata(tmp_path, stuck_report):
    emit_report(stuck_report, ["csv", "plotdata"], tmp_path)
    rows = list(csv.reader(io.StringIO((tmp_path / "violations.csv").read_text())))
    assert len(rows) > 1 and len({len(r) for r in rows}) == 1
    row = int(rows[1][2])
    pd = tmp_path / "plotdata"
    for name in ("B_T", "Bo_T", "pred_Bo_T", "T_Boil"):
        series = np.loadtxt(pd / f"{name}.csv", delimiter=",", skiprows=1)
        assert series[0, 0] <= row <= series[-1, 0]
    marks = (pd / "violations.csv").read_text().splitlines()
    assert marks[0] == "t,row,contract" and marks[1].endswith(",MC1")


def test_summary_table(stuck_report):
    text = summarize(stuck_report.to_dict())
    assert "MC1" in text and "violated 1" in text and "exit code 1" in text


# -- command line -----------------------------------------------------------------

def test_default_output_dir_from_environment(monkeypatch, tmp_path):
    monkeypatch.setenv(ENV_OUT, str(tmp_path / "o"))
    assert default_output_dir() == tmp_path / "o"
    monkeypatch.delenv(ENV_OUT)
    assert default_output_dir().name == "twincheck-out"


def test_cli_exit_codes(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv(ENV_OUT, str(tmp_path))
    base = ["pipeline", "--horizon", "400", "--seed", "0"]
    assert main(base + ["--contracts", "FC1,FC5"]) == EXIT_OK
    assert (tmp_path / "report.json").exists()
    assert main(base + ["--contracts", "FC1", "--max-states", "5"]) == EXIT_INCONCLUSIVE
    assert main(base + ["--contracts", "FC9", "--fault",
                        "additive_noise:pred_W_A:50:150:amplitude=1.0,seed=7"]) == EXIT_VIOLATED
    assert main(base + ["--contracts", "FC99"]) == EXIT_ERROR
    assert "twincheck: error" in capsys.readouterr().err


def test_cli_simulate_then_verify(tmp_path, capsys):
    trace = tmp_path / "t.csv"
    assert main(["rollout", "--seed", "2", "--horizon", "120", "-o", str(trace)]) == EXIT_OK
    out = tmp_path / "out"
    assert main(["verify", str(trace), "--contracts", "MC1,IC1",
                 "--out-dir", str(out), "--format", "json,csv"]) == EXIT_OK
    assert (out / "violations.csv").exists()
    capsys.readouterr()
    assert main(["report", str(out / "report.json"), "--json"]) == EXIT_OK
    assert json.loads(capsys.readouterr().out)["satisfied"] == 2


def test_cli_verify_missing_column(tmp_path, capsys):
    tr = plant.run(plant.PlantParams(), 20)
    tr.write_csv(tmp_path / "plant.csv")
    code = main(["verify", str(tmp_path / "plant.csv"), "--contracts", "MC1",
                 "--out-dir", str(tmp_path)])
    assert code == EXIT_ERROR
    assert "pred_Bo_T" in capsys.readouterr().err


def test_cli_config_file_with_override(tmp_path):
    cfg = {"params": plant.PlantParams().to_dict(), "horizon": 400,
           "faults": [STUCK], "contracts": ["FC1"]}
    (tmp_path / "c.json").write_text(json.dumps(cfg))
    argv = ["pipeline", "--config", str(tmp_path / "c.json"), "--out-dir", str(tmp_path)]
    assert main(argv) == EXIT_OK
    assert main(argv + ["--contracts", "MC1"]) == EXIT_VIOLATED


def test_cli_weights_round_trip(tmp_path):
    w = tmp_path / "w.json"
    assert main(["rollout", "--twin", "fit", "--train-scenarios", "3", "--horizon", "50",
                 "--save-weights", str(w), "-o", str(tmp_path / "a.csv")]) == EXIT_OK
    assert main(["rollout", "--twin", "weights", "--weights", str(w), "--horizon", "50",
                 "-o", str(tmp_path / "b.csv")]) == EXIT_OK
    a, b = (ingest_trace(tmp_path / f) for f in ("a.csv", "b.csv"))
    assert a.equals(b)
