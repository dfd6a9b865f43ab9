import json

import numpy as np
import pytest

from ilcdob.cli import main
from ilcdob.harness import BASELINES, CampaignConfig, rescore, run_campaign
from ilcdob.loopmaps import RUN_COLUMNS, RunRecord
from ilcdob.models import DEFAULT_SPECS, UnstableLoopError
from ilcdob.scenarios import NoiseSpec

QUIET = NoiseSpec(amplitude=0.0)


@pytest.fixture(scope="module")
def campaign1():
    return run_campaign(CampaignConfig(scenario_id=1, noise=QUIET, max_cycles=3,
                                       stop_on_convergence=False))


def test_report_complete(campaign1):
    rep = campaign1
    n_iter = sum(len(rep.iterations(lbl)) for lbl in rep.flight_order)
    assert rep.n_runs == len(DEFAULT_SPECS) * len(BASELINES) + n_iter
    # the first system skips cycle one
    assert [len(rep.iterations(lbl)) for lbl in rep.flight_order] == [2, 3, 3]
    assert all(v >= 0 for row in rep.rmse.values() for v in row.values())
    assert set(rep.runs["UAV2"]) == {"no_dob", "dob_only", "I1", "I2", "I3"}


def test_case_one_campaign(campaign1):
    for lbl in campaign1.flight_order:
        assert max(campaign1.iterations(lbl)) < 1e-3


def test_monotone_at_zero_delta():
    rep = run_campaign(CampaignConfig(scenario_id=2, max_cycles=3, stop_on_convergence=False))
    for lbl in rep.flight_order:
        seq = [rep.rmse[lbl]["dob_only"]] + rep.iterations(lbl)
        assert np.all(np.diff(seq) <= 1e-9)


def test_ordering_default_noise():
    rep = run_campaign(CampaignConfig(scenario_id=3))
    for lbl, row in rep.rmse.items():
        assert row["no_dob"] > row["dob_only"] > row["I1"]


def test_convergence_stops_early():
    rep = run_campaign(CampaignConfig(scenario_id=1, max_cycles=5))
    assert rep.converged_cycle is not None
    assert rep.cycles_run == rep.converged_cycle < 5


def test_scenario_four_order():
    rep = run_campaign(CampaignConfig(scenario_id=4, max_cycles=1))
    assert rep.flight_order == ["UAV1", "UAV3", "UAV2"]
    assert "I1" not in rep.rmse["UAV1"]


def test_learning_chain_uses_predecessor():
    # UAV3's first pass in scenario 4 comes from UAV1, not UAV2
    rep = run_campaign(CampaignConfig(scenario_id=4, max_cycles=1))
    assert "I1" in rep.rmse["UAV3"] and "I1" in rep.rmse["UAV2"]


def test_destabilizing_delta_is_reported():
    with pytest.raises(UnstableLoopError, match="UAV1"):
        run_campaign(CampaignConfig(delta_injection={"UAV1": 30.0}))


def test_config_validation():
    with pytest.raises(ValueError):
        CampaignConfig(max_cycles=0)
    with pytest.raises(ValueError):
        CampaignConfig(convergence_tol=0.0)
    with pytest.raises(ValueError):
        CampaignConfig(delta_injection={"UAV7": 0.1})
    with pytest.raises(ValueError):
        CampaignConfig.from_dict({"scenario": 2})


def test_config_json_round_trip():
    cfg = CampaignConfig(scenario_id=4, delta_injection={"UAV2": 0.05},
                         noise=NoiseSpec(amplitude=0.05), flight_order=(1, 3, 2))
    back = CampaignConfig.from_json(cfg.to_json())
    assert back.to_dict() == cfg.to_dict()
    assert back.systems == cfg.systems


def snapshot(root):
    return {p.relative_to(root): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


def test_outputs_deterministic(tmp_path):
    cfg = CampaignConfig(scenario_id=2, max_cycles=2, output_dir=str(tmp_path))
    run_campaign(cfg)
    first = snapshot(tmp_path)
    run_campaign(CampaignConfig.from_json(cfg.to_json()))
    assert snapshot(tmp_path) == first
    assert len(first) == 1 + 6 + 5


def flat(grid):
    return {(lbl, c): v for lbl, row in grid.items() for c, v in row.items()}


def test_written_report(tmp_path):
    rep = run_campaign(CampaignConfig(scenario_id=1, max_cycles=2, output_dir=str(tmp_path)))
    doc = json.loads((tmp_path / "report.json").read_text())
    assert flat(doc["rmse"]) == pytest.approx(flat(rep.rmse))
    assert doc["config"]["scenario_id"] == 1
    n = sum(len(v) for v in doc["run_files"].values())
    assert n == rep.n_runs == len(list((tmp_path / "runs").glob("*.csv")))
    run = RunRecord.from_csv(tmp_path / doc["run_files"]["UAV2"]["I1"])
    assert run.rmse(10.0, 5.0) == pytest.approx(rep.rmse["UAV2"]["I1"], rel=1e-9)


def test_rescore(tmp_path):
    rep = run_campaign(CampaignConfig(scenario_id=2, max_cycles=1, output_dir=str(tmp_path)))
    again = rescore(tmp_path)
    assert flat(again.rmse) == pytest.approx(flat(rep.rmse), rel=1e-9)
    wide = rescore(tmp_path, settle=1.0, guard=0.0)
    assert wide.rmse["UAV2"]["no_dob"] != pytest.approx(rep.rmse["UAV2"]["no_dob"])


def test_summary_table(campaign1):
    text = campaign1.summary()
    assert text.splitlines()[0].split() == ["system", "no_dob", "dob_only", "I1", "I2", "I3"]
    assert "UAV1" in text and "convergence" in text


# -- command line ---------------------------------------------------------

def lines(path):
    return path.read_text().splitlines()


def test_cli_synth(tmp_path, capsys):
    assert main(["synth", "--pair", "1,3", "--out", str(tmp_path)]) == 0
    doc = json.loads((tmp_path / "UAV1_to_UAV3_filters.json").read_text())
    assert doc["source_label"] == "UAV1" and doc["target_label"] == "UAV3"
    assert lines(tmp_path / "UAV1_to_UAV3_L1.csv")[0] == "omega_rad_s,mag_db,phase_deg"


def test_cli_bode_pair(tmp_path):
    assert main(["bode", "--pair", "1,2", "--out", str(tmp_path)]) == 0
    names = {p.name for p in tmp_path.iterdir()}
    for lbl in ("UAV1", "UAV2"):
        for m in ("G_r", "G_d", "G_f", "Omega"):
            assert f"{lbl}_{m}.csv" in names
    assert {"UAV1_to_UAV2_T_e1.csv", "UAV1_to_UAV2_T_e2.csv"} <= names
    for n in names:
        assert lines(tmp_path / n)[0] == "omega_rad_s,mag_db,phase_deg"


def test_cli_run_pulse_estimate(tmp_path):
    out = tmp_path / "run.csv"
    assert main(["run", "--system", "2", "--condition", "dob-only", "--scenario", "3",
                 "--out", str(out)]) == 0
    assert lines(out)[0] == ",".join(RUN_COLUMNS)
    run = RunRecord.from_csv(out)
    # compare against the noise-free pulse shape: centre at 30 s, peak 2
    k = np.argmax(run.d_hat * (np.abs(run.t - 30) < 5))
    assert run.t[k] > 30.0
    assert run.d_hat[k] < run.d.max()


@pytest.mark.parametrize("cond", ["no-dob", "learn"])
def test_cli_run_conditions(tmp_path, cond, capsys):
    out = tmp_path / "r.csv"
    assert main(["run", "--system", "3", "--condition", cond, "--out", str(out)]) == 0
    assert "rmse" in capsys.readouterr().out


def test_cli_campaign_and_report(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(CampaignConfig(max_cycles=2).to_json())
    out = tmp_path / "camp"
    assert main(["campaign", "--config", str(cfg), "--scenario", "1", "--out", str(out)]) == 0
    assert (out / "report.json").exists()
    assert len(list((out / "runs").glob("*.csv"))) >= 6
    capsys.readouterr()
    assert main(["report", "--dir", str(out)]) == 0
    assert "UAV3" in capsys.readouterr().out


def test_cli_exit_codes(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["campaign", "--config", str(bad), "--out", str(tmp_path / "x")]) == 2
    bad.write_text(json.dumps({"max_cycles": 0}))
    assert main(["campaign", "--config", str(bad)]) == 2
    assert main(["synth", "--pair", "1,9"]) == 2
    assert main(["report", "--dir", str(tmp_path / "missing")]) == 2
    unstable = tmp_path / "u.json"
    unstable.write_text(json.dumps({"delta_injection": {"UAV1": 30.0}}))
    assert main(["run", "--config", str(unstable), "--system", "1",
                 "--condition", "dob-only"]) == 1
    err = capsys.readouterr().err
    assert err.count("error:") == 5
    with pytest.raises(SystemExit) as exc:
        main(["run", "--system", "1", "--condition", "fly"])
    assert exc.value.code == 2
