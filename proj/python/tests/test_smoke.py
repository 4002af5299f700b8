import json
import pathlib

import pytest

import exostitch as ex

CONFIGS = pathlib.Path(__file__).resolve().parents[2] / "configs"


def small_config(size=40):
    cfg = json.loads((CONFIGS / "ember.json").read_text())
    cfg["horizon"] = 10
    cfg["mdp"]["params"]["horizon"] = 10
    cfg["seed_policy"]["size"] = size
    return cfg


@pytest.fixture(scope="module")
def db():
    return ex.build_database(small_config())


def test_database(db, tmp_path):
    assert len(db) == 400
    assert db.mode == "debiased"
    assert db.horizon == 10
    assert db.markov_names == ["fuel", "canopy"]
    assert db.seed_trajectories == 40
    assert ex.manifest(db)["record_count"] == 400
    db.save(tmp_path / "db")
    assert ex.load(tmp_path / "db") == db
    assert ex.build_database(small_config(), seed=7) == ex.build_database(small_config(), seed=7)
    assert len(ex.build_database(small_config(), mode="biased")) == 400


def test_simulate_and_estimators(db):
    ts = ex.simulate("fuel", [0.3], db=db, n=10, seed=3)
    assert len(ts) == 10
    again = ex.simulate("fuel", [0.3], db=db, n=10, seed=3)
    assert ts == again
    assert ts.value_estimate() == pytest.approx(sum(ts.returns()) / 10)
    d = ex.to_dict(ts)
    assert len(d["trajectories"][0]) == 10
    assert ts.csv().startswith("trajectory_id,time_step,action,reward,x_fuel")
    fc = ex.fan_chart(ts, "fuel")
    assert len(fc["time_steps"]) == 10
    assert len(fc["values"][0]) == 11

    truth = ex.simulate("fuel", [0.3], algorithm="ground_truth", mdp="ember", mdp_params={"horizon": 10}, n=10, h=10)
    assert ex.fidelity(truth, truth)["weighted_total"] == 0.0
    assert ex.fidelity(truth, ts, ["fuel", "canopy"])["weighted_total"] >= 0.0
    assert ex.bootstrap_floor(truth, ["fuel"], reps=20, seed=1) >= 0.0
    assert ex.k_dispersion(db, 3) > 0.0


def test_bounds():
    assert ex.mfmc_constant_C(1, 1, 1, 3) == 11.0
    assert ex.mfmci_constant_Ci(1, 1, 3) == 6.0
    assert ex.bias_bound(2.0, 0.5) == 1.0
    assert ex.variance_bound(3.0, 9, 2.0, 0.0) == pytest.approx(1.0)


def test_errors(db):
    with pytest.raises(ex.Error) as info:
        ex.simulate("nope", [], db=db)
    assert info.value.args[0] == "bad_policy"
    with pytest.raises(ex.Error) as info:
        ex.simulate("fuel", [0.3], db=db, n=41)
    assert info.value.args[0] == "exhaustion"
    with pytest.raises(ex.Error):
        ex.load("/nonexistent/db")


def test_learning_curve():
    cfg = {
        "mdp": {"name": "ember", "params": {"horizon": 10}},
        "h": 10, "n": 8, "seeds": [1], "bootstrap_reps": 5, "db_sizes": [600],
        "queries": [{"class": "fuel", "params": [0.3]}],
    }
    csv, summary = ex.learning_curve(cfg, threads=2)
    assert csv.count("\n") == 1 + 3
    assert summary["complete"] is True
    assert ex.learning_curve(cfg, threads=1)[0] == csv
