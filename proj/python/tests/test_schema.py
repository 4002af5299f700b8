import json
import pathlib

import pytest

import exostitch as ex

jsonschema = pytest.importorskip("jsonschema")

ROOT = pathlib.Path(__file__).resolve().parents[2]
SCHEMA = json.loads((ROOT / "schema" / "api.schema.json").read_text())


def check(payload, name):
    ref = {"$schema": SCHEMA["$schema"], "$defs": SCHEMA["$defs"], "$ref": f"#/$defs/{name}"}
    jsonschema.Draft202012Validator(ref).validate(payload)


def small_config():
    cfg = json.loads((ROOT / "configs" / "ember.json").read_text())
    cfg["horizon"] = 10
    cfg["mdp"]["params"]["horizon"] = 10
    cfg["seed_policy"]["size"] = 40
    return cfg


def test_schema_is_valid():
    jsonschema.Draft202012Validator.check_schema(SCHEMA)
    assert SCHEMA["version"] == "1"


def test_payloads_match_schema(tmp_path):
    db = ex.build_database(small_config())
    check(ex.manifest(db), "manifest")
    db.save(tmp_path / "db")
    check(json.loads((tmp_path / "db" / "manifest.json").read_text()), "manifest")

    ts = ex.simulate("fuel", [0.3], db=db, n=5, seed=2)
    check(ex.to_dict(ts), "trajectory_set")
    check(ex.fan_chart(ts, "fuel"), "quantile_series")
    check(ex.fidelity(ts, ts), "fidelity_report")

    cfg = {
        "mdp": {"name": "ember", "params": {"horizon": 10}},
        "seed_policy": {"class": "intensity", "ranges": [[0, 100], [0, 180]]},
        "queries": [{"class": "fuel", "params": [0.3]}],
        "db_sizes": [1000],
        "algorithms": ["mfmci"],
        "n": 5, "h": 10, "seeds": [1], "bootstrap_reps": 5,
    }
    _, summary = ex.learning_curve(cfg)
    check(summary, "learning_curve_summary")


def test_error_payload_shape():
    check({"error": {"code": "exhaustion", "message": "m", "time_step": 3, "trajectories_completed": 1}}, "error")
    with pytest.raises(jsonschema.ValidationError):
        check({"error": {"code": "nope", "message": "m"}}, "error")


def test_http_payloads_match_schema(tmp_path):
    import os
    import socket
    import subprocess
    import time
    import urllib.error
    import urllib.request

    cli = os.environ.get("EXOSTITCH_CLI")
    if not cli:
        pytest.skip("EXOSTITCH_CLI not set")
    ex.build_database(small_config()).save(tmp_path / "dbs" / "ember")
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        port = s.getsockname()[1]
    proc = subprocess.Popen([cli, "serve", "--db-dir", str(tmp_path / "dbs"), "--port", str(port)],
                            stdout=subprocess.DEVNULL, stderr=subprocess.DEVNULL)
    base = f"http://127.0.0.1:{port}/api"

    def call(path, body=None):
        data = json.dumps(body).encode() if body is not None else None
        req = urllib.request.Request(base + path, data=data, headers={"Content-Type": "application/json"})
        try:
            with urllib.request.urlopen(req, timeout=30) as r:
                return r.status, json.loads(r.read())
        except urllib.error.HTTPError as e:
            return e.code, json.loads(e.read())

    try:
        for _ in range(100):
            try:
                status, dbs = call("/databases?dispersion_k=3")
                break
            except OSError:
                time.sleep(0.05)
        else:
            pytest.fail("server did not start")
        assert status == 200
        check(dbs, "databases_response")
        db_id = dbs["databases"][0]["db_id"]

        status, a = call("/trajectories", {"policy_class": "fuel", "params": [0.3], "n": 5, "db_id": db_id})
        assert status == 200
        check(a, "trajectories_response")
        status, stored = call(f"/trajectories?set_id={a['set_id']}")
        assert status == 200
        check(stored, "stored_set_response")
        status, fc = call(f"/fanchart?set_id={a['set_id']}&variable=fuel")
        assert status == 200
        check(fc, "quantile_series")
        status, fid = call("/fidelity", {"truth_set_id": a["set_id"], "surrogate_set_id": a["set_id"]})
        assert status == 200
        check(fid, "fidelity_report")
        status, err = call(f"/bounds?db_id={db_id}&h=10&n=5&constants=mdp")
        assert status == 400
        check(err, "error")
        status, b = call(f"/bounds?db_id={db_id}&h=10&n=5&constants=1,1&k=3")
        assert status == 200, b
        check(b, "bound_report")
        status, err = call("/trajectories", {"policy_class": "nope", "db_id": db_id})
        assert status == 400
        check(err, "error")
    finally:
        proc.terminate()
        proc.wait(timeout=10)
