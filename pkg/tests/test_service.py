import math

import pytest
from fastapi.testclient import TestClient

from attentrack.scenarios import REFERENCE_GEOMETRIES
from attentrack.service import app
from attentrack.synthetic import (ScenarioScript, ScriptedPerson,
                                  write_script)

client = TestClient(app, raise_server_exceptions=False)


def _script_file(tmp_path, frames=10):
    person = ScriptedPerson(
        id="p", geometry=REFERENCE_GEOMETRIES["average"],
        waypoints=[(0, 1.6, 2.5), (frames - 1, 3.2, 2.5)],
        angles=[(0, 0.0)])
    script = ScenarioScript(name="svc", duration_frames=frames,
                            persons=[person], noise_sigma_mm=10.0, seed=9)
    path = tmp_path / "script.ini"
    write_script(path, script)
    return str(path)


def test_health():
    resp = client.get("/health")
    assert resp.status_code == 200
    assert resp.json() == {"status": "ok"}


def test_synth_then_run(tmp_path):
    script = _script_file(tmp_path)
    out = tmp_path / "seq"
    resp = client.post("/synth", json={"script_path": script,
                                       "out_dir": str(out)})
    assert resp.status_code == 200
    seqs = resp.json()["sequences"]
    assert len(seqs) == 1
    assert seqs[0]["frames"] == 10

    run_out = tmp_path / "run"
    resp = client.post("/run", json={"frames_dir": seqs[0]["dir"],
                                     "out_dir": str(run_out)})
    assert resp.status_code == 200
    body = resp.json()
    assert body["frames_processed"] == 10
    assert body["confirmed_tracks"] == 1
    assert body["false_positives"] == 0
    assert (run_out / "trajectories.csv").exists()


def test_refhist(tmp_path):
    out = tmp_path / "refs.txt"
    resp = client.post("/refhist", json={"out_path": str(out)})
    assert resp.status_code == 200
    assert resp.json()["histograms"] == 5
    assert out.exists()


def test_missing_script_is_data_error(tmp_path):
    resp = client.post("/synth", json={"script_path": None,
                                       "out_dir": str(tmp_path / "x")})
    assert resp.status_code == 422
    assert resp.json()["detail"]["kind"] == "data"


def test_bad_config_is_usage_error(tmp_path):
    cfg = tmp_path / "bad.ini"
    cfg.write_text("[room]\nwidth_m = -1\ndepth_m = 5\n")
    resp = client.post("/refhist", json={"out_path": str(tmp_path / "r.txt"),
                                         "config_path": str(cfg)})
    assert resp.status_code == 400
    assert resp.json()["detail"]["kind"] == "usage"


def test_missing_frames_dir_is_data_error(tmp_path):
    resp = client.post("/run", json={"frames_dir": str(tmp_path / "none"),
                                     "out_dir": str(tmp_path / "out")})
    assert resp.status_code == 422
    assert resp.json()["detail"]["kind"] == "data"
