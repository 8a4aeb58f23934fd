import csv
import json

import numpy as np
import pytest

import ksflow.quat_hopf
from ksflow.cli import main
from ksflow.scenario import BUILTIN, report_digest


def write_scenario(tmp_path, doc, name="sc.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


def read_jsonl(path):
    return [json.loads(line) for line in path.read_text().splitlines()]


def test_malformed_json_exits_2_without_output(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{\"potential\": ")
    out = tmp_path / "out"
    assert main(["simulate", "--scenario", str(bad), "--out", str(out)]) == 2
    assert not out.exists()
    assert "config error" in capsys.readouterr().err


@pytest.mark.parametrize("energy", [0.0, -0.5])
def test_classify_non_positive_energy(tmp_path, energy):
    doc = dict(BUILTIN["repulsive-pair"], energy=energy)
    out = tmp_path / "out"
    assert main(["classify", "--scenario", write_scenario(tmp_path, doc), "--out", str(out)]) == 2
    assert not out.exists()


def test_hill_grid_too_small_exits_2(tmp_path):
    doc = dict(BUILTIN["repulsive-pair"])
    doc["hill_grid"] = {"energy": 1.0, "bounds": [[-2, 2]] * 3, "resolution": 32}
    out = tmp_path / "out"
    assert main(["hill", "--scenario", write_scenario(tmp_path, doc), "--out", str(out)]) == 2
    assert not out.exists()


def test_empty_sweep_exits_2(tmp_path):
    doc = dict(BUILTIN["repulsive-pair"], energies=[])
    assert main(["scan-energy", "--scenario", write_scenario(tmp_path, doc),
                 "--out", str(tmp_path / "out")]) == 2


def test_bad_overrides_exit_2(tmp_path):
    assert main(["simulate", "--builtin", "free", "--rtol", "0", "--out", str(tmp_path)]) == 2
    assert main(["classify", "--builtin", "free", "--threads", "0", "--out", str(tmp_path)]) == 2


def test_budget_exceeded_exits_3(tmp_path):
    doc = dict(BUILTIN["two-attractive-shuttle"])
    doc["budget"] = {"T": 50.0, "max_steps": 10}
    assert main(["simulate", "--scenario", write_scenario(tmp_path, doc),
                 "--out", str(tmp_path / "out")]) == 3


def test_verify_zero_samples_passes(tmp_path):
    assert main(["verify-identities", "--n", "0", "--out", str(tmp_path)]) == 0
    body = json.loads((tmp_path / "verify.json").read_text())
    assert all(c["n"] == 0 for c in body["checks"])


def test_verify_detects_a_corrupted_map(monkeypatch, capsys):
    good = ksflow.quat_hopf.hopf

    def corrupt(z):
        k = good(z)
        return k + 1e-9 * np.ones_like(k)

    monkeypatch.setattr(ksflow.quat_hopf, "hopf", corrupt)
    assert main(["verify-identities", "--n", "200", "--only", "hopf_norm"]) == 1
    err = capsys.readouterr().err
    assert "offending sample" in err and "hopf_norm" in err


def test_verify_small_run_passes(capsys):
    assert main(["verify-identities", "--n", "500", "--seed", "3"]) == 0
    assert capsys.readouterr().out.count("PASS") == 6


def test_simulate_free(tmp_path):
    assert main(["simulate", "--builtin", "free", "--out", str(tmp_path)]) == 0
    recs = read_jsonl(tmp_path / "trajectory_000.jsonl")
    assert recs[0]["type"] == "header" and "scenario_hash" in recs[0]
    assert not any(r["type"] == "collision" for r in recs)
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["files"] == ["trajectory_000.jsonl"]
    assert manifest["digest"] == report_digest(manifest)
    assert manifest["tool"]["version"] == recs[0]["tool_version"]


def test_simulate_kepler_has_one_collision(tmp_path):
    assert main(["simulate", "--builtin", "kepler-radial", "--out", str(tmp_path)]) == 0
    recs = read_jsonl(tmp_path / "trajectory_000.jsonl")
    coll = [r for r in recs if r["type"] == "collision"]
    assert len(coll) == 1 and coll[0]["site"] == 0


def test_scenario_file_matches_builtin(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    doc = dict(BUILTIN["kepler-radial"], name="kepler-radial")
    assert main(["simulate", "--builtin", "kepler-radial", "--out", str(a)]) == 0
    assert main(["simulate", "--scenario", write_scenario(tmp_path, doc), "--out", str(b)]) == 0
    assert (a / "trajectory_000.jsonl").read_bytes() == (b / "trajectory_000.jsonl").read_bytes()


def test_classify_is_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        assert main(["classify", "--builtin", "free", "--out", str(out)]) == 0
    ra = json.loads((a / "classify.json").read_text())
    rb = json.loads((b / "classify.json").read_text())
    assert ra["digest"] == rb["digest"]
    assert (a / "classify.json").read_bytes() == (b / "classify.json").read_bytes()
    assert "runtime" in json.loads((a / "classify.timing.json").read_text())
    assert ra["scan"]["escape_fraction"] == 1.0


def test_seed_override_changes_the_scan(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["classify", "--builtin", "free", "--out", str(a)]) == 0
    assert main(["classify", "--builtin", "free", "--seed", "2", "--out", str(b)]) == 0
    ra = json.loads((a / "classify.json").read_text())
    rb = json.loads((b / "classify.json").read_text())
    assert ra["scenario_hash"] != rb["scenario_hash"]
    assert ra["digest"] != rb["digest"]


def test_hill_repulsive_pair(tmp_path):
    doc = dict(BUILTIN["repulsive-pair"])
    doc["hill_grid"] = dict(doc["hill_grid"], resolution=48)
    path = write_scenario(tmp_path, doc)
    assert main(["hill", "--scenario", path, "--voxels", "--out", str(tmp_path)]) == 0
    body = json.loads((tmp_path / "hill.json").read_text())
    assert body["component_count"] == 2
    lines = (tmp_path / "hill_voxels.csv").read_text().splitlines()
    assert lines[0].startswith("# tool=ksflow") and lines[1] == "i,j,k,component"
    comps = {int(row[3]) for row in csv.reader(lines[2:])}
    assert comps == {1, 2}


def test_scan_energy_csv(tmp_path):
    doc = dict(BUILTIN["repulsive-pair"], energies=[0.2, 0.4])
    doc["sampler"] = {"n_samples": 10, "seed": 1}
    doc["hill_grid"] = dict(doc["hill_grid"], resolution=32)
    assert main(["scan-energy", "--scenario", write_scenario(tmp_path, doc),
                 "--out", str(tmp_path)]) == 0
    lines = (tmp_path / "scan_energy.csv").read_text().splitlines()
    assert "scenario_hash=" in lines[0]
    rows = list(csv.DictReader(lines[1:]))
    assert [float(r["lambda"]) for r in rows] == [0.2, 0.4]
    assert all(float(r["escape_fraction"]) == 1.0 for r in rows)
    assert all(float(r["repulsive_threshold"]) == 0.5 for r in rows)
    # the Hill region at these energies reaches the grid edge
    assert all(r["hill_components"] == "" for r in rows)
