import csv
import json
import sys

import pytest

from scenescout.cli import AGGREGATE_HEADER, main
from scenescout.metrics import CSV_HEADER, cvir, read_candidates_csv
from scenescout.scene import SceneSpec, Sphere, load_posed_set, save_scene

RED = (255, 0, 0)


@pytest.fixture
def workspace(tmp_path):
    save_scene(SceneSpec([Sphere((0, 0, 0), 1.0, RED)], resolution=(32, 32)),
               tmp_path / "scene.json")
    assert main(["-q", "ring", "--scene", str(tmp_path / "scene.json"), "--count", "35",
                 "--out", str(tmp_path / "poses.json")]) == 0
    return tmp_path


def run_args(ws, out, *extra):
    return ["-q", "run", "--scene", str(ws / "scene.json"), "--poses", str(ws / "poses.json"),
            "--out", str(ws / out), *extra]


def test_ring_file(workspace):
    posed = load_posed_set(workspace / "poses.json")
    assert len(posed) == 35 and posed.entries[0].id == "ring_000"


def test_run_high_regime(workspace):
    assert main(run_args(workspace, "o", "--mode", "egps", "--regime", "high", "--seed", "7")) == 0
    report = json.loads((workspace / "o" / "report.json").read_text())
    assert 900 <= report["total_images"] <= 1000
    assert report["config"]["seed"] == 7
    assert report["config"]["regime"]["name"] == "high"
    assert len(report["config"]["scene"]["sha256"]) == 64
    with open(workspace / "o" / "candidates.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == CSV_HEADER
    assert len(rows) - 1 == report["total_images"]


def test_identical_outputs_across_thread_counts(workspace, monkeypatch):
    outputs = []
    for threads, out in (("1", "a"), ("4", "b")):
        monkeypatch.setenv("SCENESCOUT_THREADS", threads)
        assert main(run_args(workspace, out, "--mode", "egps", "--seed", "3")) == 0
        outputs.append([(workspace / out / name).read_bytes()
                        for name in ("report.json", "candidates.csv")])
    assert outputs[0] == outputs[1]


@pytest.mark.parametrize("extra", [
    ("--mode", "pibs", "--topc", "1"),
    ("--mode", "grs", "--regime", "custom"),
    ("--mode", "grs", "--regime", "low", "--budget", "100"),
    ("--mode", "grs", "--scorer", "gaussian", "--scorer-arg", "bogus=1"),
])
def test_config_errors_exit_2(workspace, extra, capsys):
    assert main(run_args(workspace, "o", *extra)) == 2
    assert "error" in capsys.readouterr().err


def test_missing_pose_file_exit_2(workspace):
    args = run_args(workspace, "o", "--mode", "grs")
    args[args.index("--poses") + 1] = str(workspace / "nope.json")
    assert main(args) == 2


def test_custom_budget_and_images(workspace):
    assert main(run_args(workspace, "o", "--mode", "grs", "--regime", "custom", "--budget", "60",
                         "--topk", "3", "--save-images")) == 0
    report = json.loads((workspace / "o" / "report.json").read_text())
    assert report["total_images"] == 35 + 5 * 5
    assert len(list((workspace / "o").glob("top_*.ppm"))) == 3


SCRIPT = """
import base64, json, sys
req = json.loads(sys.stdin.readline())
px = base64.b64decode(req["pixels_b64"])
print(json.dumps({"score": 1 + px.count(b"\\xff\\x00\\x00")}))
"""


def test_external_scorer(workspace):
    (workspace / "s.py").write_text(SCRIPT)
    args = run_args(workspace, "o", "--mode", "grs", "--regime", "custom", "--budget", "45",
                    "--scorer", "external", "--scorer-arg", f"cmd={sys.executable} {workspace / 's.py'}")
    assert main(args) == 0
    report = json.loads((workspace / "o" / "report.json").read_text())
    assert report["total_images"] == 45


def test_failing_scorer_exit_3(workspace):
    args = run_args(workspace, "o", "--mode", "grs", "--regime", "custom", "--budget", "45",
                    "--scorer", "external", "--scorer-arg", f"cmd={sys.executable} -c pass")
    assert main(args) == 3


def test_matrix(workspace):
    doc = {"scenes": [{"name": "sph", "scene": "scene.json", "poses": "poses.json"}],
           "modes": ["grs", "pibs", "egps"],
           "regimes": [{"name": "custom", "budget": 60}, {"name": "custom", "budget": 85}],
           "seeds": [18446744073709551615]}
    (workspace / "m.json").write_text(json.dumps(doc))
    assert main(["-q", "matrix", str(workspace / "m.json"), "--out", str(workspace / "mo")]) == 0
    with open(workspace / "mo" / "aggregate.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 6
    assert list(rows[0]) == AGGREGATE_HEADER
    for row in rows:
        assert row["status"] == "ok"
        assert row["seed"] == "18446744073709551615"
        cands = read_candidates_csv(f"{row['run_dir']}/candidates.csv")
        scores = [c["score"] for c in cands]
        train = [c["score"] for c in cands if c["provenance"] == "training"]
        assert float(row["cvir"]) == cvir(scores, train)


def test_matrix_failed_cell_continues(workspace):
    doc = {"scenes": [{"name": "ok", "scene": "scene.json", "poses": "poses.json"},
                      {"name": "bad", "scene": "scene.json", "poses": "missing.json"}],
           "modes": ["grs"], "regimes": [{"name": "custom", "budget": 60}], "seeds": [1]}
    (workspace / "m.json").write_text(json.dumps(doc))
    assert main(["-q", "matrix", str(workspace / "m.json"), "--out", str(workspace / "mo")]) == 1
    with open(workspace / "mo" / "aggregate.csv") as fh:
        statuses = [r["status"] for r in csv.DictReader(fh)]
    assert statuses[0] == "ok" and statuses[1].startswith("failed")


def oracle_args(ws, *extra):
    return ["-q", "oracle", "--scene", str(ws / "scene.json"), "--out", str(ws / "or"), *extra]


def test_oracle(workspace):
    assert main(oracle_args(workspace, "--grid-steps", "11,11,11", "--targets", "4")) == 0
    doc = json.loads((workspace / "or" / "oracle.json").read_text())
    assert doc["evaluations"] == 5324
    assert doc["grid"]["mins"] == [-5.0, -5.0, -5.0]
    cands = read_candidates_csv(workspace / "or" / "oracle.csv")
    assert len(cands) == 5324 - doc["degenerate_skipped"]
    assert doc["best"]["score"] == max(c["score"] for c in cands)
    assert doc["quantiles"]["1.0"] == doc["best"]["score"]
    assert all(c["provenance"] == "oracle" for c in cands)


def test_oracle_explicit_bounds(workspace):
    assert main(oracle_args(workspace, "--grid-min=-3,0,2", "--grid-max=3,0,4",
                            "--grid-steps", "3,1,3", "--target", "0,0,0")) == 0
    doc = json.loads((workspace / "or" / "oracle.json").read_text())
    assert doc["evaluations"] == 9
    assert doc["best"]["origin"] == [0.0, 0.0, 2.0]


def test_oracle_grid_guard(workspace):
    assert main(oracle_args(workspace, "--grid-steps", "101,101,101", "--targets", "4")) == 2
