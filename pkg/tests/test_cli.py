import json
import shutil

import numpy as np
import pytest

from conftest import FIXTURES
from sitecost.cli import main
from sitecost.data import NormalizationParams, default_schema
from sitecost.model import TrainedModel, save_model
from sitecost.network import NetworkTopology, make_network


@pytest.fixture(scope="module")
def synth_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("synth")
    assert main(["synth", "--n", "52", "--seed", "7", "--out", str(out)]) == 0
    return out


def test_synth_then_validate(synth_dir, capsys):
    assert main(["validate", "--data", str(synth_dir / "projects.csv")]) == 0
    assert "52 records OK" in capsys.readouterr().out


def test_synth_idempotent(synth_dir, tmp_path):
    assert main(["synth", "--n", "52", "--seed", "7", "--out", str(tmp_path)]) == 0
    for name in ("projects.csv", "ground_truth.json"):
        assert (tmp_path / name).read_bytes() == (synth_dir / name).read_bytes()


def test_synth_n_zero_is_usage_error(tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(["synth", "--n", "0", "--out", str(tmp_path)])
    assert exc.value.code == 2


def test_validate_bad_row(synth_dir, tmp_path, capsys):
    lines = (synth_dir / "projects.csv").read_text().splitlines()
    lines[5] = lines[5].rsplit(",", 1)[0] + ",0"
    bad = tmp_path / "bad.csv"
    bad.write_text("\n".join(lines) + "\n")
    assert main(["validate", "--data", str(bad)]) == 1
    out = capsys.readouterr().out.splitlines()
    assert out[0].startswith("line 6, column 'overhead_pct'") and len(out) == 2


def test_validate_missing_file(tmp_path):
    assert main(["validate", "--data", str(tmp_path / "nope.csv")]) == 2


def test_train_topologies(synth_dir, tmp_path, capsys):
    out = tmp_path / "t"
    args = ["--data", str(synth_dir / "projects.csv"), "--out", str(out), "--max-epochs", "200"]
    assert main(["train", "--topology", "10-13-1:sigmoid", *args]) == 0
    model = json.loads((out / "model.json").read_text())
    assert model["topology"]["hidden"] == [[13, "sigmoid"]]
    report = json.loads((out / "training_report.json").read_text())
    assert len(report["validation_trace"]) == report["epochs_run"]
    assert main(["train", "--topology", "10-6-4-1:tangent", *args]) == 0
    model = json.loads((out / "model.json").read_text())
    assert model["topology"]["hidden"] == [[6, "tangent"], [4, "tangent"]]
    capsys.readouterr()
    assert main(["train", "--topology", "10-1-1-1-1", *args]) == 1
    assert "at most two hidden layers" in capsys.readouterr().err


def test_evaluate_published_pairs(capsys):
    rc = main(["evaluate", "--pairs", str(FIXTURES / "published_test_pairs.csv"), "--threshold", "2.476118"])
    assert rc == 0
    out = capsys.readouterr().out
    assert "(+) 4.620294  Wrong" in out
    # recomputed row 4 exceeds the threshold too
    assert "3 of 5 correct, accuracy 60%" in out


def test_evaluate_json_and_csv(capsys, tmp_path):
    pairs = str(FIXTURES / "published_test_pairs.csv")
    assert main(["evaluate", "--pairs", pairs, "--threshold", "3", "--format", "json", "--out", str(tmp_path)]) == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["correct_count"] == 4 and summary["n"] == 5
    assert (tmp_path / "evaluation.csv").read_text().count("\n") == 6


def _constant_model(path):
    topo = NetworkTopology.parse("10-3-1")
    net = make_network(topo, [np.zeros((3, 10)), np.zeros((1, 3))], [np.zeros(3), np.zeros(1)])
    norm = NormalizationParams(((0.0, 1.0), (1.0, 500.0), (3.0, 60.0)) + ((0.0, 1.0),) * 7, (8.0, 12.0))
    save_model(TrainedModel("const", net, norm, default_schema(), threshold_pct=1.0), path)
    return path


def test_predict_constant_model(synth_dir, tmp_path, capsys):
    model = _constant_model(tmp_path / "const.json")
    head = (synth_dir / "projects.csv").read_text().splitlines()[:6]
    batch = tmp_path / "five.csv"
    batch.write_text("\n".join(head) + "\n")
    assert main(["predict", "--model", str(model), "--data", str(batch)]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert [l.split("\t")[0] for l in lines] == ["P001", "P002", "P003", "P004", "P005"]
    assert all(l.split("\t")[1] == "10.00" for l in lines)


def test_predict_single_record_and_bad_label(tmp_path, capsys):
    model = _constant_model(tmp_path / "const.json")
    schema = default_schema()
    sets = [f"{f.name}={f.levels[0] if f.is_categorical else f.min}" for f in schema.factors]
    assert main(["predict", "--model", str(model), *sum((["--set", s] for s in sets), [])]) == 0
    assert "10.00" in capsys.readouterr().out
    sets[3] = "Project Type=Stadium"
    assert main(["predict", "--model", str(model), *sum((["--set", s] for s in sets), [])]) == 1
    assert "Project Type" in capsys.readouterr().err


def test_evaluate_empty_file(tmp_path, capsys):
    model = _constant_model(tmp_path / "const.json")
    schema = default_schema()
    empty = tmp_path / "empty.csv"
    empty.write_text(",".join(["id", *schema.names, "overhead_pct"]) + "\n")
    assert main(["evaluate", "--model", str(model), "--data", str(empty)]) == 1
    assert "no records" in capsys.readouterr().err


def test_evaluate_schema_mismatch(synth_dir, tmp_path):
    model = _constant_model(tmp_path / "const.json")
    obj = default_schema().to_json()
    obj["factors"][3]["levels"].append("Industrial")
    other = tmp_path / "schema.json"
    other.write_text(json.dumps(obj))
    args = ["evaluate", "--model", str(model), "--data", str(synth_dir / "projects.csv"), "--schema", str(other)]
    assert main(args) == 1


def test_config_file_and_flag_precedence(synth_dir, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"data": str(synth_dir / "projects.csv"), "out": str(tmp_path / "a"), "max_epochs": 50}))
    assert main(["train", "--config", str(cfg), "--topology", "10-3-1"]) == 0
    assert json.loads((tmp_path / "a" / "training_report.json").read_text())["epochs_run"] <= 50
    assert main(["train", "--config", str(cfg), "--topology", "10-3-1", "--out", str(tmp_path / "b")]) == 0
    assert (tmp_path / "b" / "model.json").exists()


@pytest.mark.slow
def test_sweep_then_evaluate_holdout(synth_dir, tmp_path, capsys):
    out = tmp_path / "run"
    assert main(["sweep", "--data", str(synth_dir / "projects.csv"), "--out", str(out)]) == 0
    assert "best trial" in capsys.readouterr().out
    pointer = json.loads((out / "best_trial.json").read_text())
    assert 1 <= pointer["trial_no"] <= 58
    for name in ("sweep_report.csv", "sweep_report.txt", "best_model.json", "holdout.csv", "split.json"):
        assert (out / name).exists()
    assert main(["evaluate", "--model", str(out / "best_model.json"), "--data", str(out / "holdout.csv")]) == 0
    assert "accuracy" in capsys.readouterr().out
