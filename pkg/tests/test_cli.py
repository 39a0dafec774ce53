import json

import numpy as np
import pytest

from robophoto import tinynet
from robophoto.abstraction import build_picture_cnn
from robophoto.cli import (
    EXIT_DATA,
    EXIT_OK,
    EXIT_USAGE,
    evaluate_methods,
    main,
    run_pipeline,
)
from robophoto.composition import (
    BaselineThresholds,
    HeuristicThresholds,
    thresholds_to_json,
)
from robophoto.core import Dataset, write_dataset_jsonl
from robophoto.synthetic import (
    DEFAULT_HIDDEN_BASELINE,
    DEFAULT_HIDDEN_HEURISTIC,
    make_threshold_dataset,
)


@pytest.fixture
def dataset_path(tmp_path):
    pics = make_threshold_dataset(30, seed=0, kind="heuristic")
    path = tmp_path / "data.jsonl"
    write_dataset_jsonl(Dataset(records=tuple(pics)), path)
    return path


@pytest.fixture
def threshold_paths(tmp_path):
    bp = tmp_path / "baseline.json"
    hp = tmp_path / "heuristic.json"
    bp.write_text(thresholds_to_json(DEFAULT_HIDDEN_BASELINE))
    hp.write_text(thresholds_to_json(DEFAULT_HIDDEN_HEURISTIC))
    return bp, hp


@pytest.fixture
def picture_model_path(tmp_path):
    path = tmp_path / "picture.tnet"
    tinynet.save_model(build_picture_cnn(seed=0), path)
    return path


def test_ingest_roundtrip(tmp_path, dataset_path, capsys):
    out = tmp_path / "clean.jsonl"
    code = main(["ingest", "--dataset", str(dataset_path), "--out", str(out)])
    assert code == EXIT_OK
    assert "ingested 30 records" in capsys.readouterr().out
    assert out.exists()
    config = json.loads((tmp_path / "clean.jsonl.config.json").read_text())
    assert config["dataset"] == str(dataset_path)
    assert "tool_version" in config


def test_split_command(tmp_path, dataset_path, capsys):
    out_dir = tmp_path / "splits"
    code = main(
        ["split", "--dataset", str(dataset_path), "--out-dir", str(out_dir), "--seed", "1"]
    )
    assert code == EXIT_OK
    for name in ("train", "test", "validation"):
        assert (out_dir / f"{name}.jsonl").exists()
    sizes = capsys.readouterr().out
    assert "train=24" in sizes


def test_optimize_thresholds_command(tmp_path, dataset_path, capsys):
    out = tmp_path / "thresholds.json"
    code = main(
        [
            "optimize-thresholds",
            "--dataset", str(dataset_path),
            "--kind", "baseline",
            "--out", str(out),
            "--population", "16",
            "--generations", "10",
        ]
    )
    assert code == EXIT_OK
    d = json.loads(out.read_text())
    assert d["kind"] == "baseline"
    assert (tmp_path / "thresholds.json.curve.csv").exists()


def test_evaluate_command(tmp_path, dataset_path, threshold_paths, picture_model_path, capsys):
    bp, hp = threshold_paths
    out = tmp_path / "report.json"
    code = main(
        [
            "evaluate",
            "--dataset", str(dataset_path),
            "--baseline-thresholds", str(bp),
            "--heuristic-thresholds", str(hp),
            "--picture-model", str(picture_model_path),
            "--out", str(out),
        ]
    )
    assert code == EXIT_OK
    report = json.loads(out.read_text())
    assert set(report["methods"]) == {"baseline", "heuristic", "picture_cnn"}
    # the data was generated by the heuristic thresholds themselves
    assert report["methods"]["heuristic"]["accuracy"] == 1.0
    conf = report["methods"]["heuristic"]["confusion"]
    assert conf["fp"] == 0 and conf["fn"] == 0
    assert sum(conf.values()) == report["n_pictures"]


def test_select_command(tmp_path, dataset_path, threshold_paths, picture_model_path, capsys):
    bp, hp = threshold_paths
    out = tmp_path / "selection.json"
    code = main(
        [
            "select",
            "--dataset", str(dataset_path),
            "--baseline-thresholds", str(bp),
            "--heuristic-thresholds", str(hp),
            "--picture-model", str(picture_model_path),
            "--quota", "2",
            "--out", str(out),
        ]
    )
    assert code == EXIT_OK
    report = json.loads(out.read_text())
    assert report["crop_plans"]["3000x2000"]
    per_method = {}
    for sel in report["selections"]:
        per_method.setdefault(sel["method"], []).append(sel)
    assert set(per_method) == {"baseline", "heuristic", "picture_cnn"}
    for sels in per_method.values():
        assert len(sels) <= 3 * 2
        assert [s["rank"] for s in sels] == list(range(len(sels)))


def test_simulate_command(tmp_path, capsys):
    scenario = {
        "dt": 0.1,
        "steps": 50,
        "line": [[0.0, 0.0], [50.0, 0.0]],
        "start_pose": [0.0, 0.1, 0.0],
    }
    spath = tmp_path / "scenario.json"
    spath.write_text(json.dumps(scenario))
    out = tmp_path / "log.jsonl"
    code = main(["simulate", "--scenario", str(spath), "--out", str(out)])
    assert code == EXIT_OK
    lines = out.read_text().splitlines()
    assert len(lines) == 50
    assert "50 steps" in capsys.readouterr().out


def test_render_abstract_command(tmp_path, dataset_path, capsys):
    out_dir = tmp_path / "renders"
    code = main(
        ["render-abstract", "--dataset", str(dataset_path), "--out-dir", str(out_dir)]
    )
    assert code == EXIT_OK
    assert len(list(out_dir.glob("*.pgm"))) == 30


def test_ttest_command(tmp_path, capsys):
    a = tmp_path / "a.json"
    b = tmp_path / "b.json"
    a.write_text(json.dumps([4.1, 4.3, 3.9, 4.6, 4.2]))
    b.write_text(json.dumps([3.1, 3.5, 3.0, 3.2, 3.4]))
    code = main(["ttest", "--sample-a", str(a), "--sample-b", str(b)])
    assert code == EXIT_OK
    out = json.loads(capsys.readouterr().out)
    assert out["t_statistic"] > 0
    assert 0.0 <= out["p_one_sided"] < 0.05


def test_missing_dataset_is_data_error(tmp_path, capsys):
    code = main(["ingest", "--dataset", str(tmp_path / "nope.jsonl"), "--out", str(tmp_path / "o")])
    assert code == EXIT_DATA


def test_bad_ratios_is_usage_error(tmp_path, dataset_path, capsys):
    code = main(
        [
            "split",
            "--dataset", str(dataset_path),
            "--out-dir", str(tmp_path / "s"),
            "--ratios", "0.5,0.1",
        ]
    )
    assert code == EXIT_USAGE


def test_unknown_command_is_usage_error(capsys):
    assert main(["frobnicate"]) == EXIT_USAGE


def test_version_flag_exits_zero(capsys):
    assert main(["--version"]) == 0


def test_heuristic_without_scores_or_model_fails(tmp_path, capsys):
    pics = make_threshold_dataset(5, seed=3, kind="baseline")  # no stored scores
    path = tmp_path / "plain.jsonl"
    write_dataset_jsonl(Dataset(records=tuple(pics)), path)
    out = tmp_path / "t.json"
    code = main(
        [
            "optimize-thresholds",
            "--dataset", str(path),
            "--kind", "heuristic",
            "--out", str(out),
            "--population", "8",
            "--generations", "2",
        ]
    )
    assert code == EXIT_DATA


def test_evaluate_methods_requires_labels(picture_model_path):
    pics = make_threshold_dataset(4, seed=1, kind="heuristic")
    unlabeled = Dataset(
        records=tuple(
            type(p)(
                picture_id=p.picture_id,
                burst_id=p.burst_id,
                width=p.width,
                height=p.height,
                faces=p.faces,
                label=None,
            )
            for p in pics
        )
    )
    model = tinynet.load_model(picture_model_path)
    with pytest.raises(Exception):
        evaluate_methods(unlabeled, DEFAULT_HIDDEN_BASELINE, DEFAULT_HIDDEN_HEURISTIC, model)
