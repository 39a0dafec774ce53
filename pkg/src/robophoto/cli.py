"""Command-line entry point for the robot photographer toolkit."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__, tinynet
from .abstraction import classify_picture, build_picture_cnn, image_to_input, render_abstract
from .behavior_sim import Scenario, Simulator, write_event_log
from .composition import (
    baseline_score,
    heuristic_score,
    thresholds_from_json,
    thresholds_to_json,
)
from .core import (
    Dataset,
    DatasetError,
    Label,
    NoFacesError,
    PictureRecord,
    face_count_category,
    read_records_jsonl,
    split_dataset,
    validate_dataset,
    write_dataset_jsonl,
)
from .face_quality import dataset_faces, score_observation, train_face_ann, train_face_cnn
from .pgm import write_pgm
from .selection import ScoredPicture, SelectionConstraints, crop_cascade, select_best
from .stats import welch_t_test
from .threshold_opt import GAConfig, ga_optimize, write_curve_csv
from .tinynet import TrainConfig, TrainingDivergedError

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4

METHODS = ("baseline", "heuristic", "picture_cnn")


def _write_run_config(out_path: Path, args: argparse.Namespace) -> None:
    cfg = {k: v for k, v in vars(args).items() if k != "func"}
    cfg["tool_version"] = __version__
    path = Path(str(out_path) + ".config.json")
    path.write_text(json.dumps(cfg, sort_keys=True, default=str) + "\n", encoding="utf-8")


def _load_dataset(path: str, keep_faceless: bool = False) -> Dataset:
    raw = read_records_jsonl(path)
    result = validate_dataset(
        raw, keep_faceless=keep_faceless, provenance=path, base_dir=Path(path).parent
    )
    return result.dataset


def _score_dataset(dataset: Dataset, face_model_path: str | None) -> Dataset:
    """Attach face quality scores, from a model file or already-stored scores."""
    if face_model_path is None:
        for rec in dataset.records:
            for f in rec.faces:
                if f.score is None:
                    raise DatasetError(
                        "face_quality: faces carry no scores and no --face-model was given"
                    )
        return dataset
    model = tinynet.load_model(face_model_path)
    records = []
    for rec in dataset.records:
        faces = tuple(score_observation(model, f) for f in rec.faces)
        records.append(
            PictureRecord(
                picture_id=rec.picture_id,
                burst_id=rec.burst_id,
                width=rec.width,
                height=rec.height,
                faces=faces,
                label=rec.label,
            )
        )
    return Dataset(records=tuple(records), provenance=dataset.provenance)


def cmd_ingest(args) -> int:
    raw = read_records_jsonl(args.dataset)
    result = validate_dataset(
        raw,
        keep_faceless=args.keep_faceless,
        provenance=args.dataset,
        base_dir=Path(args.dataset).parent,
    )
    write_dataset_jsonl(result.dataset, args.out)
    _write_run_config(Path(args.out), args)
    print(
        f"ingested {len(result.dataset)} records "
        f"(dropped {result.dropped_records} records, {result.dropped_faces} faces)"
    )
    return EXIT_OK


def cmd_split(args) -> int:
    dataset = _load_dataset(args.dataset, keep_faceless=True)
    ratios = tuple(float(r) for r in args.ratios.split(","))
    if len(ratios) != 3:
        raise ValueError("--ratios needs three comma-separated values")
    train, test, validation = split_dataset(dataset, ratios, args.seed)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name, part in (("train", train), ("test", test), ("validation", validation)):
        write_dataset_jsonl(part, out / f"{name}.jsonl")
    _write_run_config(out / "split", args)
    print(f"split sizes: train={len(train)} test={len(test)} validation={len(validation)}")
    return EXIT_OK


def _train_config(args) -> TrainConfig:
    return TrainConfig(
        epochs=args.epochs,
        batch_size=args.batch_size,
        learning_rate=args.learning_rate,
        optimizer=args.optimizer,
        seed=args.seed,
    )


def cmd_train_face_ann(args) -> int:
    dataset = _load_dataset(args.dataset)
    model, history = train_face_ann(dataset_faces(dataset), _train_config(args), seed=args.seed)
    tinynet.save_model(model, args.out)
    _write_run_config(Path(args.out), args)
    print(f"final loss {history[-1]:.6f} after {len(history)} epochs")
    return EXIT_OK


def cmd_train_face_cnn(args) -> int:
    dataset = _load_dataset(args.dataset)
    model, history = train_face_cnn(dataset_faces(dataset), _train_config(args), seed=args.seed)
    tinynet.save_model(model, args.out)
    _write_run_config(Path(args.out), args)
    print(f"final loss {history[-1]:.6f} after {len(history)} epochs")
    return EXIT_OK


def cmd_train_picture_cnn(args) -> int:
    dataset = _score_dataset(_load_dataset(args.dataset), args.face_model)
    samples = []
    for rec in dataset.records:
        if rec.label is None:
            continue
        samples.append(
            (image_to_input(render_abstract(rec)), 1.0 if rec.label is Label.GOOD else 0.0)
        )
    if not samples:
        raise DatasetError("no labeled pictures to train on")
    model, history = tinynet.train(build_picture_cnn(seed=args.seed), samples, _train_config(args))
    tinynet.save_model(model, args.out)
    _write_run_config(Path(args.out), args)
    print(f"final loss {history[-1]:.6f} after {len(history)} epochs")
    return EXIT_OK


def cmd_optimize_thresholds(args) -> int:
    dataset = _load_dataset(args.dataset, keep_faceless=True)
    if args.kind == "heuristic":
        dataset = _score_dataset(dataset, args.face_model)
    config = GAConfig(
        population_size=args.population,
        generations=args.generations,
        seed=args.seed,
    )
    report = ga_optimize(dataset.records, args.kind, config)
    Path(args.out).write_text(thresholds_to_json(report.best_thresholds) + "\n", encoding="utf-8")
    write_curve_csv(report, str(args.out) + ".curve.csv")
    _write_run_config(Path(args.out), args)
    print(f"best training accuracy {report.best_accuracy:.4f} over {report.evaluations} evaluations")
    return EXIT_OK


def _category_name(rec: PictureRecord) -> str:
    try:
        return face_count_category(rec).value
    except NoFacesError:
        return "no_faces"


def _method_score(rec, method, baseline_t, heuristic_t, picture_model):
    if method == "baseline":
        s = baseline_score(rec, baseline_t)
        return s.passed, s.value
    if method == "heuristic":
        s = heuristic_score(rec, heuristic_t)
        return s.passed, s.value
    score = classify_picture(picture_model, render_abstract(rec))
    return score >= 0.5, score


def evaluate_methods(
    dataset: Dataset, baseline_t, heuristic_t, picture_model
) -> dict:
    """Accuracy of all three methods on the same labeled split, overall and
    per face-count category. Categories without pictures report null."""
    labeled = [r for r in dataset.records if r.label is not None]
    if not labeled:
        raise DatasetError("no labeled pictures to evaluate")
    report: dict = {"n_pictures": len(labeled), "methods": {}}
    for method in METHODS:
        confusion = {"tp": 0, "fp": 0, "tn": 0, "fn": 0}
        per_cat: dict[str, list[int]] = {}
        for rec in labeled:
            pred_good, _ = _method_score(rec, method, baseline_t, heuristic_t, picture_model)
            actual_good = rec.label is Label.GOOD
            key = ("t" if pred_good == actual_good else "f") + ("p" if pred_good else "n")
            confusion[key] += 1
            cat = _category_name(rec)
            per_cat.setdefault(cat, [0, 0])
            per_cat[cat][0] += pred_good == actual_good
            per_cat[cat][1] += 1
        n = len(labeled)
        by_category = {
            cat: (c / t if t else None) for cat, (c, t) in sorted(per_cat.items())
        }
        report["methods"][method] = {
            "accuracy": (confusion["tp"] + confusion["tn"]) / n,
            "by_category": by_category,
            "confusion": confusion,
        }
    return report


def cmd_evaluate(args) -> int:
    dataset = _score_dataset(_load_dataset(args.dataset, keep_faceless=True), args.face_model)
    baseline_t = thresholds_from_json(Path(args.baseline_thresholds).read_text())
    heuristic_t = thresholds_from_json(Path(args.heuristic_thresholds).read_text())
    picture_model = tinynet.load_model(args.picture_model)
    report = evaluate_methods(dataset, baseline_t, heuristic_t, picture_model)
    report["tool_version"] = __version__
    Path(args.out).write_text(json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    _write_run_config(Path(args.out), args)
    for method, m in report["methods"].items():
        print(f"{method}: accuracy {m['accuracy']:.4f}")
    return EXIT_OK


def run_pipeline(dataset: Dataset, baseline_t, heuristic_t, picture_model, quota: int = 8) -> dict:
    """Score every picture with all three methods and select per-method bests."""
    constraints = SelectionConstraints(per_category_quota=quota, total=3 * quota)
    report: dict = {"crop_plans": {}, "selections": []}
    sizes = {(r.width, r.height) for r in dataset.records}
    for w, h in sorted(sizes):
        report["crop_plans"][f"{w}x{h}"] = crop_cascade(w, h)
    for method in METHODS:
        candidates = []
        for rec in dataset.records:
            if not rec.faces:
                continue
            _, value = _method_score(rec, method, baseline_t, heuristic_t, picture_model)
            candidates.append(
                ScoredPicture(
                    picture_id=rec.picture_id,
                    burst_id=rec.burst_id,
                    category=face_count_category(rec),
                    score=value,
                )
            )
        by_id = {c.picture_id: c for c in candidates}
        for rank, pid in enumerate(select_best(candidates, constraints)):
            c = by_id[pid]
            report["selections"].append(
                {
                    "method": method,
                    "picture_id": c.picture_id,
                    "burst_id": c.burst_id,
                    "category": c.category.value,
                    "score": c.score,
                    "rank": rank,
                }
            )
    return report


def cmd_select(args) -> int:
    dataset = _score_dataset(_load_dataset(args.dataset), args.face_model)
    baseline_t = thresholds_from_json(Path(args.baseline_thresholds).read_text())
    heuristic_t = thresholds_from_json(Path(args.heuristic_thresholds).read_text())
    picture_model = tinynet.load_model(args.picture_model)
    report = run_pipeline(dataset, baseline_t, heuristic_t, picture_model, quota=args.quota)
    report["tool_version"] = __version__
    Path(args.out).write_text(json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    _write_run_config(Path(args.out), args)
    print(f"selected {len(report['selections'])} pictures across {len(METHODS)} methods")
    return EXIT_OK


def cmd_simulate(args) -> int:
    scenario = Scenario.from_json(Path(args.scenario).read_text())
    sim = Simulator(scenario)
    log = sim.run()
    write_event_log(log, args.out)
    _write_run_config(Path(args.out), args)
    shutters = sum(1 for e in log if e["event"] == "shutter")
    print(f"simulated {len(log)} steps, {shutters} shutter events")
    return EXIT_OK


def cmd_render_abstract(args) -> int:
    dataset = _score_dataset(_load_dataset(args.dataset), args.face_model)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for rec in dataset.records:
        write_pgm(render_abstract(rec), out / f"{rec.picture_id}.pgm")
    _write_run_config(out / "render", args)
    print(f"rendered {len(dataset)} abstract images to {out}")
    return EXIT_OK


def cmd_ttest(args) -> int:
    sample_a = json.loads(Path(args.sample_a).read_text())
    sample_b = json.loads(Path(args.sample_b).read_text())
    result = welch_t_test(sample_a, sample_b)
    out = {
        "test": "welch_one_sided",
        "t_statistic": result.t_statistic,
        "df": result.df,
        "p_one_sided": result.p_one_sided,
        "tool_version": __version__,
    }
    text = json.dumps(out, indent=2, sort_keys=True)
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
        _write_run_config(Path(args.out), args)
    print(text)
    return EXIT_OK


def _add_train_flags(p):
    p.add_argument("--epochs", type=int, default=100)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--learning-rate", type=float, default=0.05)
    p.add_argument("--optimizer", choices=("sgd", "momentum"), default="sgd")
    p.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="robophoto")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="validate a JSONL dataset and re-emit it")
    p.add_argument("--dataset", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--keep-faceless", action="store_true")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("split", help="burst-atomic train/test/validation split")
    p.add_argument("--dataset", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--ratios", default="0.8,0.1,0.1")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("train-face-ann", help="train the 9-feature face quality MLP")
    p.add_argument("--dataset", required=True)
    p.add_argument("--out", required=True)
    _add_train_flags(p)
    p.set_defaults(func=cmd_train_face_ann)

    p = sub.add_parser("train-face-cnn", help="train the face-crop CNN")
    p.add_argument("--dataset", required=True)
    p.add_argument("--out", required=True)
    _add_train_flags(p)
    p.set_defaults(func=cmd_train_face_cnn)

    p = sub.add_parser("train-picture-cnn", help="train the layout CNN on abstract renders")
    p.add_argument("--dataset", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--face-model", default=None)
    _add_train_flags(p)
    p.set_defaults(func=cmd_train_picture_cnn)

    p = sub.add_parser("optimize-thresholds", help="fit scorer thresholds with the GA")
    p.add_argument("--dataset", required=True)
    p.add_argument("--kind", choices=("baseline", "heuristic"), required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--face-model", default=None)
    p.add_argument("--population", type=int, default=64)
    p.add_argument("--generations", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_optimize_thresholds)

    p = sub.add_parser("evaluate", help="evaluate all three methods on a labeled split")
    p.add_argument("--dataset", required=True)
    p.add_argument("--baseline-thresholds", required=True)
    p.add_argument("--heuristic-thresholds", required=True)
    p.add_argument("--picture-model", required=True)
    p.add_argument("--face-model", default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("select", help="score, crop-plan and select best pictures per method")
    p.add_argument("--dataset", required=True)
    p.add_argument("--baseline-thresholds", required=True)
    p.add_argument("--heuristic-thresholds", required=True)
    p.add_argument("--picture-model", required=True)
    p.add_argument("--face-model", default=None)
    p.add_argument("--quota", type=int, default=8)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("simulate", help="run a behavior scenario and log events")
    p.add_argument("--scenario", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("render-abstract", help="export abstract renders as PGM")
    p.add_argument("--dataset", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--face-model", default=None)
    p.set_defaults(func=cmd_render_abstract)

    p = sub.add_parser("ttest", help="Welch one-sided t-test on two rating samples")
    p.add_argument("--sample-a", required=True)
    p.add_argument("--sample-b", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_ttest)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code not in (0, None) else 0
    try:
        return args.func(args)
    except (DatasetError, FileNotFoundError) as e:
        print(f"data error: {e}", file=sys.stderr)
        return EXIT_DATA
    except TrainingDivergedError as e:
        print(f"numeric failure: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
