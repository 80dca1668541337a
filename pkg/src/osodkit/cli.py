"""Command-line entry point orchestrating the pipeline.

Commands: synth, train, calibrate, infer, eval, analyze, ablate, pipeline.
A JSON config file can supply defaults for any flag of a subcommand;
explicit flags win. All randomness flows from a single --seed, fanned out
deterministically per stage, so every command is idempotent given
identical inputs: rerunning writes byte-identical files.

Exit codes: 0 success, 1 data error (with a machine-readable JSON message
on stderr), 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import analysis, calibration, ingest, metrics, synth
from .errors import ToolkitError
from .estimators import MlpConfig, RandomForestConfig, train_mlp, train_random_forest
from .featurizer import FEATURE_NAMES, mask_without
from .inference import InferenceConfig, infer_dump
from .labeling import build_training_set

# Deterministic per-stage seed streams fanned out from the master seed.
STREAM_SYNTH_TRAIN = 0
STREAM_SYNTH_PRETEST = 1
STREAM_SYNTH_TEST = 2
STREAM_TRAIN = 3

ABLATION_LABELS = {
    "f_nan": "w/o NAN",
    "p_conf": "w/o confidence score",
    "s_box": "w/o box area",
    "d_center": "w/o box center to image edge",
    "d_edge": "w/o box edge to image edge",
}


def derive_seed(master: int, stream: int) -> int:
    return int(np.random.SeedSequence([master, stream]).generate_state(1)[0])


def parse_categories(text: str) -> list[int]:
    """Accepts '1,2,5' and '1-80' forms (mixable, comma-separated)."""
    ids: list[int] = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part:
            lo, hi = part.split("-", 1)
            ids.extend(range(int(lo), int(hi) + 1))
        else:
            ids.append(int(part))
    if not ids:
        raise ValueError(f"no category ids in {text!r}")
    return sorted(set(ids))


def parse_drop_features(text: str) -> tuple[bool, ...]:
    names = [n.strip() for n in text.split(",") if n.strip()]
    return mask_without(*names)


def _write_text(path, content: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(content)


def _train_model(dump, dataset, estimator: str, seed: int, iou_threshold: float,
                 feature_mask, workers: int, epochs: int | None, n_trees: int | None):
    X, y = build_training_set(dump, dataset, iou_threshold, workers=workers)
    if estimator == "rf":
        config = RandomForestConfig() if n_trees is None else RandomForestConfig(n_trees=n_trees)
        return train_random_forest(X, y, config, seed=seed,
                                   feature_mask=feature_mask, workers=workers)
    config = MlpConfig() if epochs is None else MlpConfig(epochs=epochs)
    return train_mlp(X, y, config, seed=seed, feature_mask=feature_mask)


def _load_data(dump_path, annotations_path, known_categories):
    dump = ingest.load_feature_dump(dump_path)
    dataset = ingest.load_annotations(annotations_path, known_categories)
    return dump, dataset


# --------------------------------------------------------------------------
# Subcommand implementations
# --------------------------------------------------------------------------

def cmd_synth(args) -> int:
    cfg = synth.SynthConfig(
        n_images=args.images,
        queries_per_image=args.queries,
        feat_dim=args.feat_dim,
        n_known_classes=args.classes,
        seed=args.seed,
    )
    result = synth.generate(cfg)
    os.makedirs(args.out_dir, exist_ok=True)
    ingest.write_feature_dump(result.dump, os.path.join(args.out_dir, "dump.jsonl"))
    ingest.write_annotations(result.dataset, os.path.join(args.out_dir, "annotations.json"))
    result.write_roles(os.path.join(args.out_dir, "roles.json"))
    print(f"wrote {len(result.dump.records)} images to {args.out_dir}")
    return 0


def cmd_train(args) -> int:
    dump, dataset = _load_data(args.dump, args.annotations, args.known_categories)
    mask = args.drop_features
    model = _train_model(dump, dataset, args.estimator, args.seed,
                         args.iou_threshold, mask, args.workers,
                         args.epochs, args.trees)
    ingest.save_model(model, args.out)
    print(f"trained {args.estimator} model -> {args.out}")
    return 0


def cmd_calibrate(args) -> int:
    dump, dataset = _load_data(args.dump, args.annotations, args.known_categories)
    model = ingest.load_model(args.model)
    grid = calibration.DEFAULT_GRID
    if args.grid is not None:
        grid = tuple(float(v) for v in args.grid.split(","))
    curve = calibration.calibrate(
        dump, dataset, model, grid=grid, top_k=args.top_k,
        class_ids=args.known_categories, workers=args.workers,
    )
    ingest.save_calibration_curve(curve, args.out)
    if args.plot_out:
        _write_text(args.plot_out, curve.plot_columns())
    print(f"chosen epsilon* = {curve.chosen}")
    return 0


def cmd_infer(args) -> int:
    dump = ingest.load_feature_dump(args.dump)
    model = ingest.load_model(args.model)
    cfg = InferenceConfig(
        epsilon_star=args.epsilon,
        top_k=args.top_k,
        class_ids=tuple(args.known_categories) if args.known_categories else None,
    )
    preds = infer_dump(dump, model, cfg, workers=args.workers)
    ingest.write_predictions(preds, args.out)
    print(f"wrote predictions for {len(preds)} images -> {args.out}")
    return 0


def cmd_eval(args) -> int:
    preds = ingest.load_predictions(args.predictions)
    dataset = ingest.load_annotations(args.annotations, args.known_categories)
    report = metrics.evaluate(preds, dataset)
    ingest.save_report(report, args.out)
    print(metrics.format_report_table({"eval": report}))
    return 0


def cmd_analyze(args) -> int:
    dump, dataset = _load_data(args.dump, args.annotations, args.known_categories)
    model = ingest.load_model(args.model)
    table = analysis.separation_report(dump, dataset, model,
                                       iou_threshold=args.iou_threshold,
                                       workers=args.workers)
    os.makedirs(args.out_dir, exist_ok=True)
    payload = {"format_version": 1}
    payload.update(table.to_dict())
    with open(os.path.join(args.out_dir, "separation.json"), "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2)
    for score, by_role in table.curves.items():
        for role, curve in by_role.items():
            if curve is not None:
                _write_text(
                    os.path.join(args.out_dir, f"kde_{score}_{role}.txt"),
                    curve.plot_columns(),
                )
    print(table.format_table())
    return 0


def _ablation_masks() -> list[tuple[str, tuple[bool, ...] | None]]:
    rows: list[tuple[str, tuple[bool, ...] | None]] = [("full", None)]
    for name in FEATURE_NAMES:
        rows.append((ABLATION_LABELS[name], mask_without(name)))
    return rows


def cmd_ablate(args) -> int:
    train_dump, train_dataset = _load_data(
        args.train_dump, args.train_annotations, args.known_categories
    )
    test_dump = ingest.load_feature_dump(args.test_dump)
    test_dataset = ingest.load_annotations(args.test_annotations, args.known_categories)

    models = {
        label: _train_model(train_dump, train_dataset, args.estimator, args.seed,
                            args.iou_threshold, mask, args.workers,
                            args.epochs, args.trees)
        for label, mask in _ablation_masks()
    }

    epsilon = args.epsilon
    if epsilon is None:
        # Calibrate once, on the full model, and reuse the threshold so
        # every row is compared at a matched operating point.
        if not args.pretest_dump or not args.pretest_annotations:
            raise ToolkitError("either --epsilon or pretest data is required")
        pretest_dump, pretest_dataset = _load_data(
            args.pretest_dump, args.pretest_annotations, args.known_categories
        )
        curve = calibration.calibrate(
            pretest_dump, pretest_dataset, models["full"], top_k=args.top_k,
            class_ids=args.known_categories, workers=args.workers,
        )
        epsilon = curve.chosen

    cfg = InferenceConfig(
        epsilon_star=epsilon, top_k=args.top_k,
        class_ids=tuple(args.known_categories),
    )
    rows = []
    reports = {}
    for label, model in models.items():
        preds = infer_dump(test_dump, model, cfg, workers=args.workers)
        report = metrics.evaluate(preds, test_dataset)
        reports[label] = report
        row = {"label": label, "epsilon": epsilon}
        row.update(report.to_dict())
        rows.append(row)

    with open(args.out, "w", encoding="utf-8") as fh:
        json.dump({"format_version": 1, "rows": rows}, fh, indent=2)
    print(metrics.format_report_table(reports))
    return 0


def cmd_pipeline(args) -> int:
    out = args.out_dir
    os.makedirs(out, exist_ok=True)
    splits = {}
    for name, stream, n_images in (
        ("train", STREAM_SYNTH_TRAIN, args.images),
        ("pretest", STREAM_SYNTH_PRETEST, max(args.images // 4, 2)),
        ("test", STREAM_SYNTH_TEST, args.images),
    ):
        cfg = synth.SynthConfig(
            n_images=n_images,
            queries_per_image=args.queries,
            feat_dim=args.feat_dim,
            n_known_classes=args.classes,
            seed=derive_seed(args.seed, stream),
        )
        result = synth.generate(cfg)
        dump_path = os.path.join(out, f"{name}_dump.jsonl")
        ann_path = os.path.join(out, f"{name}_annotations.json")
        ingest.write_feature_dump(result.dump, dump_path)
        ingest.write_annotations(result.dataset, ann_path)
        result.write_roles(os.path.join(out, f"{name}_roles.json"))
        splits[name] = (result.dump, result.dataset)

    known_ids = list(range(1, args.classes + 1))
    train_seed = derive_seed(args.seed, STREAM_TRAIN)

    model = _train_model(splits["train"][0], splits["train"][1], args.estimator,
                         train_seed, args.iou_threshold, None, args.workers,
                         args.epochs, args.trees)
    model_path = os.path.join(out, "model.json")
    ingest.save_model(model, model_path)

    curve = calibration.calibrate(
        splits["pretest"][0], splits["pretest"][1], model,
        top_k=args.top_k, class_ids=known_ids, workers=args.workers,
    )
    ingest.save_calibration_curve(curve, os.path.join(out, "calibration.json"))
    _write_text(os.path.join(out, "calibration_curve.txt"), curve.plot_columns())

    cfg = InferenceConfig(epsilon_star=curve.chosen, top_k=args.top_k,
                          class_ids=tuple(known_ids))
    preds = infer_dump(splits["test"][0], model, cfg, workers=args.workers)
    preds_path = os.path.join(out, "predictions.jsonl")
    ingest.write_predictions(preds, preds_path)

    report = metrics.evaluate(preds, splits["test"][1])
    report_path = os.path.join(out, "report.json")
    ingest.save_report(report, report_path)

    table = analysis.separation_report(splits["test"][0], splits["test"][1], model,
                                       workers=args.workers)
    sep_payload = {"format_version": 1}
    sep_payload.update(table.to_dict())
    with open(os.path.join(out, "separation.json"), "w", encoding="utf-8") as fh:
        json.dump(sep_payload, fh, indent=2)

    ablate_rows = []
    for label, mask in _ablation_masks():
        ab_model = _train_model(splits["train"][0], splits["train"][1], args.estimator,
                                train_seed, args.iou_threshold, mask, args.workers,
                                args.epochs, args.trees)
        ab_preds = infer_dump(splits["test"][0], ab_model, cfg, workers=args.workers)
        ab_report = metrics.evaluate(ab_preds, splits["test"][1])
        row = {"label": label, "epsilon": curve.chosen}
        row.update(ab_report.to_dict())
        ablate_rows.append(row)
    with open(os.path.join(out, "ablation.json"), "w", encoding="utf-8") as fh:
        json.dump({"format_version": 1, "rows": ablate_rows}, fh, indent=2)

    print(f"epsilon* = {curve.chosen}")
    print(metrics.format_report_table({args.estimator: report}))
    print(table.format_table())
    return 0


# --------------------------------------------------------------------------
# Parser assembly
# --------------------------------------------------------------------------

def _add_common(sub, *, workers=True, seed=False, known=False):
    if workers:
        sub.add_argument("--workers", type=int, default=1,
                         help="parallel workers for per-image stages (results are identical for any count)")
    if seed:
        sub.add_argument("--seed", type=int, default=0, help="master random seed")
    if known:
        sub.add_argument("--known-categories", type=parse_categories, required=True,
                         help="known category ids, e.g. '1-8' or '1,2,5'")


def _add_train_flags(sub):
    sub.add_argument("--estimator", choices=("rf", "mlp"), default="rf")
    sub.add_argument("--iou-threshold", type=float, default=0.5,
                     help="IoU threshold for object/background labeling")
    sub.add_argument("--epochs", type=int, default=None, help="MLP epoch budget override")
    sub.add_argument("--trees", type=int, default=None, help="random forest size override")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="osodkit",
        description="Open-set detection post-processing: train objectness, "
                    "calibrate, infer, and evaluate on detector feature dumps.",
    )
    parser.add_argument("--config", default=None,
                        help="JSON file of per-flag defaults; explicit flags win")
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("synth", help="generate synthetic detector outputs")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--images", type=int, default=50)
    p.add_argument("--queries", type=int, default=100)
    p.add_argument("--feat-dim", type=int, default=64)
    p.add_argument("--classes", type=int, default=8)
    _add_common(p, workers=False, seed=True)
    p.set_defaults(func=cmd_synth)

    p = subs.add_parser("train", help="train an objectness estimator")
    p.add_argument("--dump", required=True)
    p.add_argument("--annotations", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--drop-features", type=parse_drop_features, default=None,
                   metavar="NAMES", help="comma-separated features to mask, e.g. f_nan")
    _add_train_flags(p)
    _add_common(p, seed=True, known=True)
    p.set_defaults(func=cmd_train)

    p = subs.add_parser("calibrate", help="select the confidence threshold on pretest data")
    p.add_argument("--dump", required=True)
    p.add_argument("--annotations", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--plot-out", default=None, help="columnar curve data for chart tools")
    p.add_argument("--grid", default=None, help="override threshold grid, comma-separated")
    p.add_argument("--top-k", type=int, default=100)
    _add_common(p, known=True)
    p.set_defaults(func=cmd_calibrate)

    p = subs.add_parser("infer", help="produce known/unknown/background detections")
    p.add_argument("--dump", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--top-k", type=int, default=100)
    p.add_argument("--known-categories", type=parse_categories, default=None,
                   help="known category ids for class labeling (defaults to 1..C)")
    _add_common(p)
    p.set_defaults(func=cmd_infer)

    p = subs.add_parser("eval", help="score predictions against annotations")
    p.add_argument("--predictions", required=True)
    p.add_argument("--annotations", required=True)
    p.add_argument("--out", required=True)
    _add_common(p, workers=False, known=True)
    p.set_defaults(func=cmd_eval)

    p = subs.add_parser("analyze", help="KDE curves and Wasserstein-1 separation table")
    p.add_argument("--dump", required=True)
    p.add_argument("--annotations", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--iou-threshold", type=float, default=0.5)
    _add_common(p, known=True)
    p.set_defaults(func=cmd_analyze)

    p = subs.add_parser("ablate", help="evaluate feature-masked variants at a matched threshold")
    p.add_argument("--train-dump", required=True)
    p.add_argument("--train-annotations", required=True)
    p.add_argument("--pretest-dump", default=None)
    p.add_argument("--pretest-annotations", default=None)
    p.add_argument("--test-dump", required=True)
    p.add_argument("--test-annotations", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--epsilon", type=float, default=None,
                   help="fixed threshold; omit to calibrate the full model on pretest data")
    p.add_argument("--top-k", type=int, default=100)
    _add_train_flags(p)
    _add_common(p, seed=True, known=True)
    p.set_defaults(func=cmd_ablate)

    p = subs.add_parser("pipeline", help="synth + train + calibrate + infer + eval + analyze + ablate")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--images", type=int, default=50)
    p.add_argument("--queries", type=int, default=100)
    p.add_argument("--feat-dim", type=int, default=64)
    p.add_argument("--classes", type=int, default=8)
    p.add_argument("--top-k", type=int, default=30,
                   help="foreground slots per image; default suits the synthetic query budget")
    _add_train_flags(p)
    _add_common(p, seed=True)
    p.set_defaults(func=cmd_pipeline)

    return parser


def _apply_config(parser: argparse.ArgumentParser, argv: list[str]) -> list[str]:
    """Inject config-file values as parser defaults; explicit flags win.

    Values pass through each flag's type converter, and a key only
    applies to subcommands that declare that flag.
    """
    if "--config" not in argv:
        return argv
    idx = argv.index("--config")
    path = argv[idx + 1]
    with open(path, "r", encoding="utf-8") as fh:
        defaults = json.load(fh)
    if not isinstance(defaults, dict):
        raise ToolkitError("config file must hold a JSON object")
    by_dest = {k.replace("-", "_"): v for k, v in defaults.items()}
    for sub_action in parser._subparsers._group_actions:
        for sub in sub_action.choices.values():
            converted = {}
            for action in sub._actions:
                if action.dest not in by_dest:
                    continue
                value = by_dest[action.dest]
                if isinstance(value, str) and action.type is not None:
                    value = action.type(value)
                converted[action.dest] = value
                action.required = False  # the config satisfied it
            sub.set_defaults(**converted)
    return argv


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        argv = _apply_config(parser, argv)
        args = parser.parse_args(argv)
        return args.func(args)
    except (ToolkitError, OSError, ValueError) as exc:
        print(
            json.dumps({"error": type(exc).__name__, "detail": str(exc)}),
            file=sys.stderr,
        )
        return 1


if __name__ == "__main__":
    sys.exit(main())
