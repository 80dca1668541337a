#!/usr/bin/env python3
"""Open-set evaluation: known mAP, unknown recall/AP, wilderness impact,
and the open-set error count, plus the feature-ablation comparison.

All matching metrics average over IoU thresholds 0.50:0.05:0.95 with
COCO-style 101-point AP. Wilderness impact asks a different question: at
the operating point where known recall reaches 0.8, what fraction of the
known-labeled detections actually sit on unknown objects?
"""

from osodkit import (
    InferenceConfig,
    SynthConfig,
    build_training_set,
    calibrate,
    evaluate,
    generate,
    train_random_forest,
)
from osodkit.featurizer import mask_without
from osodkit.inference import infer_dump
from osodkit.metrics import format_report_table

KNOWN_IDS = tuple(range(1, 9))
TOP_K = 30

train = generate(SynthConfig(seed=7))
pretest = generate(SynthConfig(n_images=12, seed=8))
test = generate(SynthConfig(seed=9))

X, y = build_training_set(train.dump, train.dataset)
full = train_random_forest(X, y, seed=7)
no_nan = train_random_forest(X, y, seed=7, feature_mask=mask_without("f_nan"))

# One calibrated threshold, shared by both variants for a fair comparison.
eps = calibrate(pretest.dump, pretest.dataset, full,
                top_k=TOP_K, class_ids=KNOWN_IDS).chosen
cfg = InferenceConfig(epsilon_star=eps, top_k=TOP_K, class_ids=KNOWN_IDS)

reports = {}
for label, model in (("all 5 features", full), ("w/o NAN", no_nan)):
    preds = infer_dump(test.dump, model, cfg)
    reports[label] = evaluate(preds, test.dataset)

print(f"epsilon* = {eps}\n")
print(format_report_table(reports))

r_full = reports["all 5 features"]
r_masked = reports["w/o NAN"]
print(f"\nmasking the hidden-layer score costs "
      f"{r_full.recall_unknown - r_masked.recall_unknown:.3f} unknown recall "
      f"while known mAP moves {r_full.map_known - r_masked.map_known:+.3f}")
print(f"\nper-IoU breakdown at 0.50: {r_full.per_iou['0.50']}")
