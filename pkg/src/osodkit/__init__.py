"""Open-set object detection post-processing toolkit.

Turns frozen-detector outputs (per-query hidden features, class
confidences, and boxes) into calibrated known/unknown/background
detections via a lightweight objectness estimator, and provides the
open-set evaluation and distribution-analysis suite to measure it.
"""

from .analysis import kde, separation_report, wasserstein1
from .calibration import CalibrationCurve, calibrate, combined_metric
from .datamodel import (
    BACKGROUND,
    KNOWN,
    UNKNOWN,
    Box,
    Detection,
    GroundTruth,
    ImageMeta,
    QueryOutput,
    iou,
)
from .estimators import (
    MlpConfig,
    MlpModel,
    RandomForestConfig,
    RandomForestModel,
    predict_objectness,
    train_mlp,
    train_random_forest,
)
from .featurizer import (
    FEATURE_NAMES,
    ObjectnessFeatures,
    box_geometry,
    featurize,
    max_confidence,
)
from .inference import InferenceConfig, decide, infer_dump
from .ingest import (
    AnnotatedDataset,
    FeatureDump,
    load_annotations,
    load_feature_dump,
    load_model,
    load_predictions,
    save_model,
    write_feature_dump,
    write_predictions,
)
from .labeling import LabeledExample, assign_labels, build_training_set
from .metrics import EvalReport, aose, evaluate, map_known, unknown_recall_and_ap, wilderness_impact
from .nan import active_count, l1_norm, nan_score, nan_scores
from .synth import SynthConfig, SynthResult, generate

__version__ = "0.1.0"
