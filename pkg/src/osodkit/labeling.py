"""Binary object/background training labels from exhaustive ground truth.

Matching is greedy and one-to-one: ground truths are visited in file order
and each takes the highest-IoU unmatched query at or above the IoU
threshold. Both known and unknown ground truths count as positives, since
the estimator being supervised is class agnostic. One-to-one matching (not
many-to-one) keeps loose duplicate boxes out of the positive set.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .datamodel import ImageMeta
from .errors import MissingImageError
from .featurizer import ObjectnessFeatures, featurize_queries
from .ingest import AnnotatedDataset, FeatureDump
from .parallel import parallel_map

DEFAULT_IOU_THRESHOLD = 0.5


@dataclass(frozen=True)
class LabeledExample:
    """One query with its object(1)/background(0) label.

    matched_gt is the index of the ground truth the query was matched to,
    present exactly when label is 1. Examples are emitted in query order.
    """

    features: ObjectnessFeatures
    label: int
    image_id: str
    matched_gt: int | None


def greedy_match(iou_matrix: np.ndarray, threshold: float,
                 col_tie_rank=None) -> list[int | None]:
    """Row-priority greedy one-to-one matching.

    Rows are visited in order; each takes the highest-IoU unmatched column
    with IoU >= threshold. Ties break toward the lowest col_tie_rank, then
    the lowest column index. Returns the matched column per row (None when
    unmatched).
    """
    n_rows, n_cols = iou_matrix.shape
    if col_tie_rank is None:
        col_tie_rank = np.arange(n_cols)
    else:
        col_tie_rank = np.asarray(col_tie_rank)
    taken = np.zeros(n_cols, dtype=bool)
    result: list[int | None] = []
    for r in range(n_rows):
        row = iou_matrix[r]
        eligible = np.nonzero((row >= threshold) & ~taken)[0]
        if eligible.size == 0:
            result.append(None)
            continue
        vals = row[eligible]
        top = eligible[vals == vals.max()]
        best_col = int(top[np.argmin(col_tie_rank[top])])  # then lowest index
        taken[best_col] = True
        result.append(best_col)
    return result


def iou_matrix(boxes_a, boxes_b, meta: ImageMeta) -> np.ndarray:
    """Pairwise IoU in absolute pixels, vectorized over both box lists."""
    if not boxes_a or not boxes_b:
        return np.zeros((len(boxes_a), len(boxes_b)))
    a = np.array([b.to_corners(meta) for b in boxes_a])
    b = np.array([b.to_corners(meta) for b in boxes_b])
    iw = np.minimum(a[:, None, 2], b[None, :, 2]) - np.maximum(a[:, None, 0], b[None, :, 0])
    ih = np.minimum(a[:, None, 3], b[None, :, 3]) - np.maximum(a[:, None, 1], b[None, :, 1])
    inter = np.where((iw > 0.0) & (ih > 0.0), iw * ih, 0.0)
    area_a = (a[:, 2] - a[:, 0]) * (a[:, 3] - a[:, 1])
    area_b = (b[:, 2] - b[:, 0]) * (b[:, 3] - b[:, 1])
    union = area_a[:, None] + area_b[None, :] - inter
    return np.where((inter > 0.0) & (union > 0.0), inter / np.maximum(union, 1e-300), 0.0)


def match_queries(queries, gts, meta: ImageMeta, iou_threshold: float,
                  p_conf: np.ndarray) -> dict[int, int]:
    """query index -> matched ground-truth index under the greedy rule.

    Ground truths take turns in file order; higher-confidence queries win
    IoU ties.
    """
    if not 0.0 < iou_threshold <= 1.0:
        raise ValueError(f"iou_threshold {iou_threshold} outside (0, 1]")
    if not gts or not len(queries):
        return {}
    ious = iou_matrix([g.box for g in gts], [q.box for q in queries], meta)
    tie_rank = np.empty(len(queries), dtype=int)
    tie_rank[np.argsort(-p_conf, kind="stable")] = np.arange(len(queries))
    return {
        qi: gi
        for gi, qi in enumerate(greedy_match(ious, iou_threshold, tie_rank))
        if qi is not None
    }


def assign_labels(queries, gts, meta: ImageMeta,
                  iou_threshold: float = DEFAULT_IOU_THRESHOLD) -> list[LabeledExample]:
    """Label every query of one image; output order follows query order."""
    X = featurize_queries(queries, meta)
    matched_gt = match_queries(queries, gts, meta, iou_threshold, X[:, 1])
    return [
        LabeledExample(
            features=ObjectnessFeatures(*X[qi]),
            label=1 if qi in matched_gt else 0,
            image_id=meta.image_id,
            matched_gt=matched_gt.get(qi),
        )
        for qi in range(len(queries))
    ]


def build_training_set(dump: FeatureDump, dataset: AnnotatedDataset,
                       iou_threshold: float = DEFAULT_IOU_THRESHOLD,
                       workers: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """Feature matrix and label vector over all dump images, in
    deterministic (image, query) order."""
    known_ids = {m.image_id for m in dataset.images}
    for rec in dump.records:
        if rec.meta.image_id not in known_ids:
            raise MissingImageError(
                f"dump image {rec.meta.image_id!r} has no annotations entry"
            )

    def label_record(rec):
        X = featurize_queries(rec.queries, rec.meta)
        matched = match_queries(rec.queries, dataset.gts_for(rec.meta.image_id),
                                rec.meta, iou_threshold, X[:, 1])
        y = np.zeros(len(rec.queries), dtype=int)
        y[list(matched)] = 1
        return X, y

    parts = parallel_map(label_record, dump.records, workers)
    if not parts:
        return np.zeros((0, 5)), np.zeros(0, dtype=int)
    X = np.concatenate([p[0] for p in parts])
    y = np.concatenate([p[1] for p in parts])
    return X, y
