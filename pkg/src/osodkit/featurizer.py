"""Assembly of the 5-dimensional objectness feature vector per query.

Feature ordering is fixed: [f_nan, p_conf, s_box, d_center, d_edge].
Models record this ordering together with their feature mask and refuse
mismatched inputs. All geometry is expressed in normalized [0, 1] units so
the estimator is invariant to image size; edge proximity in particular has
to be comparable across images.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .datamodel import Box, ImageMeta, QueryOutput
from .errors import EmptyVectorError
from .nan import nan_score, nan_scores

FEATURE_NAMES = ("f_nan", "p_conf", "s_box", "d_center", "d_edge")
NUM_FEATURES = len(FEATURE_NAMES)

# All five features enabled; masks are tuples of bools in FEATURE_NAMES order.
FULL_MASK = (True,) * NUM_FEATURES


@dataclass(frozen=True)
class ObjectnessFeatures:
    """Per-query objectness cues: NAN score, max confidence, box geometry."""

    f_nan: float
    p_conf: float
    s_box: float
    d_center: float
    d_edge: float

    def as_vector(self) -> np.ndarray:
        return np.array(
            [self.f_nan, self.p_conf, self.s_box, self.d_center, self.d_edge]
        )


def max_confidence(cls) -> float:
    """Maximum per-class confidence of a query."""
    arr = np.asarray(cls, dtype=np.float64)
    if arr.size == 0:
        raise EmptyVectorError("empty class-confidence vector")
    return float(arr.max())


def box_geometry(box: Box, meta: ImageMeta) -> tuple[float, float, float]:
    """(s_box, d_center, d_edge) in normalized units.

    s_box:    box area as a fraction of image area.
    d_center: minimum distance of the box center to any image edge.
    d_edge:   minimum distance from any box edge to the image boundary,
              clamped at 0 for boxes touching or crossing the boundary.
    """
    s_box = box.w * box.h
    d_center = min(box.cx, 1.0 - box.cx, box.cy, 1.0 - box.cy)
    half_w = box.w / 2.0
    half_h = box.h / 2.0
    d_edge = max(
        0.0,
        min(
            box.cx - half_w,
            1.0 - box.cx - half_w,
            box.cy - half_h,
            1.0 - box.cy - half_h,
        ),
    )
    return s_box, d_center, d_edge


def featurize(q: QueryOutput, meta: ImageMeta) -> ObjectnessFeatures:
    """Build the estimator input for one query."""
    s_box, d_center, d_edge = box_geometry(q.box, meta)
    return ObjectnessFeatures(
        f_nan=nan_score(q.feat),
        p_conf=max_confidence(q.cls),
        s_box=s_box,
        d_center=d_center,
        d_edge=d_edge,
    )


def featurize_queries(queries, meta: ImageMeta) -> np.ndarray:
    """Feature matrix (n_queries, 5) for one image, preserving query order.

    Vectorized across the image's queries; agrees with featurize() row by
    row, bit for bit (asserted in tests).
    """
    n = len(queries)
    if n == 0:
        return np.zeros((0, NUM_FEATURES))
    feats = np.array([q.feat for q in queries])
    cls = np.array([q.cls for q in queries])
    boxes = np.array([(q.box.cx, q.box.cy, q.box.w, q.box.h) for q in queries])

    out = np.empty((n, NUM_FEATURES))
    out[:, 0] = nan_scores(feats)
    out[:, 1] = cls.max(axis=1)
    cx, cy, w, h = boxes[:, 0], boxes[:, 1], boxes[:, 2], boxes[:, 3]
    out[:, 2] = w * h
    out[:, 3] = np.minimum(np.minimum(cx, 1.0 - cx), np.minimum(cy, 1.0 - cy))
    half_w = w / 2.0
    half_h = h / 2.0
    out[:, 4] = np.maximum(
        0.0,
        np.minimum(
            np.minimum(cx - half_w, 1.0 - cx - half_w),
            np.minimum(cy - half_h, 1.0 - cy - half_h),
        ),
    )
    return out


def apply_mask(X: np.ndarray, mask) -> np.ndarray:
    """Zero out masked-off feature columns; supports the feature ablations.

    mask is a tuple of bools, one per column of X, True = feature kept
    (FEATURE_NAMES order for the 5-feature pipeline). Returns a copy when
    anything is masked, X unchanged otherwise.
    """
    if mask is None:
        return X
    mask = tuple(bool(m) for m in mask)
    if len(mask) != X.shape[1]:
        raise ValueError(
            f"feature mask has {len(mask)} entries for {X.shape[1]} columns"
        )
    if all(mask):
        return X
    out = X.copy()
    for i, keep in enumerate(mask):
        if not keep:
            out[:, i] = 0.0
    return out


def normalize_mask(mask) -> tuple[bool, ...]:
    if mask is None:
        return FULL_MASK
    mask = tuple(bool(m) for m in mask)
    if len(mask) != NUM_FEATURES:
        raise ValueError(
            f"feature mask must have {NUM_FEATURES} entries, got {len(mask)}"
        )
    return mask


def mask_without(*names: str) -> tuple[bool, ...]:
    """Mask dropping the named features, e.g. mask_without('f_nan')."""
    for name in names:
        if name not in FEATURE_NAMES:
            raise ValueError(f"unknown feature {name!r}; choose from {FEATURE_NAMES}")
    return tuple(name not in names for name in FEATURE_NAMES)
