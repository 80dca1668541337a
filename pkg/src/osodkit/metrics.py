"""Open-set detection evaluation: known-class mAP, unknown recall/AP,
wilderness impact, and absolute open-set error.

Matching follows the standard detection convention: detections sorted by
confidence descending, each greedily taking the highest-IoU unmatched
ground truth of its image at or above the IoU threshold. AP uses the
COCO-style 101-point interpolation, and mAP / unknown metrics average over
IoU thresholds 0.50:0.05:0.95.

Known-class matching ignores unknown ground truth entirely (it neither
matches nor penalizes); cross-set confusion is accounted for only by
wilderness impact and the open-set error count, which keeps the four
metrics orthogonal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .datamodel import KNOWN, UNKNOWN, Detection, iou_corners
from .errors import (
    MissingImageError,
    NoGroundTruthError,
    NoKnownGTError,
    NoUnknownGTError,
)
from .ingest import AnnotatedDataset

# mAP / unknown metrics average over these; exact doubles so an IoU that
# lands exactly on a threshold compares predictably.
IOU_GRID = tuple((50 + 5 * i) / 100 for i in range(10))
WI_IOU = 0.5
WI_RECALL_LEVEL = 0.8
RECALL_GRID = np.linspace(0.0, 1.0, 101)


@dataclass(frozen=True)
class ScoredDet:
    """One detection with its ranking score and resolved pixel corners."""

    score: float
    image_id: str
    corners: tuple[float, float, float, float]


@dataclass
class WiResult:
    """Wilderness impact at the fixed known-recall operating point."""

    value: float
    recall_reached: bool
    prefix_size: int
    tp_known: int
    fp_known: int
    fp_unknown: int


@dataclass
class EvalReport:
    map_known: float
    recall_unknown: float
    ap_unknown: float
    wilderness_impact: float
    wilderness_impact_x100: float
    aose: int
    per_class_ap: dict[int, float]
    per_iou: dict[str, dict[str, float]]
    no_known_gt: bool = False
    no_unknown_gt: bool = False
    wi_recall_reached: bool = True

    def to_dict(self) -> dict:
        return {
            "map_known": self.map_known,
            "recall_unknown": self.recall_unknown,
            "ap_unknown": self.ap_unknown,
            "wilderness_impact": self.wilderness_impact,
            "wilderness_impact_x100": self.wilderness_impact_x100,
            "aose": self.aose,
            "per_class_ap": {str(k): v for k, v in self.per_class_ap.items()},
            "per_iou": self.per_iou,
            "no_known_gt": self.no_known_gt,
            "no_unknown_gt": self.no_unknown_gt,
            "wi_recall_reached": self.wi_recall_reached,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EvalReport":
        return cls(
            map_known=float(d["map_known"]),
            recall_unknown=float(d["recall_unknown"]),
            ap_unknown=float(d["ap_unknown"]),
            wilderness_impact=float(d["wilderness_impact"]),
            wilderness_impact_x100=float(d["wilderness_impact_x100"]),
            aose=int(d["aose"]),
            per_class_ap={int(k): float(v) for k, v in d["per_class_ap"].items()},
            per_iou={k: dict(v) for k, v in d["per_iou"].items()},
            no_known_gt=bool(d["no_known_gt"]),
            no_unknown_gt=bool(d["no_unknown_gt"]),
            wi_recall_reached=bool(d["wi_recall_reached"]),
        )


# --------------------------------------------------------------------------
# Matching and AP primitives
# --------------------------------------------------------------------------

def sort_detections(dets: list[ScoredDet]) -> list[ScoredDet]:
    """Confidence-descending order; insertion order breaks score ties."""
    return [dets[i] for i in sorted(range(len(dets)), key=lambda i: (-dets[i].score, i))]


def match_flags(sorted_dets: list[ScoredDet],
                gts_by_image: dict[str, list[tuple]],
                iou_thr: float) -> np.ndarray:
    """TP flag per detection under greedy highest-IoU-first matching."""
    taken: dict[str, np.ndarray] = {
        img: np.zeros(len(boxes), dtype=bool) for img, boxes in gts_by_image.items()
    }
    flags = np.zeros(len(sorted_dets), dtype=bool)
    for di, det in enumerate(sorted_dets):
        boxes = gts_by_image.get(det.image_id)
        if not boxes:
            continue
        used = taken[det.image_id]
        best_j = -1
        best_iou = 0.0
        for j, gt_box in enumerate(boxes):
            if used[j]:
                continue
            v = iou_corners(det.corners, gt_box)
            if v >= iou_thr and v > best_iou:
                best_iou = v
                best_j = j
        if best_j >= 0:
            used[best_j] = True
            flags[di] = True
    return flags


def ap_from_flags(tp_flags: np.ndarray, n_gt: int) -> float:
    """101-point interpolated area under the precision-recall curve."""
    if n_gt <= 0:
        raise NoGroundTruthError("AP undefined without ground truth")
    if len(tp_flags) == 0:
        return 0.0
    tp_cum = np.cumsum(tp_flags)
    ranks = np.arange(1, len(tp_flags) + 1)
    precision = tp_cum / ranks
    recall = tp_cum / n_gt
    # Precision envelope: max precision at any recall >= r.
    envelope = np.maximum.accumulate(precision[::-1])[::-1]
    idx = np.searchsorted(recall, RECALL_GRID, side="left")
    interp = np.where(idx < len(recall), envelope[np.minimum(idx, len(recall) - 1)], 0.0)
    # fsum: correctly rounded, so independent reimplementations agree bitwise
    return math.fsum(interp) / len(RECALL_GRID)


def average_precision(dets: list[ScoredDet],
                      gts_by_image: dict[str, list[tuple]],
                      iou_thr: float) -> float:
    """AP of one class at one IoU threshold."""
    if not 0.0 < iou_thr <= 1.0:
        raise ValueError(f"iou_thr {iou_thr} outside (0, 1]")
    n_gt = sum(len(b) for b in gts_by_image.values())
    sorted_dets = sort_detections(dets)
    return ap_from_flags(match_flags(sorted_dets, gts_by_image, iou_thr), n_gt)


def recall_at(dets: list[ScoredDet], gts_by_image: dict[str, list[tuple]],
              iou_thr: float) -> float:
    n_gt = sum(len(b) for b in gts_by_image.values())
    if n_gt <= 0:
        raise NoGroundTruthError("recall undefined without ground truth")
    flags = match_flags(sort_detections(dets), gts_by_image, iou_thr)
    return float(flags.sum()) / n_gt


# --------------------------------------------------------------------------
# Data extraction from predictions + dataset
# --------------------------------------------------------------------------

def _check_image_ids(preds: dict[str, list[Detection]], dataset: AnnotatedDataset):
    annotated = {m.image_id for m in dataset.images}
    for image_id in preds:
        if image_id not in annotated:
            raise MissingImageError(
                f"predictions reference image {image_id!r} absent from annotations"
            )


def _metas(dataset: AnnotatedDataset) -> dict:
    return {m.image_id: m for m in dataset.images}


def _known_gts_by_class(dataset: AnnotatedDataset) -> dict[int, dict[str, list[tuple]]]:
    metas = _metas(dataset)
    out: dict[int, dict[str, list[tuple]]] = {}
    for image_id, gts in dataset.ground_truths.items():
        meta = metas[image_id]
        for gt in gts:
            if gt.is_known:
                out.setdefault(gt.class_id, {}).setdefault(image_id, []).append(
                    gt.box.to_corners(meta)
                )
    return out


def _unknown_gts(dataset: AnnotatedDataset) -> dict[str, list[tuple]]:
    metas = _metas(dataset)
    out: dict[str, list[tuple]] = {}
    for image_id, gts in dataset.ground_truths.items():
        meta = metas[image_id]
        for gt in gts:
            if not gt.is_known:
                out.setdefault(image_id, []).append(gt.box.to_corners(meta))
    return out


def _dets_by_decision(preds: dict[str, list[Detection]], dataset: AnnotatedDataset,
                      decision: str) -> list[tuple[int | None, ScoredDet]]:
    metas = _metas(dataset)
    out = []
    for image_id, dets in preds.items():
        meta = metas[image_id]
        for det in dets:
            if det.decision == decision:
                out.append(
                    (det.class_id,
                     ScoredDet(det.confidence, image_id, det.box.to_corners(meta)))
                )
    return out


# --------------------------------------------------------------------------
# Headline metrics
# --------------------------------------------------------------------------

def map_known(preds: dict[str, list[Detection]], dataset: AnnotatedDataset,
              iou_grid=IOU_GRID) -> tuple[float, dict[int, float], dict[float, float]]:
    """Mean AP over known classes present in GT, averaged over the IoU grid.

    Returns (mAP, per-class AP, per-IoU mAP). Unknown ground truth plays no
    part here.
    """
    _check_image_ids(preds, dataset)
    gts_by_class = _known_gts_by_class(dataset)
    if not gts_by_class:
        raise NoKnownGTError("no known-class ground truth in dataset")
    known_dets = _dets_by_decision(preds, dataset, KNOWN)
    per_class: dict[int, float] = {}
    per_iou_acc = {thr: [] for thr in iou_grid}
    for class_id in sorted(gts_by_class):
        dets = [sd for cid, sd in known_dets if cid == class_id]
        aps = []
        for thr in iou_grid:
            ap = average_precision(dets, gts_by_class[class_id], thr)
            aps.append(ap)
            per_iou_acc[thr].append(ap)
        per_class[class_id] = float(np.mean(aps))
    per_iou = {thr: float(np.mean(v)) for thr, v in per_iou_acc.items()}
    return float(np.mean(list(per_class.values()))), per_class, per_iou


def unknown_recall_and_ap(preds: dict[str, list[Detection]],
                          dataset: AnnotatedDataset,
                          iou_grid=IOU_GRID
                          ) -> tuple[float, float, dict[float, tuple[float, float]]]:
    """(R_u, AP_u, per-IoU pairs): unknown GT as one class, unknown
    detections ranked by their recorded confidence (objectness)."""
    _check_image_ids(preds, dataset)
    gts = _unknown_gts(dataset)
    if not gts:
        raise NoUnknownGTError("no unknown ground truth in dataset")
    dets = [sd for _, sd in _dets_by_decision(preds, dataset, UNKNOWN)]
    per_iou = {}
    recalls = []
    aps = []
    for thr in iou_grid:
        r = recall_at(dets, gts, thr)
        a = average_precision(dets, gts, thr)
        per_iou[thr] = (r, a)
        recalls.append(r)
        aps.append(a)
    return float(np.mean(recalls)), float(np.mean(aps)), per_iou


def wilderness_impact(preds: dict[str, list[Detection]],
                      dataset: AnnotatedDataset,
                      recall_level: float = WI_RECALL_LEVEL,
                      iou_thr: float = WI_IOU) -> WiResult:
    """FP_u / (TP_k + FP_k) within the shortest confidence-ranked prefix of
    known-labeled detections reaching the known-recall level.

    The prefix is global (pooled across classes and images); matching for
    TP_k is class-aware at the single IoU threshold. A prefix detection
    that is not a known TP counts toward FP_u when it overlaps any unknown
    ground truth at or above the threshold. If the recall level is never
    reached the full set is used and the result is flagged.
    """
    if not 0.0 < recall_level <= 1.0:
        raise ValueError(f"recall_level {recall_level} outside (0, 1]")
    _check_image_ids(preds, dataset)
    gts_by_class = _known_gts_by_class(dataset)
    total_known_gt = sum(
        len(b) for per_image in gts_by_class.values() for b in per_image.values()
    )
    known_dets = _dets_by_decision(preds, dataset, KNOWN)
    order = sorted(range(len(known_dets)), key=lambda i: (-known_dets[i][1].score, i))

    if total_known_gt == 0:
        # Vacuous: nothing to recall, empty prefix.
        return WiResult(0.0, True, 0, 0, 0, 0)

    taken = {
        cid: {img: np.zeros(len(boxes), dtype=bool) for img, boxes in per_image.items()}
        for cid, per_image in gts_by_class.items()
    }
    unknown_gts = _unknown_gts(dataset)

    tp_flags = []
    fpu_flags = []
    prefix_end = None
    tp_cum = 0
    for rank, i in enumerate(order):
        class_id, det = known_dets[i]
        is_tp = False
        per_image = gts_by_class.get(class_id)
        if per_image and det.image_id in per_image:
            used = taken[class_id][det.image_id]
            best_j = -1
            best_iou = 0.0
            for j, gt_box in enumerate(per_image[det.image_id]):
                if used[j]:
                    continue
                v = iou_corners(det.corners, gt_box)
                if v >= iou_thr and v > best_iou:
                    best_iou = v
                    best_j = j
            if best_j >= 0:
                used[best_j] = True
                is_tp = True
        tp_flags.append(is_tp)
        hits_unknown = False
        if not is_tp:
            for gt_box in unknown_gts.get(det.image_id, []):
                if iou_corners(det.corners, gt_box) >= iou_thr:
                    hits_unknown = True
                    break
        fpu_flags.append(hits_unknown)
        tp_cum += is_tp
        if prefix_end is None and tp_cum / total_known_gt >= recall_level:
            prefix_end = rank + 1

    reached = prefix_end is not None
    if prefix_end is None:
        prefix_end = len(order)
    tp_k = int(sum(tp_flags[:prefix_end]))
    fp_k = prefix_end - tp_k
    fp_u = int(sum(fpu_flags[:prefix_end]))
    value = fp_u / (tp_k + fp_k) if (tp_k + fp_k) > 0 else 0.0
    return WiResult(value, reached, prefix_end, tp_k, fp_k, fp_u)


def aose(preds: dict[str, list[Detection]], dataset: AnnotatedDataset,
         iou_thr: float = WI_IOU) -> int:
    """Unknown ground truths matched one-to-one (greedy, confidence
    descending) by detections labeled as a known class."""
    _check_image_ids(preds, dataset)
    unknown_gts = _unknown_gts(dataset)
    if not unknown_gts:
        return 0
    dets = [sd for _, sd in _dets_by_decision(preds, dataset, KNOWN)]
    flags = match_flags(sort_detections(dets), unknown_gts, iou_thr)
    return int(flags.sum())


def evaluate(preds: dict[str, list[Detection]], dataset: AnnotatedDataset) -> EvalReport:
    """Full open-set report over one prediction set."""
    _check_image_ids(preds, dataset)

    no_known = False
    try:
        map_val, per_class, map_per_iou = map_known(preds, dataset)
    except NoKnownGTError:
        no_known = True
        map_val, per_class, map_per_iou = 0.0, {}, {thr: 0.0 for thr in IOU_GRID}

    no_unknown = False
    try:
        r_u, ap_u, unk_per_iou = unknown_recall_and_ap(preds, dataset)
    except NoUnknownGTError:
        no_unknown = True
        r_u, ap_u = 0.0, 0.0
        unk_per_iou = {thr: (0.0, 0.0) for thr in IOU_GRID}

    wi = wilderness_impact(preds, dataset)
    error_count = aose(preds, dataset)

    per_iou = {
        f"{thr:.2f}": {
            "map_known": map_per_iou[thr],
            "recall_unknown": unk_per_iou[thr][0],
            "ap_unknown": unk_per_iou[thr][1],
        }
        for thr in IOU_GRID
    }
    return EvalReport(
        map_known=map_val,
        recall_unknown=r_u,
        ap_unknown=ap_u,
        wilderness_impact=wi.value,
        wilderness_impact_x100=wi.value * 100.0,
        aose=error_count,
        per_class_ap=per_class,
        per_iou=per_iou,
        no_known_gt=no_known,
        no_unknown_gt=no_unknown,
        wi_recall_reached=wi.recall_reached,
    )


def format_report_table(reports: dict[str, EvalReport]) -> str:
    """Human-readable table, one row per labeled report."""
    header = f"{'model':<24} {'mAP':>7} {'R_u':>7} {'AP_u':>7} {'WI':>7} {'WIx100':>8} {'AOSE':>6}"
    lines = [header, "-" * len(header)]
    for label, r in reports.items():
        lines.append(
            f"{label:<24} {r.map_known:>7.3f} {r.recall_unknown:>7.3f} "
            f"{r.ap_unknown:>7.3f} {r.wilderness_impact:>7.4f} "
            f"{r.wilderness_impact_x100:>8.2f} {r.aose:>6d}"
        )
    return "\n".join(lines)
