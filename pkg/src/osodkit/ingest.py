"""Interchange file formats: feature dumps, annotations, predictions, models,
reports.

Feature dumps are line-delimited JSON, one image per line:

    {"image_id": ..., "width": ..., "height": ...,
     "queries": [{"feat": [...], "cls": [...], "box": [cx, cy, w, h]}, ...]}

Annotations are COCO JSON verbatim; the known-category set is supplied by
the caller rather than baked into the file, so existing datasets can be
used unmodified. Floats are serialized with Python's shortest round-trip
representation, which makes read(write(x)) bit-stable.

Loading never silently drops records: every malformed line or dangling
reference is an error.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

from .datamodel import Box, Detection, GroundTruth, ImageMeta, QueryOutput
from .errors import (
    DanglingReferenceError,
    ParseError,
    SchemaError,
)

FORMAT_VERSION = 1


def _reject_constant(name):
    raise ParseError(f"non-finite constant {name!r} is not allowed")


def _finite(value, what: str) -> float:
    v = float(value)
    if not math.isfinite(v):
        raise SchemaError(f"{what} is not finite")
    return v


@dataclass(frozen=True)
class DumpRecord:
    """All detector outputs for one image."""

    meta: ImageMeta
    queries: tuple[QueryOutput, ...]


@dataclass
class FeatureDump:
    """Ordered per-image detector outputs with uniform feature geometry."""

    records: list[DumpRecord] = field(default_factory=list)
    feat_dim: int | None = None
    num_classes: int | None = None

    @classmethod
    def from_records(cls, records) -> "FeatureDump":
        dump = cls()
        seen = set()
        for rec in records:
            if rec.meta.image_id in seen:
                raise SchemaError(f"duplicate image_id {rec.meta.image_id!r}")
            seen.add(rec.meta.image_id)
            for qi, q in enumerate(rec.queries):
                dump._check_query_shape(rec.meta.image_id, qi, len(q.feat), len(q.cls))
            dump.records.append(rec)
        return dump

    def _check_query_shape(self, image_id: str, query_index: int,
                           feat_len: int, cls_len: int):
        if self.feat_dim is None:
            self.feat_dim = feat_len
            self.num_classes = cls_len
            return
        if feat_len != self.feat_dim:
            raise SchemaError(
                f"image {image_id!r} query {query_index}: feat length "
                f"{feat_len} != dump feat_dim {self.feat_dim}"
            )
        if cls_len != self.num_classes:
            raise SchemaError(
                f"image {image_id!r} query {query_index}: cls length "
                f"{cls_len} != dump num_classes {self.num_classes}"
            )

    def image_ids(self) -> list[str]:
        return [rec.meta.image_id for rec in self.records]


@dataclass
class AnnotatedDataset:
    """Images with exhaustively labeled known and unknown ground truth."""

    images: list[ImageMeta]
    ground_truths: dict[str, list[GroundTruth]]
    known_categories: dict[int, str]

    def meta_for(self, image_id: str) -> ImageMeta:
        for meta in self.images:
            if meta.image_id == image_id:
                return meta
        raise KeyError(image_id)

    def gts_for(self, image_id: str) -> list[GroundTruth]:
        return self.ground_truths.get(image_id, [])


# --------------------------------------------------------------------------
# Feature dumps
# --------------------------------------------------------------------------

def write_feature_dump(dump: FeatureDump, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in dump.records:
            obj = {
                "image_id": rec.meta.image_id,
                "width": rec.meta.width,
                "height": rec.meta.height,
                "queries": [
                    {
                        "feat": list(q.feat),
                        "cls": list(q.cls),
                        "box": [q.box.cx, q.box.cy, q.box.w, q.box.h],
                    }
                    for q in rec.queries
                ],
            }
            fh.write(json.dumps(obj, allow_nan=False))
            fh.write("\n")


def load_feature_dump(path) -> FeatureDump:
    dump = FeatureDump()
    seen_ids = set()
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                raise ParseError("blank line in feature dump", line=lineno)
            try:
                obj = json.loads(line, parse_constant=_reject_constant)
            except json.JSONDecodeError as exc:
                raise ParseError(f"malformed JSON: {exc.msg}", line=lineno) from exc
            dump.records.append(_parse_dump_record(obj, lineno, seen_ids, dump))
    return dump


def _parse_dump_record(obj, lineno: int, seen_ids: set, dump: FeatureDump) -> DumpRecord:
    if not isinstance(obj, dict):
        raise ParseError("record is not an object", line=lineno)
    try:
        image_id = str(obj["image_id"])
        width = int(obj["width"])
        height = int(obj["height"])
        raw_queries = obj["queries"]
    except KeyError as exc:
        raise ParseError(f"missing field {exc.args[0]!r}", line=lineno) from exc
    except (TypeError, ValueError) as exc:
        raise ParseError(f"bad field type: {exc}", line=lineno) from exc
    if not isinstance(raw_queries, list):
        raise ParseError("queries is not an array", line=lineno)
    if image_id in seen_ids:
        raise SchemaError(f"duplicate image_id {image_id!r}")
    seen_ids.add(image_id)
    try:
        meta = ImageMeta(image_id=image_id, width=width, height=height)
    except ValueError as exc:
        raise SchemaError(str(exc)) from exc
    queries = []
    for qi, rq in enumerate(raw_queries):
        queries.append(_parse_query(rq, image_id, qi, dump))
    return DumpRecord(meta=meta, queries=tuple(queries))


def _parse_query(rq, image_id: str, query_index: int, dump: FeatureDump) -> QueryOutput:
    where = f"image {image_id!r} query {query_index}"
    if not isinstance(rq, dict):
        raise SchemaError(f"{where}: query is not an object")
    for key in ("feat", "cls", "box"):
        if key not in rq:
            raise SchemaError(f"{where}: missing field {key!r}")
        if not isinstance(rq[key], list):
            raise SchemaError(f"{where}: field {key!r} is not an array")
    try:
        feat = tuple(_finite(v, f"{where}: feat value") for v in rq["feat"])
        cls = tuple(_finite(v, f"{where}: cls value") for v in rq["cls"])
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"{where}: {exc}") from exc
    if not feat:
        raise SchemaError(f"{where}: empty feat vector")
    if not cls:
        raise SchemaError(f"{where}: empty cls vector")
    for v in cls:
        if not 0.0 <= v <= 1.0:
            raise SchemaError(f"{where}: cls value {v} outside [0, 1]")
    raw_box = rq["box"]
    if len(raw_box) != 4:
        raise SchemaError(f"{where}: box must have 4 fields")
    try:
        box = Box(*(_finite(v, f"{where}: box value") for v in raw_box))
    except ValueError as exc:
        raise SchemaError(f"{where}: {exc}") from exc
    dump._check_query_shape(image_id, query_index, len(feat), len(cls))
    return QueryOutput(feat=feat, cls=cls, box=box)


# --------------------------------------------------------------------------
# Annotations (COCO JSON)
# --------------------------------------------------------------------------

def load_annotations(path, known_category_ids) -> AnnotatedDataset:
    """Parse a COCO-style annotation document.

    Boxes are converted from absolute (x, y, w, h) pixels to normalized
    center form; corner overshoot beyond the image bounds is clipped first.
    Any category id outside known_category_ids maps to Unknown.
    """
    known_ids = set(int(k) for k in known_category_ids)
    if not known_ids:
        raise SchemaError("known-category set must be non-empty")
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh, parse_constant=_reject_constant)
        except json.JSONDecodeError as exc:
            raise ParseError(f"malformed JSON: {exc.msg}") from exc
    if not isinstance(doc, dict):
        raise ParseError("annotation document is not an object")
    for key in ("images", "annotations"):
        if key not in doc:
            raise ParseError(f"missing top-level array {key!r}")

    names = {}
    for cat in doc.get("categories", []):
        names[int(cat["id"])] = str(cat.get("name", cat["id"]))
    known_categories = {cid: names.get(cid, str(cid)) for cid in sorted(known_ids)}

    images = []
    metas = {}
    for img in doc["images"]:
        try:
            meta = ImageMeta(
                image_id=str(img["id"]),
                width=int(img["width"]),
                height=int(img["height"]),
            )
        except (KeyError, ValueError) as exc:
            raise SchemaError(f"bad image entry {img!r}: {exc}") from exc
        if meta.image_id in metas:
            raise SchemaError(f"duplicate image id {meta.image_id!r}")
        metas[meta.image_id] = meta
        images.append(meta)

    ground_truths: dict[str, list[GroundTruth]] = {m.image_id: [] for m in images}
    for ann in doc["annotations"]:
        try:
            image_id = str(ann["image_id"])
            x, y, w, h = (float(v) for v in ann["bbox"])
            cat = int(ann["category_id"])
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaError(f"bad annotation entry {ann!r}: {exc}") from exc
        if image_id not in metas:
            raise DanglingReferenceError(
                f"annotation references missing image {image_id!r}"
            )
        meta = metas[image_id]
        x1 = min(max(x, 0.0), meta.width)
        y1 = min(max(y, 0.0), meta.height)
        x2 = min(max(x + w, 0.0), meta.width)
        y2 = min(max(y + h, 0.0), meta.height)
        box = Box.from_corners(x1, y1, x2, y2, meta)
        class_id = cat if cat in known_ids else None
        ground_truths[image_id].append(GroundTruth(box=box, class_id=class_id))

    return AnnotatedDataset(
        images=images, ground_truths=ground_truths, known_categories=known_categories
    )


def write_annotations(dataset: AnnotatedDataset, path) -> None:
    """Write a COCO-style document; unknown objects get a category id just
    past the known range so load_annotations maps them back to Unknown."""
    unknown_id = max(dataset.known_categories, default=0) + 1
    categories = [
        {"id": cid, "name": name} for cid, name in sorted(dataset.known_categories.items())
    ]
    categories.append({"id": unknown_id, "name": "unknown"})

    images = []
    annotations = []
    ann_id = 1
    for meta in dataset.images:
        images.append(
            {"id": meta.image_id, "width": meta.width, "height": meta.height}
        )
        for gt in dataset.gts_for(meta.image_id):
            x1, y1, x2, y2 = gt.box.to_corners(meta)
            annotations.append(
                {
                    "id": ann_id,
                    "image_id": meta.image_id,
                    "category_id": gt.class_id if gt.is_known else unknown_id,
                    "bbox": [x1, y1, x2 - x1, y2 - y1],
                    "area": (x2 - x1) * (y2 - y1),
                    "iscrowd": 0,
                }
            )
            ann_id += 1

    doc = {"images": images, "annotations": annotations, "categories": categories}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, allow_nan=False)


# --------------------------------------------------------------------------
# Predictions
# --------------------------------------------------------------------------

def write_predictions(dets: dict[str, list[Detection]], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for image_id, detections in dets.items():
            obj = {
                "image_id": image_id,
                "detections": [
                    {
                        "box": [d.box.cx, d.box.cy, d.box.w, d.box.h],
                        "decision": d.decision,
                        "class_id": d.class_id,
                        "confidence": d.confidence,
                        "objectness": d.objectness,
                    }
                    for d in detections
                ],
            }
            fh.write(json.dumps(obj, allow_nan=False))
            fh.write("\n")


def load_predictions(path) -> dict[str, list[Detection]]:
    out: dict[str, list[Detection]] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                raise ParseError("blank line in predictions file", line=lineno)
            try:
                obj = json.loads(line, parse_constant=_reject_constant)
            except json.JSONDecodeError as exc:
                raise ParseError(f"malformed JSON: {exc.msg}", line=lineno) from exc
            image_id = str(obj["image_id"])
            if image_id in out:
                raise SchemaError(f"duplicate image_id {image_id!r}")
            detections = []
            for di, rd in enumerate(obj["detections"]):
                where = f"image {image_id!r} detection {di}"
                try:
                    det = Detection(
                        box=Box(*(_finite(v, f"{where}: box value") for v in rd["box"])),
                        decision=str(rd["decision"]),
                        class_id=None if rd["class_id"] is None else int(rd["class_id"]),
                        confidence=_finite(rd["confidence"], f"{where}: confidence"),
                        objectness=_finite(rd["objectness"], f"{where}: objectness"),
                    )
                except (KeyError, ValueError, TypeError) as exc:
                    raise SchemaError(f"{where}: {exc}") from exc
                detections.append(det)
            out[image_id] = detections
    return out


# --------------------------------------------------------------------------
# Models and reports (JSON with an explicit version tag)
# --------------------------------------------------------------------------

def save_model(model, path) -> None:
    payload = {"format_version": FORMAT_VERSION}
    payload.update(model.to_dict())
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, allow_nan=False)


def load_model(path):
    from .estimators import model_from_dict

    with open(path, "r", encoding="utf-8") as fh:
        try:
            payload = json.load(fh, parse_constant=_reject_constant)
        except json.JSONDecodeError as exc:
            raise ParseError(f"malformed JSON: {exc.msg}") from exc
    _check_version(payload)
    return model_from_dict(payload)


def save_report(report, path) -> None:
    payload = {"format_version": FORMAT_VERSION}
    payload.update(report.to_dict())
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, allow_nan=False, indent=2)


def load_report(path):
    from .metrics import EvalReport

    with open(path, "r", encoding="utf-8") as fh:
        try:
            payload = json.load(fh, parse_constant=_reject_constant)
        except json.JSONDecodeError as exc:
            raise ParseError(f"malformed JSON: {exc.msg}") from exc
    _check_version(payload)
    return EvalReport.from_dict(payload)


def save_calibration_curve(curve, path) -> None:
    payload = {"format_version": FORMAT_VERSION}
    payload.update(curve.to_dict())
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, allow_nan=False, indent=2)


def load_calibration_curve(path):
    from .calibration import CalibrationCurve

    with open(path, "r", encoding="utf-8") as fh:
        try:
            payload = json.load(fh, parse_constant=_reject_constant)
        except json.JSONDecodeError as exc:
            raise ParseError(f"malformed JSON: {exc.msg}") from exc
    _check_version(payload)
    return CalibrationCurve.from_dict(payload)


def _check_version(payload) -> None:
    if not isinstance(payload, dict):
        raise SchemaError("document is not an object")
    version = payload.get("format_version")
    if version != FORMAT_VERSION:
        raise SchemaError(f"unsupported format_version {version!r}")
