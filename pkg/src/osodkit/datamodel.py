"""Shared domain types and box geometry used by every other module.

Boxes are stored in center-normalized form (cx, cy, w, h), matching the
detector's output convention; all metric computation happens in absolute
pixel corner form. Every type here is an immutable value, safe to share
across parallel workers.
"""

from __future__ import annotations

from dataclasses import dataclass

# Decision kinds carried by a Detection. Exhaustive and mutually exclusive.
KNOWN = "known"
UNKNOWN = "unknown"
BACKGROUND = "background"
DECISIONS = (KNOWN, UNKNOWN, BACKGROUND)


@dataclass(frozen=True)
class ImageMeta:
    """Identity and pixel dimensions of one image."""

    image_id: str
    width: int
    height: int

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ValueError(
                f"image {self.image_id!r}: dimensions must be positive, "
                f"got {self.width}x{self.height}"
            )


@dataclass(frozen=True)
class Box:
    """Bounding box in center-normalized coordinates, each field in [0, 1]."""

    cx: float
    cy: float
    w: float
    h: float

    def __post_init__(self):
        for name in ("cx", "cy", "w", "h"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"box field {name}={v} outside [0, 1]")

    def to_corners(self, meta: ImageMeta) -> tuple[float, float, float, float]:
        """Absolute (x1, y1, x2, y2) in pixels. x1 <= x2 and y1 <= y2 always;
        corners may fall outside the image when the box straddles a border."""
        half_w = self.w * meta.width / 2.0
        half_h = self.h * meta.height / 2.0
        px = self.cx * meta.width
        py = self.cy * meta.height
        return (px - half_w, py - half_h, px + half_w, py + half_h)

    @staticmethod
    def from_corners(
        x1: float, y1: float, x2: float, y2: float, meta: ImageMeta
    ) -> "Box":
        """Inverse of to_corners; clamps tiny float excursions back into [0, 1]."""
        cx = (x1 + x2) / (2.0 * meta.width)
        cy = (y1 + y2) / (2.0 * meta.height)
        w = (x2 - x1) / meta.width
        h = (y2 - y1) / meta.height
        clamp = lambda v: min(1.0, max(0.0, v))
        return Box(clamp(cx), clamp(cy), clamp(w), clamp(h))

    def area(self) -> float:
        """Normalized area, w * h."""
        return self.w * self.h


@dataclass(frozen=True)
class GroundTruth:
    """One annotated object: a box plus a known class id or Unknown (None).

    Any category id outside the configured known set maps to Unknown at
    ingest time, so class_id is None exactly for unknown objects.
    """

    box: Box
    class_id: int | None

    @property
    def is_known(self) -> bool:
        return self.class_id is not None


@dataclass(frozen=True)
class QueryOutput:
    """One detector query: hidden feature vector, per-class confidences, box.

    feat is the last-decoder-layer activation (length d, fixed per dump);
    cls holds C per-class confidences in [0, 1].
    """

    feat: tuple[float, ...]
    cls: tuple[float, ...]
    box: Box


@dataclass(frozen=True)
class Detection:
    """A final decision for one query: known / unknown / background.

    Known detections carry class_id and confidence = max class confidence;
    unknown detections carry class_id None and confidence = objectness
    (the only ranking score available for unknowns). objectness is always
    recorded.
    """

    box: Box
    decision: str
    class_id: int | None
    confidence: float
    objectness: float

    def __post_init__(self):
        if self.decision not in DECISIONS:
            raise ValueError(f"unknown decision kind {self.decision!r}")
        if (self.decision == KNOWN) != (self.class_id is not None):
            raise ValueError("class_id must be set iff decision is known")


def iou(a: Box, b: Box, meta: ImageMeta) -> float:
    """Intersection-over-union in absolute pixel coordinates.

    Returns 0.0 for disjoint boxes and whenever either box has zero area;
    degenerate boxes are legal inputs, never errors.
    """
    ax1, ay1, ax2, ay2 = a.to_corners(meta)
    bx1, by1, bx2, by2 = b.to_corners(meta)
    iw = min(ax2, bx2) - max(ax1, bx1)
    ih = min(ay2, by2) - max(ay1, by1)
    if iw <= 0.0 or ih <= 0.0:
        return 0.0
    inter = iw * ih
    area_a = (ax2 - ax1) * (ay2 - ay1)
    area_b = (bx2 - bx1) * (by2 - by1)
    union = area_a + area_b - inter
    if union <= 0.0:
        return 0.0
    return inter / union


def iou_corners(a: tuple[float, float, float, float],
                b: tuple[float, float, float, float]) -> float:
    """IoU of two (x1, y1, x2, y2) corner boxes already in a common frame."""
    iw = min(a[2], b[2]) - max(a[0], b[0])
    ih = min(a[3], b[3]) - max(a[1], b[1])
    if iw <= 0.0 or ih <= 0.0:
        return 0.0
    inter = iw * ih
    area_a = (a[2] - a[0]) * (a[3] - a[1])
    area_b = (b[2] - b[0]) * (b[3] - b[1])
    union = area_a + area_b - inter
    if union <= 0.0:
        return 0.0
    return inter / union
