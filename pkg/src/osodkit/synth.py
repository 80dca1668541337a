"""Deterministic synthetic detector outputs with known ground truth.

Each query gets a planted role. Object queries (known or unknown) coincide
with a planted ground-truth box at IoU >= 0.7 by construction; background
queries are random boxes, a configurable fraction of which are "edge
artifacts": tiny, boundary-hugging boxes with a high NAN score, the
failure mode box geometry is meant to suppress. Feature vectors are
constructed so the NAN score lands exactly on a draw from the role's
band: scaling a mixed-sign vector preserves its activation pattern, so
the l1/active ratio can be set precisely.

Score bands are configurable, so tests can build both easy (separable)
and hard (overlapping) regimes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .datamodel import Box, GroundTruth, ImageMeta, QueryOutput
from .ingest import AnnotatedDataset, DumpRecord, FeatureDump


@dataclass(frozen=True)
class RoleBands:
    """Uniform sampling ranges for one role's confidence and NAN score."""

    conf: tuple[float, float]
    nan: tuple[float, float]


@dataclass(frozen=True)
class SynthConfig:
    n_images: int = 50
    queries_per_image: int = 100
    feat_dim: int = 64
    n_known_classes: int = 8
    image_width: int = 640
    image_height: int = 480
    known_fraction: float = 0.12
    unknown_fraction: float = 0.08
    edge_artifact_fraction: float = 0.25  # share of background queries
    known_bands: RoleBands = RoleBands(conf=(0.55, 0.95), nan=(2.0, 4.0))
    unknown_bands: RoleBands = RoleBands(conf=(0.03, 0.28), nan=(2.0, 4.0))
    background_bands: RoleBands = RoleBands(conf=(0.01, 0.18), nan=(0.4, 1.6))
    edge_bands: RoleBands = RoleBands(conf=(0.01, 0.18), nan=(2.5, 4.5))
    box_jitter: float = 0.04
    seed: int = 0

    def __post_init__(self):
        if self.n_images < 1 or self.queries_per_image < 1 or self.feat_dim < 2:
            raise ValueError("counts must be positive (feat_dim >= 2)")
        if self.known_fraction + self.unknown_fraction > 1.0:
            raise ValueError("object fractions exceed 1")


@dataclass
class SynthResult:
    dump: FeatureDump
    dataset: AnnotatedDataset
    planted_roles: list[list[str]] = field(default_factory=list)

    def write_roles(self, path) -> None:
        rows = [
            {"image_id": rec.meta.image_id, "roles": roles}
            for rec, roles in zip(self.dump.records, self.planted_roles)
        ]
        with open(path, "w", encoding="utf-8") as fh:
            json.dump({"format_version": 1, "images": rows}, fh)


def _feat_with_nan(rng: np.random.Generator, dim: int, target: float) -> tuple[float, ...]:
    """Mixed-sign vector whose NAN score equals target exactly."""
    if target <= 0.0:
        # All components non-positive: zero activated neurons, score 0.
        return tuple(-rng.uniform(0.1, 1.0, size=dim))
    k = int(rng.integers(max(1, dim // 8), max(2, dim // 2)))
    pos = rng.uniform(0.5, 1.5, size=k)
    neg = -rng.uniform(0.05, 1.0, size=dim - k)
    vec = np.concatenate([pos, neg])
    vec = vec[rng.permutation(dim)]
    vec *= target * k / np.abs(vec).sum()
    return tuple(vec)


def _cls_with_max(rng: np.random.Generator, n_classes: int, target: float,
                  argmax_index: int | None = None) -> tuple[float, ...]:
    """Confidence vector whose maximum equals target exactly."""
    cls = rng.uniform(0.0, max(target * 0.5, 1e-6), size=n_classes)
    cls = np.minimum(cls, target)
    idx = int(rng.integers(0, n_classes)) if argmax_index is None else argmax_index
    cls[idx] = target
    return tuple(cls)


def _object_boxes(rng: np.random.Generator, jitter: float) -> tuple[Box, Box]:
    """(ground truth, query) box pair with IoU >= 0.7 by construction."""
    w = rng.uniform(0.10, 0.35)
    h = rng.uniform(0.10, 0.35)
    cx = rng.uniform(w / 2 + 0.02, 1.0 - w / 2 - 0.02)
    cy = rng.uniform(h / 2 + 0.02, 1.0 - h / 2 - 0.02)
    gt = Box(cx, cy, w, h)
    q = Box(
        min(1.0, max(0.0, cx + rng.uniform(-jitter, jitter) * w)),
        min(1.0, max(0.0, cy + rng.uniform(-jitter, jitter) * h)),
        min(1.0, w * rng.uniform(1.0 - jitter, 1.0 + jitter)),
        min(1.0, h * rng.uniform(1.0 - jitter, 1.0 + jitter)),
    )
    return gt, q


def _background_box(rng: np.random.Generator) -> Box:
    w = rng.uniform(0.05, 0.45)
    h = rng.uniform(0.05, 0.45)
    cx = rng.uniform(0.05, 0.95)
    cy = rng.uniform(0.05, 0.95)
    return Box(cx, cy, min(w, 1.0), min(h, 1.0))


def _edge_box(rng: np.random.Generator) -> Box:
    """Tiny box hugging a randomly chosen image edge."""
    w = rng.uniform(0.01, 0.05)
    h = rng.uniform(0.01, 0.05)
    edge = int(rng.integers(0, 4))
    along = rng.uniform(0.05, 0.95)
    offset = rng.uniform(0.0, 0.01)
    if edge == 0:  # left
        cx, cy = w / 2 + offset, along
    elif edge == 1:  # right
        cx, cy = 1.0 - w / 2 - offset, along
    elif edge == 2:  # top
        cx, cy = along, h / 2 + offset
    else:  # bottom
        cx, cy = along, 1.0 - h / 2 - offset
    return Box(cx, cy, w, h)


def generate(cfg: SynthConfig) -> SynthResult:
    """Build (dump, dataset, planted roles), fully determined by cfg.seed."""
    rng = np.random.default_rng(cfg.seed)
    q_total = cfg.queries_per_image
    n_known = int(round(q_total * cfg.known_fraction))
    n_unknown = int(round(q_total * cfg.unknown_fraction))
    n_background = q_total - n_known - n_unknown
    n_edge = int(round(n_background * cfg.edge_artifact_fraction))

    records = []
    ground_truths: dict[str, list[GroundTruth]] = {}
    images = []
    planted: list[list[str]] = []

    for img_index in range(cfg.n_images):
        meta = ImageMeta(
            image_id=f"synth_{img_index:04d}",
            width=cfg.image_width,
            height=cfg.image_height,
        )
        queries: list[QueryOutput] = []
        roles: list[str] = []
        gts: list[GroundTruth] = []

        def add_object(known: bool):
            bands = cfg.known_bands if known else cfg.unknown_bands
            gt_box, q_box = _object_boxes(rng, cfg.box_jitter)
            class_id = int(rng.integers(1, cfg.n_known_classes + 1)) if known else None
            gts.append(GroundTruth(box=gt_box, class_id=class_id))
            conf = rng.uniform(*bands.conf)
            queries.append(
                QueryOutput(
                    feat=_feat_with_nan(rng, cfg.feat_dim, rng.uniform(*bands.nan)),
                    cls=_cls_with_max(
                        rng, cfg.n_known_classes, conf,
                        argmax_index=None if class_id is None else class_id - 1,
                    ),
                    box=q_box,
                )
            )
            roles.append("known" if known else "unknown")

        for _ in range(n_known):
            add_object(known=True)
        for _ in range(n_unknown):
            add_object(known=False)
        for bi in range(n_background):
            is_edge = bi < n_edge
            bands = cfg.edge_bands if is_edge else cfg.background_bands
            queries.append(
                QueryOutput(
                    feat=_feat_with_nan(rng, cfg.feat_dim, rng.uniform(*bands.nan)),
                    cls=_cls_with_max(rng, cfg.n_known_classes, rng.uniform(*bands.conf)),
                    box=_edge_box(rng) if is_edge else _background_box(rng),
                )
            )
            roles.append("edge" if is_edge else "background")

        perm = rng.permutation(q_total)
        queries = [queries[i] for i in perm]
        roles = [roles[i] for i in perm]

        records.append(DumpRecord(meta=meta, queries=tuple(queries)))
        ground_truths[meta.image_id] = gts
        images.append(meta)
        planted.append(roles)

    dump = FeatureDump.from_records(records)
    dataset = AnnotatedDataset(
        images=images,
        ground_truths=ground_truths,
        known_categories={
            c: f"class_{c}" for c in range(1, cfg.n_known_classes + 1)
        },
    )
    return SynthResult(dump=dump, dataset=dataset, planted_roles=planted)
