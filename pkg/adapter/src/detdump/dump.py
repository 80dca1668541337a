"""Run images through a frozen detector checkpoint and write a feature dump.

The checkpoint is a TorchScript archive whose forward takes a normalized
image batch [B, 3, H, W] and returns either

    {"hidden": [B, Q, d], "logits": [B, Q, C], "boxes": [B, Q, 4]}
    (optionally also "hidden_pre_norm": [B, Q, d])

or a (hidden, logits, boxes) tuple. `hidden` is the last decoder layer per
query as the checkpoint exposes it; `boxes` are center-normalized cxcywh.
A reference detector is bridged by scripting a thin wrapper module that
returns these tensors; the adapter itself performs zero filtering or
top-k, so every downstream decision stays out of this package.

Per-class confidences are the elementwise logistic of the raw class
logits (the detector trains with per-class logistic targets); this
transform, and whether the captured tensor is pre- or post-final-
normalization, are recorded in a metadata sidecar (<out>.meta.json) so the
dump file itself stays bit-compatible with the downstream loader.
"""

from __future__ import annotations

import json
import logging
import os
from dataclasses import dataclass

import numpy as np
import torch
from PIL import Image, UnidentifiedImageError

from .errors import CheckpointError, ImageDecodeError

log = logging.getLogger("detdump")

IMAGE_EXTENSIONS = {".jpg", ".jpeg", ".png", ".bmp", ".webp"}

# ImageNet statistics, the convention the reference checkpoints train with.
PIXEL_MEAN = np.array([0.485, 0.456, 0.406], dtype=np.float32)
PIXEL_STD = np.array([0.229, 0.224, 0.225], dtype=np.float32)

CAPTURE_DEFAULT = "hidden"
CAPTURE_PRE_NORM = "hidden_pre_norm"


@dataclass(frozen=True)
class AdapterConfig:
    checkpoint: str
    image_dir: str
    out_path: str
    device: str = "cpu"
    queries: int | None = None   # expected Q; validated when set
    classes: int | None = None   # expected C; validated when set
    capture: str = CAPTURE_DEFAULT
    image_size: int = 800        # shorter-side target
    max_size: int = 1333         # longer-side cap

    def __post_init__(self):
        if self.capture not in (CAPTURE_DEFAULT, CAPTURE_PRE_NORM):
            raise ValueError(f"capture must be one of "
                             f"{(CAPTURE_DEFAULT, CAPTURE_PRE_NORM)!r}")


def load_checkpoint(path: str, device: str) -> torch.jit.ScriptModule:
    if not os.path.exists(path):
        raise CheckpointError(f"checkpoint {path!r} does not exist")
    try:
        model = torch.jit.load(path, map_location=device)
    except Exception as exc:  # torch raises a zoo of types here
        raise CheckpointError(f"cannot load checkpoint {path!r}: {exc}") from exc
    model.eval()
    return model


def list_images(image_dir: str) -> list[str]:
    if not os.path.isdir(image_dir):
        raise ImageDecodeError(f"image directory {image_dir!r} does not exist")
    names = [
        name for name in sorted(os.listdir(image_dir))
        if os.path.splitext(name)[1].lower() in IMAGE_EXTENSIONS
    ]
    return [os.path.join(image_dir, name) for name in names]


def load_image(path: str) -> tuple[Image.Image, int, int]:
    try:
        img = Image.open(path)
        img.load()
    except (UnidentifiedImageError, OSError) as exc:
        raise ImageDecodeError(f"cannot decode image {path!r}: {exc}") from exc
    width, height = img.size
    return img.convert("RGB"), width, height


def preprocess(img: Image.Image, image_size: int, max_size: int) -> torch.Tensor:
    """Resize (shorter side to image_size, longer side capped) and
    normalize; returns [1, 3, H, W]."""
    w, h = img.size
    scale = image_size / min(w, h)
    if scale * max(w, h) > max_size:
        scale = max_size / max(w, h)
    new_w = max(1, int(round(w * scale)))
    new_h = max(1, int(round(h * scale)))
    img = img.resize((new_w, new_h), Image.BILINEAR)
    arr = np.asarray(img, dtype=np.float32) / 255.0
    arr = (arr - PIXEL_MEAN) / PIXEL_STD
    return torch.from_numpy(arr.transpose(2, 0, 1)).unsqueeze(0)


def run_model(model, batch: torch.Tensor, capture: str
              ) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
    try:
        out = model(batch)
    except Exception as exc:
        raise CheckpointError(f"checkpoint forward failed: {exc}") from exc
    if isinstance(out, dict):
        missing = {"hidden", "logits", "boxes"} - set(out.keys())
        if missing:
            raise CheckpointError(f"checkpoint output lacks keys {sorted(missing)}")
        if capture == CAPTURE_PRE_NORM:
            if CAPTURE_PRE_NORM not in out:
                raise CheckpointError(
                    "capture=hidden_pre_norm requested but the checkpoint "
                    "does not expose that tensor"
                )
            hidden = out[CAPTURE_PRE_NORM]
        else:
            hidden = out["hidden"]
        logits, boxes = out["logits"], out["boxes"]
    elif isinstance(out, (tuple, list)) and len(out) == 3:
        if capture == CAPTURE_PRE_NORM:
            raise CheckpointError(
                "capture=hidden_pre_norm requires a dict-output checkpoint"
            )
        hidden, logits, boxes = out
    else:
        raise CheckpointError(
            "checkpoint output must be a dict with hidden/logits/boxes or a "
            "3-tuple"
        )
    for name, t, last in (("hidden", hidden, None), ("logits", logits, None),
                          ("boxes", boxes, 4)):
        if t.dim() != 3:
            raise CheckpointError(f"{name} must be [B, Q, *], got {tuple(t.shape)}")
        if last is not None and t.shape[2] != last:
            raise CheckpointError(f"{name} must have size 4 in the last axis")
    if not (hidden.shape[:2] == logits.shape[:2] == boxes.shape[:2]):
        raise CheckpointError("hidden/logits/boxes disagree on [B, Q]")
    return hidden, logits, boxes


def dump_features(cfg: AdapterConfig) -> dict:
    """Write one dump line per image; returns the metadata that was also
    written to the sidecar."""
    model = load_checkpoint(cfg.checkpoint, cfg.device)
    paths = list_images(cfg.image_dir)
    if not paths:
        log.warning("image directory %r contains no images; writing an "
                    "empty dump", cfg.image_dir)

    feat_dim = None
    n_classes = None
    n_queries = None
    with open(cfg.out_path, "w", encoding="utf-8") as fh:
        for path in paths:
            img, width, height = load_image(path)
            batch = preprocess(img, cfg.image_size, cfg.max_size).to(cfg.device)
            with torch.no_grad():
                hidden, logits, boxes = run_model(model, batch, cfg.capture)
            hidden = hidden[0].cpu().numpy()
            conf = torch.sigmoid(logits[0]).cpu().numpy()
            boxes = boxes[0].clamp(0.0, 1.0).cpu().numpy()

            q, d = hidden.shape
            c = conf.shape[1]
            if cfg.queries is not None and q != cfg.queries:
                raise CheckpointError(f"expected {cfg.queries} queries, got {q}")
            if cfg.classes is not None and c != cfg.classes:
                raise CheckpointError(f"expected {cfg.classes} classes, got {c}")
            if feat_dim is None:
                feat_dim, n_classes, n_queries = d, c, q
            elif (d, c, q) != (feat_dim, n_classes, n_queries):
                raise CheckpointError(
                    f"checkpoint produced inconsistent shapes across images: "
                    f"({d}, {c}, {q}) vs ({feat_dim}, {n_classes}, {n_queries})"
                )

            record = {
                "image_id": os.path.splitext(os.path.basename(path))[0],
                "width": width,
                "height": height,
                "queries": [
                    {
                        "feat": [float(v) for v in hidden[k]],
                        "cls": [float(v) for v in conf[k]],
                        "box": [float(v) for v in boxes[k]],
                    }
                    for k in range(q)
                ],
            }
            fh.write(json.dumps(record, allow_nan=False))
            fh.write("\n")

    meta = {
        "format_version": 1,
        "checkpoint": os.path.basename(cfg.checkpoint),
        "capture_tensor": cfg.capture,
        "confidence_transform": "sigmoid",
        "device": cfg.device,
        "image_count": len(paths),
        "queries": n_queries,
        "classes": n_classes,
        "feat_dim": feat_dim,
        "image_size": cfg.image_size,
        "max_size": cfg.max_size,
    }
    with open(cfg.out_path + ".meta.json", "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2)
    return meta
