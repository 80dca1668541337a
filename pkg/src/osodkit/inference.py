"""Final open-set decisions per query: known / unknown / background.

Queries are ranked by objectness; the top-k ranked become foreground
candidates and everything else is background. A foreground candidate with
confidence at or above the calibrated threshold is a known detection of
its argmax class, otherwise it is an unknown detection carrying its
objectness as the reported confidence (the only ranking score available
for unknowns). No non-maximum suppression: the upstream set-prediction
detector is NMS-free.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .datamodel import BACKGROUND, KNOWN, UNKNOWN, Detection
from .errors import LengthMismatchError

DEFAULT_TOP_K = 100


@dataclass(frozen=True)
class InferenceConfig:
    epsilon_star: float
    top_k: int = DEFAULT_TOP_K
    # Maps cls-vector position to category id; ids 1..C when omitted.
    class_ids: tuple[int, ...] | None = None

    def __post_init__(self):
        if not 0.0 <= self.epsilon_star <= 1.0:
            raise ValueError(f"epsilon_star {self.epsilon_star} outside [0, 1]")
        if self.top_k < 1:
            raise ValueError(f"top_k must be >= 1, got {self.top_k}")

    def class_id_for(self, index: int) -> int:
        if self.class_ids is None:
            return index + 1
        return self.class_ids[index]


def decide(queries, features, p_obj, cfg: InferenceConfig) -> list[Detection]:
    """Decisions for every query of one image, in query order.

    Ranking is by objectness descending, ties by confidence descending and
    then query index, so any strictly increasing transform of the
    objectness scores yields identical decisions.
    """
    if not (len(queries) == len(features) == len(p_obj)):
        raise LengthMismatchError(
            f"queries/features/p_obj lengths differ: "
            f"{len(queries)}/{len(features)}/{len(p_obj)}"
        )
    n = len(queries)
    p_obj = np.asarray(p_obj, dtype=np.float64)
    conf = np.array([f.p_conf for f in features])
    order = sorted(range(n), key=lambda i: (-p_obj[i], -conf[i], i))
    foreground = set(order[: cfg.top_k])

    detections = []
    for i, q in enumerate(queries):
        if i not in foreground:
            detections.append(
                Detection(
                    box=q.box,
                    decision=BACKGROUND,
                    class_id=None,
                    confidence=float(p_obj[i]),
                    objectness=float(p_obj[i]),
                )
            )
        elif conf[i] >= cfg.epsilon_star:
            detections.append(
                Detection(
                    box=q.box,
                    decision=KNOWN,
                    class_id=cfg.class_id_for(int(np.argmax(q.cls))),
                    confidence=float(conf[i]),
                    objectness=float(p_obj[i]),
                )
            )
        else:
            detections.append(
                Detection(
                    box=q.box,
                    decision=UNKNOWN,
                    class_id=None,
                    confidence=float(p_obj[i]),
                    objectness=float(p_obj[i]),
                )
            )
    return detections


def infer_dump(dump, model, cfg: InferenceConfig, workers: int = 1):
    """Run the decision rule over a whole feature dump.

    Returns image_id -> detections in dump order. Pure per image, so the
    worker count does not affect results.
    """
    from .featurizer import ObjectnessFeatures, featurize_queries
    from .parallel import parallel_map

    def run_record(rec):
        X = featurize_queries(rec.queries, rec.meta)
        features = [ObjectnessFeatures(*row) for row in X]
        p_obj = model.predict_objectness(X) if len(features) else np.zeros(0)
        return rec.meta.image_id, decide(rec.queries, features, p_obj, cfg)

    return dict(parallel_map(run_record, dump.records, workers))
