"""Pretest-mode confidence-threshold selection.

Sweeps the threshold grid, evaluates known mAP and unknown recall at each
candidate through the same inference pipeline used at test time (top-k
rule included), and picks the argmax of the combined metric

    S_i = map_i / max_j(map_j) + ru_i / max_j(ru_j).

A metric vector that is identically zero contributes 0 to every S_i and
raises a warning flag instead of dividing by zero. Ties resolve to the
smallest threshold; any fixed rule would do, determinism is the point.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import NoKnownGTError, NoUnknownGTError
from .inference import InferenceConfig, infer_dump
from .metrics import map_known, unknown_recall_and_ap

# Fixed 21-point grid; override only via an explicit argument.
DEFAULT_GRID = tuple(i / 20 for i in range(21))


@dataclass
class CalibrationCurve:
    thresholds: tuple[float, ...]
    map_known: tuple[float, ...]
    recall_unknown: tuple[float, ...]
    combined: tuple[float, ...]
    chosen: float
    map_all_zero: bool = False
    recall_all_zero: bool = False

    def to_dict(self) -> dict:
        return {
            "thresholds": list(self.thresholds),
            "map_known": list(self.map_known),
            "recall_unknown": list(self.recall_unknown),
            "combined": list(self.combined),
            "chosen": self.chosen,
            "map_all_zero": self.map_all_zero,
            "recall_all_zero": self.recall_all_zero,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CalibrationCurve":
        return cls(
            thresholds=tuple(float(v) for v in d["thresholds"]),
            map_known=tuple(float(v) for v in d["map_known"]),
            recall_unknown=tuple(float(v) for v in d["recall_unknown"]),
            combined=tuple(float(v) for v in d["combined"]),
            chosen=float(d["chosen"]),
            map_all_zero=bool(d["map_all_zero"]),
            recall_all_zero=bool(d["recall_all_zero"]),
        )

    def plot_columns(self) -> str:
        """Plain columnar text (threshold, mAP, R_u, S) for chart tools."""
        lines = ["# threshold map_known recall_unknown combined"]
        for row in zip(self.thresholds, self.map_known, self.recall_unknown, self.combined):
            lines.append(" ".join(repr(v) for v in row))
        return "\n".join(lines) + "\n"


def combined_metric(map_vals, ru_vals) -> np.ndarray:
    """S_i per threshold; an all-zero vector's term is 0 everywhere."""
    map_vals = np.asarray(map_vals, dtype=np.float64)
    ru_vals = np.asarray(ru_vals, dtype=np.float64)
    if map_vals.shape != ru_vals.shape or map_vals.ndim != 1 or map_vals.size == 0:
        raise ValueError(
            f"metric vectors must be equal-length and non-empty, "
            f"got {map_vals.shape} and {ru_vals.shape}"
        )
    out = np.zeros(map_vals.size)
    map_max = map_vals.max()
    ru_max = ru_vals.max()
    if map_max > 0.0:
        out += map_vals / map_max
    else:
        warnings.warn("known-mAP vector is identically zero; term dropped from S")
    if ru_max > 0.0:
        out += ru_vals / ru_max
    else:
        warnings.warn("unknown-recall vector is identically zero; term dropped from S")
    return out


def choose_threshold(grid, map_vals, ru_vals) -> tuple[float, np.ndarray]:
    """Combined-metric argmax over the grid; ties pick the smallest
    threshold. Curves need not be monotone."""
    grid = tuple(float(g) for g in grid)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        combined = combined_metric(map_vals, ru_vals)
    if len(grid) != combined.size:
        raise ValueError("grid and metric vectors must have equal length")
    return grid[int(np.argmax(combined))], combined


def calibrate(pretest_dump, pretest_annotations, model,
              grid=DEFAULT_GRID, top_k: int | None = None,
              class_ids=None, workers: int = 1) -> CalibrationCurve:
    """Sweep the grid on pretest data and select the combined-metric argmax.

    Curves need not be monotone; the argmax is taken over the raw values
    with ties going to the smallest threshold.
    """
    if not pretest_dump.records:
        raise ValueError("pretest dump is empty")
    grid = tuple(float(g) for g in grid)
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("threshold grid must be strictly increasing")

    map_vals = []
    ru_vals = []
    for eps in grid:
        kwargs = {"epsilon_star": eps}
        if top_k is not None:
            kwargs["top_k"] = top_k
        if class_ids is not None:
            kwargs["class_ids"] = tuple(class_ids)
        preds = infer_dump(pretest_dump, model, InferenceConfig(**kwargs), workers)
        try:
            m, _, _ = map_known(preds, pretest_annotations)
        except NoKnownGTError:
            m = 0.0
        try:
            r, _, _ = unknown_recall_and_ap(preds, pretest_annotations)
        except NoUnknownGTError:
            r = 0.0
        map_vals.append(m)
        ru_vals.append(r)

    map_arr = np.array(map_vals)
    ru_arr = np.array(ru_vals)
    chosen, combined = choose_threshold(grid, map_arr, ru_arr)
    return CalibrationCurve(
        thresholds=grid,
        map_known=tuple(map_vals),
        recall_unknown=tuple(ru_vals),
        combined=tuple(float(v) for v in combined),
        chosen=chosen,
        map_all_zero=bool(map_arr.max() <= 0.0),
        recall_all_zero=bool(ru_arr.max() <= 0.0),
    )
