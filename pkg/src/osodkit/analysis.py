"""Score-distribution analysis: per-role KDE curves and pairwise
Wasserstein-1 separations for confidence, NAN, and objectness.

Roles come from the same greedy matcher used for training labels, with the
known/unknown distinction retained: a query matched to known ground truth
is Known, matched to unknown ground truth is Unknown, everything else is
Background. W1 is always computed from raw samples; KDE is diagnostic
only, so separation numbers never depend on a bandwidth choice.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateSampleError, EmptySampleError
from .featurizer import featurize_queries
from .ingest import AnnotatedDataset, FeatureDump
from .labeling import match_queries
from .parallel import parallel_map

SCORES = ("confidence", "nan", "objectness")
ROLES = ("background", "known", "unknown")
ROLE_PAIRS = (("background", "known"), ("background", "unknown"), ("unknown", "known"))
KDE_GRID_SIZE = 512


def wasserstein1(a, b) -> float:
    """Exact 1-D W1 between empirical samples by the sorted-merge CDF
    method: the integral of |F_a - F_b| over the merged support."""
    a = np.sort(np.asarray(a, dtype=np.float64).ravel())
    b = np.sort(np.asarray(b, dtype=np.float64).ravel())
    if a.size == 0 or b.size == 0:
        raise EmptySampleError("both samples must be non-empty")
    merged = np.concatenate([a, b])
    merged.sort(kind="mergesort")
    deltas = np.diff(merged)
    cdf_a = np.searchsorted(a, merged[:-1], side="right") / a.size
    cdf_b = np.searchsorted(b, merged[:-1], side="right") / b.size
    return float(np.sum(np.abs(cdf_a - cdf_b) * deltas))


def silverman_bandwidth(samples: np.ndarray) -> float:
    """0.9 * min(sigma, IQR / 1.34) * n^(-1/5), sigma with ddof=1."""
    n = samples.size
    sigma = float(np.std(samples, ddof=1))
    q75, q25 = np.percentile(samples, [75.0, 25.0])
    iqr = float(q75 - q25)
    return 0.9 * min(sigma, iqr / 1.34) * n ** (-0.2)


@dataclass
class KdeCurve:
    grid: np.ndarray
    density: np.ndarray
    bandwidth: float

    def plot_columns(self) -> str:
        lines = ["# x density"]
        for x, d in zip(self.grid, self.density):
            lines.append(f"{x!r} {d!r}")
        return "\n".join(lines) + "\n"


def kde(samples, bandwidth: float | None = None) -> KdeCurve:
    """Gaussian-kernel density on a 512-point grid over
    [min - 3h, max + 3h]."""
    samples = np.asarray(samples, dtype=np.float64).ravel()
    if samples.size < 2:
        raise EmptySampleError("need at least 2 samples for a density estimate")
    if bandwidth is None:
        bandwidth = silverman_bandwidth(samples)
    if not bandwidth > 0.0:
        raise DegenerateSampleError(
            "sample has zero spread; no bandwidth can be derived"
        )
    lo = samples.min() - 3.0 * bandwidth
    hi = samples.max() + 3.0 * bandwidth
    grid = np.linspace(lo, hi, KDE_GRID_SIZE)
    z = (grid[:, None] - samples[None, :]) / bandwidth
    density = np.exp(-0.5 * z * z).sum(axis=1) / (
        samples.size * bandwidth * np.sqrt(2.0 * np.pi)
    )
    return KdeCurve(grid=grid, density=density, bandwidth=bandwidth)


@dataclass
class SeparationTable:
    """W1 per score per role pair, plus the sample counts per role."""

    distances: dict[str, dict[str, float]]
    role_counts: dict[str, int]
    curves: dict[str, dict[str, KdeCurve | None]] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "distances": self.distances,
            "role_counts": self.role_counts,
        }

    def format_table(self) -> str:
        header = f"{'score':<12} {'Bg-Kn':>8} {'Bg-Unk':>8} {'Unk-Kn':>8}"
        lines = [header, "-" * len(header)]
        for score in SCORES:
            row = self.distances[score]
            lines.append(
                f"{score:<12} {row['background-known']:>8.3f} "
                f"{row['background-unknown']:>8.3f} {row['unknown-known']:>8.3f}"
            )
        return "\n".join(lines)


def assign_roles(dump: FeatureDump, dataset: AnnotatedDataset,
                 iou_threshold: float = 0.5, workers: int = 1) -> list[list[str]]:
    """Role per query per dump record via the training-label matcher, with
    the known/unknown distinction retained."""

    def roles_for(rec):
        gts = dataset.gts_for(rec.meta.image_id)
        X = featurize_queries(rec.queries, rec.meta)
        matched = match_queries(rec.queries, gts, rec.meta, iou_threshold, X[:, 1])
        roles = []
        for qi in range(len(rec.queries)):
            gi = matched.get(qi)
            if gi is None:
                roles.append("background")
            elif gts[gi].is_known:
                roles.append("known")
            else:
                roles.append("unknown")
        return roles

    return parallel_map(roles_for, dump.records, workers)


def separation_report(dump: FeatureDump, dataset: AnnotatedDataset, model,
                      iou_threshold: float = 0.5, with_curves: bool = True,
                      workers: int = 1) -> SeparationTable:
    """Pairwise W1 separations of all three scores across all three roles.

    All queries are pooled (no top-k subset). Role pairs without samples on
    both sides get NaN-free 0.0 entries and the affected curves are None.
    """
    roles = assign_roles(dump, dataset, iou_threshold, workers)
    samples: dict[str, dict[str, list[float]]] = {
        s: {r: [] for r in ROLES} for s in SCORES
    }
    for rec, rec_roles in zip(dump.records, roles):
        if not rec.queries:
            continue
        X = featurize_queries(rec.queries, rec.meta)
        p_obj = model.predict_objectness(X)
        for qi, role in enumerate(rec_roles):
            samples["confidence"][role].append(float(X[qi, 1]))
            samples["nan"][role].append(float(X[qi, 0]))
            samples["objectness"][role].append(float(p_obj[qi]))

    distances: dict[str, dict[str, float]] = {}
    curves: dict[str, dict[str, KdeCurve | None]] = {}
    for score in SCORES:
        distances[score] = {}
        for a, b in ROLE_PAIRS:
            sa, sb = samples[score][a], samples[score][b]
            key = f"{a}-{b}"
            distances[score][key] = wasserstein1(sa, sb) if sa and sb else 0.0
        if with_curves:
            curves[score] = {}
            for role in ROLES:
                vals = np.asarray(samples[score][role])
                try:
                    curves[score][role] = kde(vals)
                except (EmptySampleError, DegenerateSampleError):
                    curves[score][role] = None

    return SeparationTable(
        distances=distances,
        role_counts={r: len(samples["confidence"][r]) for r in ROLES},
        curves=curves,
    )
