"""Negative-aware norm of hidden-layer vectors.

The score is the l1 norm divided by the number of activated (strictly
positive) components. Components equal to zero count as inactive. A vector
with no activated components scores 0: deactivation reads as minimally
object-like, which keeps the score total and finite for raw decoder
outputs that are not post-ReLU.
"""

from __future__ import annotations

import numpy as np

from .errors import EmptyVectorError


def _as_vector(z) -> np.ndarray:
    arr = np.asarray(z, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError(f"expected a 1-d vector, got shape {arr.shape}")
    if arr.size == 0:
        raise EmptyVectorError("empty vector")
    return arr


def l1_norm(z) -> float:
    """Sum of absolute values of the components."""
    return float(np.abs(_as_vector(z)).sum())


def active_count(z) -> int:
    """Number of strictly positive components; z_i <= 0 counts as inactive."""
    return int((_as_vector(z) > 0.0).sum())


def nan_score(z) -> float:
    """l1_norm(z) / active_count(z), or 0.0 when no component is active."""
    arr = _as_vector(z)
    active = int((arr > 0.0).sum())
    if active == 0:
        return 0.0
    return float(np.abs(arr).sum()) / active


def nan_scores(Z) -> np.ndarray:
    """Row-wise nan_score of an (n, d) matrix."""
    arr = np.asarray(Z, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"expected an (n, d) matrix, got shape {arr.shape}")
    if arr.shape[1] == 0:
        raise EmptyVectorError("empty vectors")
    l1 = np.abs(arr).sum(axis=1)
    active = (arr > 0.0).sum(axis=1)
    out = np.zeros(arr.shape[0])
    nonzero = active > 0
    out[nonzero] = l1[nonzero] / active[nonzero]
    return out
