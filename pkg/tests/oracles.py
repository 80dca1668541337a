"""Independent reference implementations used to check the package.

Everything here is deliberately naive (loops, enumeration, replication)
and written against the documented behavior, not against the package
internals, so agreement is meaningful.
"""

from __future__ import annotations

import itertools
import math


def naive_nan_score(z) -> float:
    """l1 / (count of strictly positive components), 0 when none active."""
    total = 0.0
    active = 0
    for v in z:
        total += abs(v)
        if v > 0:
            active += 1
    if active == 0:
        return 0.0
    return total / active


def corner_iou(a, b) -> float:
    iw = min(a[2], b[2]) - max(a[0], b[0])
    ih = min(a[3], b[3]) - max(a[1], b[1])
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    union = (a[2] - a[0]) * (a[3] - a[1]) + (b[2] - b[0]) * (b[3] - b[1]) - inter
    if union <= 0:
        return 0.0
    return inter / union


def lexicographic_match(iou_matrix, threshold):
    """Exhaustive one-to-one assignment maximizing the IoU sequence of rows
    in processing order (unmatched rows score -1). The row-priority greedy
    rule produces exactly this assignment."""
    n_rows = len(iou_matrix)
    n_cols = len(iou_matrix[0]) if n_rows else 0
    best_vec = None
    best_assign = None

    def recurse(r, used, vec, assign):
        nonlocal best_vec, best_assign
        if r == n_rows:
            tup = tuple(vec)
            if best_vec is None or tup > best_vec:
                best_vec = tup
                best_assign = list(assign)
            return
        recurse(r + 1, used, vec + [-1.0], assign + [None])
        for c in range(n_cols):
            if c not in used and iou_matrix[r][c] >= threshold:
                recurse(r + 1, used | {c}, vec + [iou_matrix[r][c]], assign + [c])

    recurse(0, frozenset(), [], [])
    return best_assign


def brute_force_ap(dets, gts_by_image, iou_thr) -> float:
    """AP for one class: dets are (score, image_id, corners) triples.

    Re-implements confidence-descending greedy matching and 101-point
    interpolation with plain loops and its own IoU.
    """
    n_gt = sum(len(v) for v in gts_by_image.values())
    if n_gt == 0:
        raise ValueError("no ground truth")
    order = sorted(range(len(dets)), key=lambda i: (-dets[i][0], i))
    used = {img: [False] * len(boxes) for img, boxes in gts_by_image.items()}
    tp_flags = []
    for i in order:
        _, image_id, corners = dets[i]
        best_j = -1
        best_v = 0.0
        for j, gt in enumerate(gts_by_image.get(image_id, [])):
            if used[image_id][j]:
                continue
            v = corner_iou(corners, gt)
            if v >= iou_thr and v > best_v:
                best_v = v
                best_j = j
        if best_j >= 0:
            used[image_id][best_j] = True
            tp_flags.append(True)
        else:
            tp_flags.append(False)

    precisions = []
    recalls = []
    tp = 0
    for k, flag in enumerate(tp_flags, start=1):
        tp += flag
        precisions.append(tp / k)
        recalls.append(tp / n_gt)

    interp = []
    for step in range(101):
        r = step / 100
        best = 0.0
        for p, rec in zip(precisions, recalls):
            if rec >= r and p > best:
                best = p
        interp.append(best)
    return math.fsum(interp) / 101


def brute_force_recall(dets, gts_by_image, iou_thr) -> float:
    n_gt = sum(len(v) for v in gts_by_image.values())
    order = sorted(range(len(dets)), key=lambda i: (-dets[i][0], i))
    used = {img: [False] * len(boxes) for img, boxes in gts_by_image.items()}
    tp = 0
    for i in order:
        _, image_id, corners = dets[i]
        best_j = -1
        best_v = 0.0
        for j, gt in enumerate(gts_by_image.get(image_id, [])):
            if used[image_id][j]:
                continue
            v = corner_iou(corners, gt)
            if v >= iou_thr and v > best_v:
                best_v = v
                best_j = j
        if best_j >= 0:
            used[image_id][best_j] = True
            tp += 1
    return tp / n_gt


def transport_w1(a, b) -> float:
    """Quadratic-cost transport oracle for 1-D empirical W1.

    Replicates both samples to a common size (atoms get equal mass), then
    takes the minimum mean |a_i - b_sigma(i)| over assignments: exhaustive
    over permutations when the replicated size allows it, sorted pairing
    otherwise (optimal in 1-D; test_analysis verifies the two agree on
    every size where enumeration is feasible).
    """
    a = list(a)
    b = list(b)
    size = math.lcm(len(a), len(b))
    ra = sorted(a * (size // len(a)))
    rb = sorted(b * (size // len(b)))
    if size <= 7:
        best = math.inf
        for perm in itertools.permutations(range(size)):
            cost = sum(abs(ra[i] - rb[perm[i]]) for i in range(size)) / size
            if cost < best:
                best = cost
        return best
    return sum(abs(x - y) for x, y in zip(ra, rb)) / size


def exhaustive_sorted_pairing_agree(a, b) -> tuple[float, float]:
    """(exhaustive minimum, sorted pairing) for equal-size samples."""
    ra = sorted(a)
    rb = sorted(b)
    n = len(ra)
    best = math.inf
    for perm in itertools.permutations(range(n)):
        cost = sum(abs(ra[i] - rb[perm[i]]) for i in range(n)) / n
        if cost < best:
            best = cost
    paired = sum(abs(x - y) for x, y in zip(ra, rb)) / n
    return best, paired


def combined_metric_brute(map_vals, ru_vals):
    """Direct transcription of the combined threshold metric."""
    m_max = max(map_vals)
    r_max = max(ru_vals)
    out = []
    for m, r in zip(map_vals, ru_vals):
        s = 0.0
        if m_max > 0:
            s += m / m_max
        if r_max > 0:
            s += r / r_max
        out.append(s)
    return out


def argmax_smallest(grid, values) -> float:
    best_i = 0
    for i in range(1, len(values)):
        if values[i] > values[best_i]:
            best_i = i
    return grid[best_i]
