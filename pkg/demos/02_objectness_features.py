#!/usr/bin/env python3
"""Building the 5-dim objectness feature vector for detector queries.

Each query contributes [f_nan, p_conf, s_box, d_center, d_edge]: the
hidden-layer score, the max class confidence, and three box-geometry
cues in image-size-independent units. The geometry matters because raw
hidden-layer scores also fire on tiny boxes hugging the image border;
box features let the estimator discount those.
"""

import numpy as np

from osodkit import Box, ImageMeta, QueryOutput, box_geometry, featurize
from osodkit.featurizer import FEATURE_NAMES, apply_mask, mask_without

meta = ImageMeta("street_0001", width=100, height=100)

# A centered, mid-sized box: far from every edge.
centered = Box(cx=0.5, cy=0.5, w=0.2, h=0.2)
print("centered box geometry (s_box, d_center, d_edge):")
print("  ", box_geometry(centered, meta))

# A sliver on the left border: d_edge clamps to zero.
border = Box(cx=0.02, cy=0.5, w=0.04, h=0.3)
print("border sliver geometry:")
print("  ", box_geometry(border, meta))

# Full feature vector for one query.
query = QueryOutput(
    feat=(2.0, -1.0, 0.0, 3.0),   # nan score 3.0
    cls=(0.1, 0.9),               # p_conf 0.9
    box=centered,
)
features = featurize(query, meta)
print("\nfeature vector, ordering", FEATURE_NAMES)
print("  ", features.as_vector())

# Ablations mask features by zeroing their column; models record the mask
# and apply it at prediction time too.
X = np.stack([features.as_vector() for _ in range(3)])
print("\nwith f_nan masked out:")
print(apply_mask(X, mask_without("f_nan")))
