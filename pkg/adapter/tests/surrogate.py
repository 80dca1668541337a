"""Scriptable stand-in detector with the same output contract as a wrapped
reference checkpoint: per-query hidden states (pre- and post-norm), class
logits, and normalized cxcywh boxes."""

from typing import Dict

import torch
import torch.nn as nn
import torch.nn.functional as F


class SurrogateDetector(nn.Module):
    def __init__(self, queries: int = 300, feat_dim: int = 256, classes: int = 80):
        super().__init__()
        self.stem = nn.Conv2d(3, 32, 7, stride=4)
        self.proj = nn.Linear(32, feat_dim)
        self.query_embed = nn.Parameter(torch.randn(queries, feat_dim) * 0.5)
        self.norm = nn.LayerNorm(feat_dim)
        self.cls_head = nn.Linear(feat_dim, classes)
        self.box_head = nn.Linear(feat_dim, 4)

    def forward(self, x: torch.Tensor) -> Dict[str, torch.Tensor]:
        pooled = F.adaptive_avg_pool2d(self.stem(x), (1, 1)).flatten(1)
        ctx = self.proj(pooled)
        pre = ctx.unsqueeze(1) + self.query_embed.unsqueeze(0)
        hidden = self.norm(pre)
        return {
            "hidden": hidden,
            "hidden_pre_norm": pre,
            "logits": self.cls_head(hidden),
            "boxes": torch.sigmoid(self.box_head(hidden)),
        }


def save_surrogate(path, queries: int = 300, feat_dim: int = 256,
                   classes: int = 80, seed: int = 0) -> None:
    torch.manual_seed(seed)
    model = SurrogateDetector(queries=queries, feat_dim=feat_dim, classes=classes)
    torch.jit.script(model.eval()).save(str(path))
