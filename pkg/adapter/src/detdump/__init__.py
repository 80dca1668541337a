"""Detector-to-dump adapter: capture last-decoder-layer features, class
confidences, and boxes from a frozen checkpoint."""

from .dump import AdapterConfig, dump_features
from .errors import AdapterError, CheckpointError, ImageDecodeError

__version__ = "0.1.0"
