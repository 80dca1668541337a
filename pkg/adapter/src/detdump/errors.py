"""Adapter error types; the CLI maps these to exit code 1."""


class AdapterError(Exception):
    pass


class CheckpointError(AdapterError):
    """Checkpoint missing, unloadable, or violating the output contract."""


class ImageDecodeError(AdapterError):
    """An image file could not be decoded. Failures abort the run; images
    are never silently skipped."""
