"""Exception hierarchy shared across the toolkit."""


class ToolkitError(Exception):
    """Base class for all toolkit errors; CLI maps these to exit code 1."""


class ParseError(ToolkitError):
    """A file could not be parsed; carries the offending line number when known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class SchemaError(ToolkitError):
    """Parsed content violates a structural invariant (shape, range, version)."""


class DanglingReferenceError(ToolkitError):
    """An annotation references an image id that does not exist."""


class MissingImageError(ToolkitError):
    """Feature dump and annotations disagree on which images exist."""


class EmptyVectorError(ToolkitError):
    """An operation requiring a non-empty vector received an empty one."""


class EmptySampleError(ToolkitError):
    """A distribution operation received an empty sample."""


class DegenerateSampleError(ToolkitError):
    """A sample has zero spread, so no density bandwidth can be derived."""


class NonFiniteLossError(ToolkitError):
    """Training loss became NaN or infinite."""

    def __init__(self, epoch: int):
        self.epoch = epoch
        super().__init__(f"training loss became non-finite at epoch {epoch}")


class FeatureMismatchError(ToolkitError):
    """Input features do not match the ordering/mask recorded in a model."""


class LengthMismatchError(ToolkitError):
    """Parallel input lists have different lengths."""


class NoGroundTruthError(ToolkitError):
    """Average precision is undefined for a class without ground truth."""


class NoKnownGTError(ToolkitError):
    """The dataset contains no known-class ground truth."""


class NoUnknownGTError(ToolkitError):
    """The dataset contains no unknown ground truth."""
