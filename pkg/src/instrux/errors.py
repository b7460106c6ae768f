"""Exception types shared across the toolkit."""


class InstruxError(Exception):
    """Base class for all toolkit errors."""


class ParseError(InstruxError):
    """Raised when a file cannot be decoded or parsed as JSON."""

    def __init__(self, message: str, byte_offset: int | None = None):
        if byte_offset is not None:
            message = f"{message} (byte offset {byte_offset})"
        super().__init__(message)
        self.byte_offset = byte_offset


class SchemaError(InstruxError):
    """A required field is missing or has the wrong shape."""

    def __init__(self, field: str, message: str | None = None):
        super().__init__(message or f"missing or invalid field: {field!r}")
        self.field = field


class ValidationError(InstruxError):
    """Parsed data violates a documented invariant."""


class GenerationError(InstruxError):
    """Variant generation produced no usable output."""


class SimilarityError(InstruxError):
    """A similarity score is undefined for the given inputs."""


class InsufficientMembersError(InstruxError):
    """A family-level statistic needs at least two members."""


class CoverageError(InstruxError):
    """Two reports or datasets do not cover the same identifiers."""


class FitError(InstruxError):
    """The baseline learner cannot be fitted on the given mixture."""
