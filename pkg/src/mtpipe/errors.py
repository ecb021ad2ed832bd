"""Exception hierarchy shared across the toolkit.

Exit-code mapping for the CLI: usage/config errors exit 1, data errors
exit 2, backend errors exit 3.
"""

from __future__ import annotations


class MTPipeError(Exception):
    """Base class for all toolkit errors."""

    exit_code = 2


class UsageError(MTPipeError):
    """Bad command-line invocation."""

    exit_code = 1


class ConfigError(MTPipeError):
    """Config file cannot be parsed or contains invalid fields."""

    exit_code = 1


class DataError(MTPipeError):
    """Input data violates a format or precondition."""

    exit_code = 2


class CorpusFormatError(DataError):
    """Corpus file is not valid UTF-8 or violates the one-sentence-per-line contract."""


class ParallelMismatchError(DataError):
    """Source and target sides of a parallel corpus have different line counts."""


class SubwordModelError(DataError):
    """Subword model file is malformed or inconsistent."""


class CheckpointError(DataError):
    """Base for checkpoint format violations."""


class BadMagicError(CheckpointError):
    """Checkpoint file does not start with the expected magic bytes."""


class BadVersionError(CheckpointError):
    """Checkpoint format version is not supported."""


class TruncatedCheckpointError(CheckpointError):
    """Checkpoint file ends before the declared contents."""


class TensorShapeError(CheckpointError):
    """Declared tensor shape disagrees with the available data."""


class BackendError(MTPipeError):
    """Base for translation-backend failures."""

    exit_code = 3


class ProtocolError(BackendError):
    """Backend sent a line that does not match the wire grammar."""

    def __init__(self, message: str, line_no: int | None = None):
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)
        self.line_no = line_no


class IdMismatchError(BackendError):
    """Backend response id does not belong to any pending request."""

    def __init__(self, message: str, line_no: int | None = None):
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)
        self.line_no = line_no


class BackendTimeoutError(BackendError):
    """Backend did not answer within the configured timeout."""


class StageError(MTPipeError):
    """Wraps a failure inside a named pipeline stage."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause
        self.exit_code = getattr(cause, "exit_code", 2)
