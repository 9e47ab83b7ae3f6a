"""Exception types shared across the package."""

from __future__ import annotations


class FuzzanonError(Exception):
    """Base class for all errors raised by fuzzanon."""


class SchemaMismatchError(FuzzanonError):
    """A file's columns do not match the schema it was loaded against."""

    def __init__(self, message: str, missing: list[str] | None = None,
                 unexpected: list[str] | None = None):
        super().__init__(message)
        self.missing = missing or []
        self.unexpected = unexpected or []


class DataFormatError(FuzzanonError):
    """Malformed input data: bad rows, bad schema files, bad sidecars."""


class ConfigError(FuzzanonError):
    """Invalid pipeline configuration."""


class FingerprintMismatchError(FuzzanonError):
    """Metadata sidecar does not belong to the table it was applied to."""


class PipelineStageError(FuzzanonError):
    """Failure inside a pipeline stage, tagged with the stage name."""

    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"stage {stage!r} failed: {cause}")
        self.stage = stage
        self.cause = cause
