"""Exception hierarchy shared across the pipeline."""


class DermsoapError(Exception):
    """Base class for all pipeline errors."""


class ParseError(DermsoapError):
    """Raised when text cannot be interpreted as a SOAP note."""


class SchemaError(DermsoapError):
    """Raised when an input file is missing required columns or keys."""


class ConfigError(DermsoapError):
    """Raised for invalid configuration values or unusable paths."""


class ProviderError(DermsoapError):
    """Raised when an embedding provider fails or returns malformed data."""


class BackendError(DermsoapError):
    """Raised when a generation backend fails.

    ``kind`` distinguishes transport failures, non-success statuses, and
    empty completions so callers can decide which failures are retryable.
    """

    def __init__(self, message: str, kind: str = "transport"):
        super().__init__(message)
        self.kind = kind


class GenerationFailed(DermsoapError):
    """Raised when no attempt produced a recognizable SOAP note."""


class PipelineAborted(DermsoapError):
    """Raised when the per-record failure rate exceeds the configured threshold."""


class DegenerateInput(DermsoapError):
    """Raised when grouped samples violate the ANOVA preconditions."""


class DomainError(DermsoapError):
    """Raised for out-of-domain arguments to the special functions."""


class BankError(DermsoapError):
    """Raised for malformed descriptor banks or missing conditions."""


class JudgeParseError(DermsoapError):
    """Raised when a judge response lacks a parseable score for a criterion."""
