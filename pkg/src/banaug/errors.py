"""Exception hierarchy shared across the pipeline."""


class PipelineError(Exception):
    """Base class for all errors raised by this package."""


class SchemaError(PipelineError):
    """A file or config does not have the promised shape (missing column, bad key)."""


class RowError(PipelineError):
    """A single input row is unusable; carries the 1-based CSV line number."""

    def __init__(self, message: str, line: int | None = None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


class ValidationError(PipelineError):
    """Data-level invariant broken (duplicate ids, dangling parent links, ...)."""


class ParameterError(PipelineError):
    """An argument violates an operation's precondition."""


class ProvenanceError(PipelineError):
    """A synthetic article showed up where only originals are allowed."""


class DegenerateInputError(PipelineError):
    """Numerically meaningless input (zero vector, empty text)."""


class ProviderError(PipelineError):
    """A generation or embedding provider failed after retries."""


class CoverageError(PipelineError):
    """Predictions do not cover the registered test set exactly once."""


class IntegrityError(PipelineError):
    """Cross-stage contract breach: test-set firewall or mutated artifacts."""


class PlanError(PipelineError):
    """An augmented corpus misses its composition contract beyond tolerance."""


class TrainingError(PipelineError):
    """The classifier cannot be fit on the given corpus."""


class CacheLockError(PipelineError):
    """Another process holds the cache's advisory lock."""
