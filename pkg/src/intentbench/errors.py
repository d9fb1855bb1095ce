"""Exception hierarchy.

Three coarse families map onto the CLI exit codes: usage problems (1),
catalog/data validation problems (2), backend/transport problems (3).
"""

from __future__ import annotations


class IntentBenchError(Exception):
    """Base class for all intent-bench errors."""

    exit_code = 1


class UsageError(IntentBenchError):
    """Bad invocation: unknown mode, malformed weights, unwritable store."""

    exit_code = 1


class ValidationError(IntentBenchError):
    """Data that fails the declared schemas or invariants."""

    exit_code = 2


class CatalogLoadError(ValidationError):
    """Catalog directory missing, unreadable, or structurally wrong."""


class SchemaError(ValidationError):
    """A document violates its schema; carries the offending id/field."""

    def __init__(self, message: str, *, doc_id: str | None = None, field: str | None = None):
        super().__init__(message)
        self.doc_id = doc_id
        self.field = field


class DuplicateIdError(ValidationError):
    """Two documents claim the same id."""


class NoMatchError(ValidationError):
    """A free-text demand matched no catalog product."""

    def __init__(self, message: str, *, categories: list[str] | None = None, regions: list[str] | None = None):
        super().__init__(message)
        self.categories = categories or []
        self.regions = regions or []


class AmbiguousMatchError(ValidationError):
    """A free-text demand matched more than one catalog product."""

    def __init__(self, message: str, *, candidates: list[str] | None = None):
        super().__init__(message)
        self.candidates = candidates or []


class ExemplarError(ValidationError):
    """Prompt construction got too few or unusable exemplars."""


class LeakageError(ValidationError):
    """An exemplar would leak the target order into the prompt."""


class AggregationError(ValidationError):
    """Scoring could not aggregate a run store."""


class AnnotationError(ValidationError):
    """Annotation store is malformed."""


class PlanError(UsageError):
    """Benchmark plan has an empty dimension or bad repetition count."""


class StoreError(UsageError):
    """Run store is missing or unwritable."""


class BackendError(IntentBenchError):
    """Transport or provider failure after retries; carries HTTP status."""

    exit_code = 3

    def __init__(self, message: str, *, status: int | None = None, attempts: int = 1):
        super().__init__(message)
        self.status = status
        self.attempts = attempts


class BackendConfigError(BackendError):
    """Backend descriptor unusable (e.g. credential env var unset)."""


class EmptyResponseError(BackendError):
    """Provider answered without any text."""
