"""Exception hierarchy for the precog toolkit."""


class PrecogError(Exception):
    """Base class for all toolkit errors."""


class VocabularyError(PrecogError):
    """Vocabulary file is missing, malformed, or lacks a special token."""


class TokenizationError(PrecogError):
    """Input text cannot be tokenized (e.g. empty first segment)."""


class UndefinedMeasureError(PrecogError):
    """A measure has no defined value for this input (T = 0, no words)."""


class InconsistentStatsError(PrecogError):
    """A sequence length falls outside the dataset stats it was scored with."""


class BackendError(PrecogError):
    """A prediction backend failed for one masked position.

    Carries the example id and masked index so long batch runs can report
    exactly which example failed.
    """

    def __init__(self, message: str, example_id: str | None = None,
                 masked_index: int | None = None):
        self.example_id = example_id
        self.masked_index = masked_index
        where = []
        if example_id is not None:
            where.append(f"example={example_id}")
        if masked_index is not None:
            where.append(f"masked_index={masked_index}")
        suffix = f" [{', '.join(where)}]" if where else ""
        super().__init__(message + suffix)


class CacheMissError(BackendError):
    """Cache-only backend was asked for a prediction it does not hold."""


class IngestionError(PrecogError):
    """Dataset or prediction file is malformed or inconsistent."""


class AnalyticsError(PrecogError):
    """Binning or aggregation input violates a precondition."""


class UndefinedCorrelationError(AnalyticsError):
    """Pearson correlation is undefined (too few points or zero variance)."""


class ConfigError(PrecogError):
    """Run configuration is invalid. CLI exits with code 2 on this."""
