"""precog: pre-training coverage measures for text datasets.

Scores examples with a masked-language-model backend (precog), the model
vocabulary (lexcov), and normalized length, then correlates the measures
with classifier correctness through binned accuracy histograms.
"""

__version__ = "0.1.0"

from .analytics import (
    Bin,
    CorrelationReport,
    CoverageCurve,
    IntervalSplit,
    bin_examples,
    correlate_measure,
    coverage_curve,
    interval_split,
    pearson,
    weighted_task_aggregate,
)
from .backends import (
    CachedBackend,
    CacheOnlyBackend,
    MaskedVariant,
    MockBackend,
    PredictionCache,
    RemoteBackend,
    TopKPrediction,
    make_masked_variants,
    mock_backend_from_corpus,
)
from .ingestion import Example, PredictionRecord, TaskSchema, load_dataset, load_predictions
from .measures import (
    DatasetLengthStats,
    MeasureScore,
    lexcov,
    length_measure,
    length_stats,
    precog,
)
from .tokenizer import (
    COMPILED_KERNELS,
    TokenSequence,
    Vocabulary,
    load_vocabulary,
    tokenize,
    word_split,
)

__all__ = [
    "__version__",
    "Bin", "CorrelationReport", "CoverageCurve", "IntervalSplit",
    "bin_examples", "correlate_measure", "coverage_curve", "interval_split",
    "pearson", "weighted_task_aggregate",
    "CachedBackend", "CacheOnlyBackend", "MaskedVariant", "MockBackend",
    "PredictionCache", "RemoteBackend", "TopKPrediction",
    "make_masked_variants", "mock_backend_from_corpus",
    "Example", "PredictionRecord", "TaskSchema", "load_dataset",
    "load_predictions",
    "DatasetLengthStats", "MeasureScore", "lexcov", "length_measure",
    "length_stats", "precog",
    "COMPILED_KERNELS", "TokenSequence", "Vocabulary", "load_vocabulary",
    "tokenize", "word_split",
]
