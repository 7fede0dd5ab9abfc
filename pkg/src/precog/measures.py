"""Per-example coverage measures: precog, lexcov, length.

Each measure value lies in [0, 1]; reports render them on a 0-100 scale.

precog masks each content token in turn and counts how often the original
token appears in the backend's top-k predictions for that position. lexcov
is the in-vocabulary fraction of the example's words. length is the token
count min-max normalized over the example's dataset. precog and length use
the WordPiece content count as T; lexcov uses the word count — both counts
travel with every score record.
"""

from dataclasses import dataclass, field

from .backends import DEFAULT_TOP_K, make_masked_variants
from .exceptions import InconsistentStatsError, UndefinedMeasureError
from .tokenizer import TokenSequence, Vocabulary

MEASURE_NAMES = ("precog", "lexcov", "length")


@dataclass(frozen=True)
class MeasureScore:
    """A named measure value in [0, 1] attached to one example."""

    example_id: str
    measure_name: str
    value: float
    detail: tuple = field(default_factory=tuple)

    def __post_init__(self):
        if self.measure_name not in MEASURE_NAMES:
            raise ValueError(f"unknown measure {self.measure_name!r}")
        if not 0.0 <= self.value <= 1.0:
            raise ValueError(f"measure value {self.value} outside [0, 1]")


@dataclass(frozen=True)
class DatasetLengthStats:
    """Min and max content length over one dataset."""

    min_len: int
    max_len: int

    def __post_init__(self):
        if self.min_len < 0 or self.min_len > self.max_len:
            raise ValueError(f"invalid length stats ({self.min_len}, {self.max_len})")


def precog(seq: TokenSequence, backend, k: int = DEFAULT_TOP_K,
           example_id: str = "", mask_token: str = "[MASK]") -> MeasureScore:
    """Fraction of content tokens whose original value appears in the
    backend's top-k predictions when that token alone is masked.

    The per-position hit list is recorded in detail. Membership is exact
    token-string equality (sequences arrive already case-normalized by the
    tokenizer). Raises UndefinedMeasureError when T = 0; backend failures
    propagate with example and position info attached.
    """
    variants = make_masked_variants(seq, mask_token=mask_token, example_id=example_id)
    if not variants:
        raise UndefinedMeasureError(f"precog undefined for T=0 (example {example_id!r})")
    hits = []
    for variant in variants:
        prediction = backend.predict_topk(variant, k)
        hits.append(variant.original_token in prediction)
    return MeasureScore(example_id=example_id, measure_name="precog",
                        value=sum(hits) / len(hits), detail=tuple(hits))


def lexcov(text_words: list[str], vocab: Vocabulary, example_id: str = "",
           set_semantics: bool = False) -> MeasureScore:
    """In-vocabulary fraction of the example's words.

    A word is out-of-vocabulary iff its case-normalized form is not a full
    (non-continuation) vocabulary entry. By default every occurrence counts;
    with set_semantics both the universe and the OOV list are distinct
    normalized words. The OOV words are recorded in detail.
    """
    if not text_words:
        raise UndefinedMeasureError(f"lexcov undefined for empty word list "
                                    f"(example {example_id!r})")
    if set_semantics:
        words = sorted({vocab.normalize(w) for w in text_words})
    else:
        words = [vocab.normalize(w) for w in text_words]
    oov = [w for w in words if not vocab.has_full_word(w)]
    value = (len(words) - len(oov)) / len(words)
    return MeasureScore(example_id=example_id, measure_name="lexcov",
                        value=value, detail=tuple(oov))


def length_stats(dataset: list[TokenSequence]) -> DatasetLengthStats:
    """Exact min and max content length over a dataset."""
    if not dataset:
        raise UndefinedMeasureError("length stats undefined for an empty dataset")
    lengths = [seq.content_length for seq in dataset]
    return DatasetLengthStats(min_len=min(lengths), max_len=max(lengths))


def length_measure(seq: TokenSequence, stats: DatasetLengthStats,
                   example_id: str = "") -> MeasureScore:
    """(T - min) / (max - min) within the sequence's dataset; 0 by
    convention when the dataset has a single length."""
    t = seq.content_length
    if not stats.min_len <= t <= stats.max_len:
        raise InconsistentStatsError(
            f"length {t} outside dataset stats [{stats.min_len}, {stats.max_len}] "
            f"(example {example_id!r})")
    if stats.max_len == stats.min_len:
        value = 0.0
    else:
        value = (t - stats.min_len) / (stats.max_len - stats.min_len)
    return MeasureScore(example_id=example_id, measure_name="length", value=value)
