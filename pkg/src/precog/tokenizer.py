"""Deterministic WordPiece tokenization against a user-supplied vocabulary.

Produces the token sequences every measure operates on. Tokenization is
greedy longest-match-first with "##" continuation pieces; words with no
valid decomposition become the unknown token. The hot per-word kernels live
in a compiled extension when available, with a pure-Python fallback selected
at import time (set PRECOG_PURE_PYTHON=1 to force the fallback).
"""

import logging
import os
from dataclasses import dataclass, field

from .exceptions import TokenizationError, VocabularyError

if os.environ.get("PRECOG_PURE_PYTHON"):
    from . import _kernels_py as _kernels

    COMPILED_KERNELS = False
else:
    try:
        from . import _kernels  # type: ignore[attr-defined]

        COMPILED_KERNELS = True
    except ImportError:
        from . import _kernels_py as _kernels

        COMPILED_KERNELS = False

logger = logging.getLogger(__name__)

# Positional limit of the reference model, including special tokens.
MAX_SEQUENCE_LENGTH = 512
# Words longer than this have no decomposition and become the unknown token.
MAX_WORD_CHARS = 100

CONTINUATION_PREFIX = "##"


@dataclass(frozen=True)
class SpecialTokens:
    mask: str = "[MASK]"
    unknown: str = "[UNK]"
    classifier_start: str = "[CLS]"
    separator: str = "[SEP]"

    def as_tuple(self) -> tuple[str, str, str, str]:
        return (self.mask, self.unknown, self.classifier_start, self.separator)


@dataclass(frozen=True)
class Vocabulary:
    """An ordered token vocabulary with contiguous ids in file order."""

    entries: tuple[str, ...]
    token_to_id: dict[str, int] = field(repr=False)
    special_tokens: SpecialTokens = field(default_factory=SpecialTokens)
    cased: bool = False

    def __contains__(self, token: str) -> bool:
        return token in self.token_to_id

    def __len__(self) -> int:
        return len(self.entries)

    def id(self, token: str) -> int:
        return self.token_to_id[token]

    @property
    def mask_token(self) -> str:
        return self.special_tokens.mask

    @property
    def unknown_token(self) -> str:
        return self.special_tokens.unknown

    def is_special(self, token: str) -> bool:
        return token in self.special_tokens.as_tuple()

    def normalize(self, text: str) -> str:
        """Case normalization only; accent handling is out of scope."""
        return text if self.cased else text.lower()

    def has_full_word(self, word: str) -> bool:
        """True when the case-normalized word is a full (non-continuation)
        vocabulary entry. This is the in-vocabulary test LexCov uses."""
        w = self.normalize(word)
        return w in self.token_to_id and not w.startswith(CONTINUATION_PREFIX)


def load_vocabulary(path, cased: bool = False,
                    special_tokens: SpecialTokens | None = None) -> Vocabulary:
    """Load a one-token-per-line vocabulary file.

    Ids are zero-based line indices. LF and CRLF files are both accepted.
    Raises VocabularyError on a missing file, an empty or duplicate line, or
    an absent special token.
    """
    specials = special_tokens or SpecialTokens()
    try:
        with open(path, encoding="utf-8") as fh:
            raw_lines = fh.read().split("\n")
    except OSError as exc:
        raise VocabularyError(f"cannot read vocabulary file {path}: {exc}") from exc

    # A trailing newline produces one empty final element; drop it.
    if raw_lines and raw_lines[-1] == "":
        raw_lines.pop()

    entries: list[str] = []
    token_to_id: dict[str, int] = {}
    for lineno, line in enumerate(raw_lines, start=1):
        token = line.rstrip("\r")
        if not token:
            raise VocabularyError(f"{path}: empty line {lineno}")
        if token in token_to_id:
            raise VocabularyError(f"{path}: duplicate token {token!r} at line {lineno}")
        token_to_id[token] = len(entries)
        entries.append(token)

    for name, tok in (("mask", specials.mask), ("unknown", specials.unknown),
                      ("classifier_start", specials.classifier_start),
                      ("separator", specials.separator)):
        if tok not in token_to_id:
            raise VocabularyError(f"{path}: missing special token {tok!r} ({name})")

    return Vocabulary(entries=tuple(entries), token_to_id=token_to_id,
                      special_tokens=specials, cased=cased)


@dataclass(frozen=True)
class TokenSequence:
    """A rendered token sequence with special-token and segment markers.

    The three lists are parallel. Content length T counts the non-special
    positions; it is the T every per-token measure divides by.
    """

    tokens: tuple[str, ...]
    is_special: tuple[bool, ...]
    segment_ids: tuple[int, ...]

    def __post_init__(self):
        if not (len(self.tokens) == len(self.is_special) == len(self.segment_ids)):
            raise ValueError("tokens, is_special and segment_ids must be parallel")

    def __len__(self) -> int:
        return len(self.tokens)

    @property
    def content_length(self) -> int:
        """T: the number of maskable (non-special) positions."""
        return sum(1 for s in self.is_special if not s)

    def content_tokens(self) -> list[str]:
        return [t for t, s in zip(self.tokens, self.is_special) if not s]


def word_split(text: str) -> list[str]:
    """Split text into words for word-level measures.

    Words are maximal alphanumeric runs; every other non-whitespace
    character becomes its own word, so punctuation never sticks to a word:
    "state-of-the-art" -> ["state", "-", "of", "-", "the", "-", "art"].
    """
    return _kernels.split_words(text)


def wordpiece_word(word: str, vocab: Vocabulary) -> list[str]:
    """Decompose one already-normalized word, falling back to the unknown
    token when no decomposition exists."""
    pieces = _kernels.wordpiece(word, vocab.token_to_id, MAX_WORD_CHARS)
    if pieces is None:
        return [vocab.unknown_token]
    return pieces


def _segment_pieces(text: str, vocab: Vocabulary) -> list[str]:
    pieces: list[str] = []
    for word in _kernels.split_words(vocab.normalize(text)):
        pieces.extend(wordpiece_word(word, vocab))
    return pieces


def tokenize(segment_a: str, segment_b: str | None, vocab: Vocabulary,
             max_length: int = MAX_SEQUENCE_LENGTH) -> TokenSequence:
    """Tokenize one or two text segments into [CLS] a [SEP] (b [SEP]).

    Segment ids are 0 for the first segment including [CLS] and its [SEP],
    1 for the second segment including its [SEP]. Sequences longer than
    max_length are truncated piece by piece from the end of the longer
    segment, with a logged warning.
    """
    if segment_a is None or not segment_a.strip():
        raise TokenizationError("segment_a is empty after whitespace normalization")
    has_b = segment_b is not None and segment_b.strip() != ""

    a_pieces = _segment_pieces(segment_a, vocab)
    b_pieces = _segment_pieces(segment_b, vocab) if has_b else []

    n_special = 3 if has_b else 2
    budget = max_length - n_special
    if len(a_pieces) + len(b_pieces) > budget:
        original = len(a_pieces) + len(b_pieces)
        while len(a_pieces) + len(b_pieces) > budget:
            if len(a_pieces) > len(b_pieces):
                a_pieces.pop()
            else:
                b_pieces.pop()
        logger.warning(
            "truncated sequence from %d to %d content pieces (limit %d)",
            original, len(a_pieces) + len(b_pieces), max_length)

    specials = vocab.special_tokens
    tokens = [specials.classifier_start, *a_pieces, specials.separator]
    is_special = [True, *([False] * len(a_pieces)), True]
    segment_ids = [0] * len(tokens)
    if has_b:
        tokens += [*b_pieces, specials.separator]
        is_special += [False] * len(b_pieces) + [True]
        segment_ids += [1] * (len(b_pieces) + 1)

    return TokenSequence(tokens=tuple(tokens), is_special=tuple(is_special),
                         segment_ids=tuple(segment_ids))
