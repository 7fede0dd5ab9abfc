"""Prediction backends: top-k token predictions for masked positions.

Three interchangeable implementations sit behind one duck-typed interface
(`predict_topk(variant, k)` plus `kind`/`model_id` attributes):

* MockBackend — deterministic unigram ranking from a corpus, the test oracle;
* RemoteBackend — HTTP client for the /topk protocol with retry/backoff;
* CacheOnlyBackend — serves previously cached predictions, nothing else.

CachedBackend wraps any of them with an append-only JSON-lines cache keyed
by (example id, masked index, k, backend fingerprint). The fingerprint binds
cached entries to the exact backend and k that produced them.
"""

import hashlib
import json
import logging
import threading
import time
from collections import Counter
from dataclasses import dataclass, field

import httpx

from .exceptions import BackendError, CacheMissError, ConfigError
from .tokenizer import TokenSequence, Vocabulary

logger = logging.getLogger(__name__)

DEFAULT_TOP_K = 100
RETRY_ATTEMPTS = 3
RETRY_BASE_SECONDS = 1.0


@dataclass(frozen=True)
class MaskedVariant:
    """One sequence with exactly one content position masked."""

    base: TokenSequence
    masked_index: int
    original_token: str
    mask_token: str = "[MASK]"
    example_id: str | None = None

    def __post_init__(self):
        if not 0 <= self.masked_index < len(self.base):
            raise ValueError(f"masked_index {self.masked_index} out of range")
        if self.base.is_special[self.masked_index]:
            raise ValueError("special positions are never masked")
        if self.base.tokens[self.masked_index] != self.original_token:
            raise ValueError("original_token does not match the base sequence")

    def masked_tokens(self) -> list[str]:
        """The rendered token list with the mask substituted in."""
        rendered = list(self.base.tokens)
        rendered[self.masked_index] = self.mask_token
        return rendered


@dataclass(frozen=True)
class TopKPrediction:
    """Ranked candidate tokens for one masked position, best first."""

    tokens: tuple[str, ...]
    k: int

    def __post_init__(self):
        if len(self.tokens) > self.k:
            raise ValueError(f"got {len(self.tokens)} tokens for k={self.k}")
        if len(set(self.tokens)) != len(self.tokens):
            raise ValueError("prediction contains duplicate tokens")

    def __contains__(self, token: str) -> bool:
        return token in self.tokens


def make_masked_variants(seq: TokenSequence, mask_token: str = "[MASK]",
                         example_id: str | None = None) -> list[MaskedVariant]:
    """One variant per non-special position, in position order.

    T = 0 yields an empty list.
    """
    return [
        MaskedVariant(base=seq, masked_index=i, original_token=tok,
                      mask_token=mask_token, example_id=example_id)
        for i, (tok, special) in enumerate(zip(seq.tokens, seq.is_special))
        if not special
    ]


def backend_fingerprint(kind: str, model_id: str, k: int) -> str:
    """Stable identifier binding cached predictions to (backend, model, k)."""
    digest = hashlib.sha256(f"{kind}\n{model_id}\n{k}".encode("utf-8"))
    return digest.hexdigest()[:16]


class MockBackend:
    """Context-free unigram predictor built from a tokenized corpus.

    predict_topk returns the k globally most frequent non-special corpus
    tokens, frequency descending, ties broken by vocabulary id ascending.
    Identical corpora always produce identical predictions.
    """

    kind = "mock"

    def __init__(self, corpus: list[TokenSequence], vocab: Vocabulary):
        if not corpus:
            raise ValueError("mock backend needs a non-empty corpus")
        counts: Counter[str] = Counter()
        for seq in corpus:
            counts.update(seq.content_tokens())
        self._ranked: list[str] = sorted(
            counts, key=lambda t: (-counts[t], vocab.id(t)))
        table = "\n".join(f"{t}\t{counts[t]}" for t in self._ranked)
        self.model_id = "unigram-" + hashlib.sha256(table.encode("utf-8")).hexdigest()[:16]

    def predict_topk(self, variant: MaskedVariant, k: int = DEFAULT_TOP_K) -> TopKPrediction:
        if k < 1:
            raise ValueError("k must be >= 1")
        return TopKPrediction(tokens=tuple(self._ranked[:k]), k=k)


def mock_backend_from_corpus(corpus: list[TokenSequence],
                             vocab: Vocabulary) -> MockBackend:
    return MockBackend(corpus, vocab)


class RemoteBackend:
    """HTTP client for the /topk protocol.

    POST /topk with {"tokens": [...], "masked_index": i, "k": k} and expect
    {"model": ..., "tokens": [...]}. Transient failures (connection errors,
    5xx) are retried with exponential backoff; after the last attempt the
    error is raised for the caller to fail that example, not the run.
    In-flight requests are bounded by max_in_flight.
    """

    kind = "remote"

    def __init__(self, base_url: str, vocab: Vocabulary | None = None,
                 max_in_flight: int = 8, timeout: float = 30.0,
                 retry_attempts: int = RETRY_ATTEMPTS,
                 retry_base_seconds: float = RETRY_BASE_SECONDS,
                 transport: httpx.BaseTransport | None = None):
        self._vocab = vocab
        self._retry_attempts = retry_attempts
        self._retry_base_seconds = retry_base_seconds
        self._semaphore = threading.BoundedSemaphore(max_in_flight)
        self._client = httpx.Client(base_url=base_url, timeout=timeout,
                                    transport=transport)
        self.model_id = self._fetch_model_id()

    def _fetch_model_id(self) -> str:
        try:
            resp = self._client.get("/health")
            resp.raise_for_status()
            model = resp.json()["model"]
        except (httpx.HTTPError, KeyError, ValueError) as exc:
            raise BackendError(f"backend health check failed: {exc}") from exc
        if not isinstance(model, str) or not model:
            raise BackendError("backend health check returned no model identifier")
        return model

    def close(self):
        self._client.close()

    def predict_topk(self, variant: MaskedVariant, k: int = DEFAULT_TOP_K) -> TopKPrediction:
        if k < 1:
            raise ValueError("k must be >= 1")
        payload = {"tokens": variant.masked_tokens(),
                   "masked_index": variant.masked_index, "k": k}
        last_error: Exception | None = None
        for attempt in range(self._retry_attempts):
            if attempt:
                delay = self._retry_base_seconds * 2 ** (attempt - 1)
                time.sleep(delay)
            try:
                with self._semaphore:
                    resp = self._client.post("/topk", json=payload)
                if resp.status_code >= 500:
                    raise httpx.HTTPStatusError(
                        f"server error {resp.status_code}",
                        request=resp.request, response=resp)
                resp.raise_for_status()
                return self._parse_response(resp.json(), variant, k)
            except (httpx.TransportError, httpx.HTTPStatusError) as exc:
                if (isinstance(exc, httpx.HTTPStatusError)
                        and exc.response.status_code < 500):
                    # Client errors are not transient; do not retry.
                    raise BackendError(
                        f"backend rejected request: {exc}",
                        example_id=variant.example_id,
                        masked_index=variant.masked_index) from exc
                last_error = exc
                logger.warning("backend attempt %d/%d failed: %s",
                               attempt + 1, self._retry_attempts, exc)
        raise BackendError(
            f"backend unreachable after {self._retry_attempts} attempts: {last_error}",
            example_id=variant.example_id,
            masked_index=variant.masked_index) from last_error

    def _parse_response(self, body, variant: MaskedVariant, k: int) -> TopKPrediction:
        try:
            model = body["model"]
            tokens = body["tokens"]
        except (TypeError, KeyError) as exc:
            raise BackendError(f"malformed /topk response: {body!r}",
                               example_id=variant.example_id,
                               masked_index=variant.masked_index) from exc
        if model != self.model_id:
            raise BackendError(
                f"backend model changed mid-run: {model!r} != {self.model_id!r}",
                example_id=variant.example_id, masked_index=variant.masked_index)
        if not isinstance(tokens, list) or not all(isinstance(t, str) for t in tokens):
            raise BackendError(f"malformed token list in response: {tokens!r}",
                               example_id=variant.example_id,
                               masked_index=variant.masked_index)
        if self._vocab is not None:
            bad = [t for t in tokens if t not in self._vocab]
            if bad:
                raise BackendError(
                    f"backend returned out-of-vocabulary tokens: {bad[:5]!r}",
                    example_id=variant.example_id,
                    masked_index=variant.masked_index)
        try:
            return TopKPrediction(tokens=tuple(tokens), k=k)
        except ValueError as exc:
            raise BackendError(f"invalid prediction: {exc}",
                               example_id=variant.example_id,
                               masked_index=variant.masked_index) from exc


@dataclass
class CacheEntry:
    eid: str
    idx: int
    k: int
    fp: str
    tokens: tuple[str, ...]

    @property
    def key(self) -> tuple[str, int, int, str]:
        return (self.eid, self.idx, self.k, self.fp)


class PredictionCache:
    """Append-only JSON-lines store of top-k predictions.

    One line per prediction: {"eid", "idx", "k", "fp", "tokens"}. Entries
    from a different backend fingerprint are never returned. A truncated
    final line (interrupted run) is repaired on open; writes are serialized
    internally so many scoring workers can share one cache.
    """

    def __init__(self, path):
        self.path = str(path)
        self._lock = threading.Lock()
        self._index: dict[tuple[str, int, int, str], tuple[str, ...]] = {}
        self._load()

    def _load(self):
        try:
            with open(self.path, "rb") as fh:
                raw = fh.read()
        except FileNotFoundError:
            return
        good_bytes = 0
        for line in raw.splitlines(keepends=True):
            try:
                entry = self._parse_line(line.decode("utf-8"))
            except (ValueError, KeyError, UnicodeDecodeError):
                if good_bytes + len(line) == len(raw):
                    # Partial trailing line from an interrupted run: repair.
                    logger.warning("cache %s: dropping truncated final line", self.path)
                    with open(self.path, "r+b") as fh:
                        fh.truncate(good_bytes)
                    return
                raise BackendError(f"corrupt cache line in {self.path}: {line[:80]!r}")
            good_bytes += len(line)
            if entry.key not in self._index:
                self._index[entry.key] = entry.tokens

    @staticmethod
    def _parse_line(line: str) -> CacheEntry:
        record = json.loads(line)
        tokens = record["tokens"]
        if not isinstance(tokens, list) or not all(isinstance(t, str) for t in tokens):
            raise ValueError("bad tokens field")
        return CacheEntry(eid=str(record["eid"]), idx=int(record["idx"]),
                          k=int(record["k"]), fp=str(record["fp"]),
                          tokens=tuple(tokens))

    def __len__(self) -> int:
        return len(self._index)

    def get(self, eid: str, idx: int, k: int, fp: str) -> tuple[str, ...] | None:
        return self._index.get((eid, idx, k, fp))

    def put(self, eid: str, idx: int, k: int, fp: str, tokens: tuple[str, ...]):
        key = (eid, idx, k, fp)
        line = json.dumps({"eid": eid, "idx": idx, "k": k, "fp": fp,
                           "tokens": list(tokens)}, ensure_ascii=False)
        with self._lock:
            if key in self._index:
                return
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(line + "\n")
            self._index[key] = tokens

    def fingerprints(self) -> dict[str, int]:
        counts: Counter[str] = Counter(key[3] for key in self._index)
        return dict(counts)

    def stats(self) -> dict:
        return {
            "path": self.path,
            "entries": len(self._index),
            "fingerprints": self.fingerprints(),
        }

    def verify(self) -> dict:
        return scan_cache_file(self.path)


def scan_cache_file(path) -> dict:
    """Tolerant scan of a cache file: unique entries, per-fingerprint
    counts, malformed lines, and conflicting duplicates (same key,
    different tokens). Never raises on corruption, so it can diagnose
    files the strict loader refuses."""
    path = str(path)
    malformed: list[int] = []
    conflicts: list[dict] = []
    seen: dict[tuple[str, int, int, str], tuple[str, ...]] = {}
    total = 0
    try:
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                total += 1
                try:
                    entry = PredictionCache._parse_line(line)
                except (ValueError, KeyError):
                    malformed.append(lineno)
                    continue
                prior = seen.get(entry.key)
                if prior is not None and prior != entry.tokens:
                    conflicts.append({"line": lineno, "eid": entry.eid,
                                      "idx": entry.idx, "k": entry.k,
                                      "fp": entry.fp})
                seen.setdefault(entry.key, entry.tokens)
    except FileNotFoundError:
        return {"path": path, "lines": 0, "entries": 0, "fingerprints": {},
                "malformed_lines": [], "conflicts": [], "ok": True}
    fingerprints = Counter(key[3] for key in seen)
    return {
        "path": path,
        "lines": total,
        "entries": len(seen),
        "fingerprints": dict(fingerprints),
        "malformed_lines": malformed,
        "conflicts": conflicts,
        "ok": not malformed and not conflicts,
    }


class CachedBackend:
    """Transparent cache wrapper: scoring through it equals scoring through
    the bare backend, with repeat predictions served from disk."""

    def __init__(self, inner, cache: PredictionCache):
        self._inner = inner
        self.cache = cache

    @property
    def kind(self) -> str:
        return self._inner.kind

    @property
    def model_id(self) -> str:
        return self._inner.model_id

    def fingerprint(self, k: int) -> str:
        return backend_fingerprint(self._inner.kind, self._inner.model_id, k)

    def predict_topk(self, variant: MaskedVariant, k: int = DEFAULT_TOP_K) -> TopKPrediction:
        fp = self.fingerprint(k)
        eid = variant.example_id or ""
        hit = self.cache.get(eid, variant.masked_index, k, fp)
        if hit is not None:
            return TopKPrediction(tokens=hit, k=k)
        prediction = self._inner.predict_topk(variant, k)
        self.cache.put(eid, variant.masked_index, k, fp, prediction.tokens)
        return prediction


class CacheOnlyBackend:
    """Serves cached predictions only; a miss is an error naming the
    example and position. Useful for re-scoring without any model."""

    kind = "cache"

    def __init__(self, cache: PredictionCache, fingerprint: str | None = None):
        self.cache = cache
        if fingerprint is None:
            fps = sorted(cache.fingerprints())
            if len(fps) != 1:
                raise ConfigError(
                    f"cache {cache.path} holds {len(fps)} fingerprints "
                    f"({fps}); pass one explicitly")
            fingerprint = fps[0]
        self._fp = fingerprint
        self.model_id = f"cache:{fingerprint}"

    def fingerprint(self, k: int) -> str:
        return self._fp

    def predict_topk(self, variant: MaskedVariant, k: int = DEFAULT_TOP_K) -> TopKPrediction:
        if k < 1:
            raise ValueError("k must be >= 1")
        eid = variant.example_id or ""
        hit = self.cache.get(eid, variant.masked_index, k, self._fp)
        if hit is None:
            raise CacheMissError("prediction not in cache",
                                 example_id=variant.example_id,
                                 masked_index=variant.masked_index)
        return TopKPrediction(tokens=hit, k=k)


def resolve_fingerprint(backend, k: int) -> str:
    """Fingerprint for any backend object, honoring custom implementations."""
    fp_method = getattr(backend, "fingerprint", None)
    if callable(fp_method):
        return fp_method(k)
    return backend_fingerprint(backend.kind, backend.model_id, k)
