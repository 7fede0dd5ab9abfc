"""Score and analyze pipeline stages.

Scoring is the expensive stage (T backend calls per example), so it runs
once and persists a durable scores file; analysis re-reads that file and can
be iterated cheaply with different bin widths or abscissas. Both stages
write a manifest naming every knob that can change a reported number, and
all output files are written atomically (temp + rename).
"""

import hashlib
import json
import logging
import os
import tempfile
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from . import __version__
from .analytics import (
    Bin,
    bin_examples,
    correlate_measure,
    coverage_curve,
    interval_split,
    weighted_task_aggregate,
    write_bins_csv,
    write_correlation_json,
    write_coverage_csv,
    write_intervals_csv,
)
from .backends import (
    CachedBackend,
    CacheOnlyBackend,
    PredictionCache,
    RemoteBackend,
    mock_backend_from_corpus,
    resolve_fingerprint,
)
from .config import RunConfig, resolve_cache_path
from .exceptions import (
    BackendError,
    ConfigError,
    IngestionError,
    PrecogError,
    UndefinedCorrelationError,
    UndefinedMeasureError,
)
from .ingestion import Example, load_dataset, load_predictions
from .measures import MeasureScore, lexcov, length_measure, length_stats, precog
from .tokenizer import TokenSequence, load_vocabulary, tokenize, word_split

logger = logging.getLogger(__name__)

SCORES_FILENAME = "scores.jsonl"
SCORE_MANIFEST = "score_manifest.json"
ANALYZE_MANIFEST = "analyze_manifest.json"
MEASURE_ORDER = ("precog", "lexcov", "length")


def atomic_write_text(path, text: str):
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def file_sha256(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def write_manifest(path, config: RunConfig, extra: dict):
    manifest = {
        "tool": "precog",
        "version": __version__,
        "config": config.snapshot(),
        **extra,
    }
    atomic_write_text(path, json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def build_backend(config: RunConfig, vocab):
    """Assemble the configured backend, cache-wrapped when a cache path is
    set. Returns (backend, cache_or_none)."""
    cache_path = resolve_cache_path(config)
    cache = PredictionCache(cache_path) if cache_path else None
    if config.backend_url:
        inner = RemoteBackend(config.backend_url, vocab=vocab,
                              max_in_flight=config.jobs)
    elif config.mock_corpus:
        corpus = load_mock_corpus(config.mock_corpus, vocab)
        inner = mock_backend_from_corpus(corpus, vocab)
    elif cache is not None:
        backend = CacheOnlyBackend(cache, fingerprint=config.cache_fingerprint)
        return backend, cache
    else:
        raise ConfigError("no backend configured")
    if cache is not None:
        return CachedBackend(inner, cache), cache
    return inner, cache


def load_mock_corpus(path, vocab) -> list[TokenSequence]:
    """One text per non-empty line, tokenized with the run vocabulary."""
    corpus = []
    try:
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                text = line.strip()
                if text:
                    corpus.append(tokenize(text, None, vocab))
    except OSError as exc:
        raise ConfigError(f"cannot read mock corpus {path}: {exc}") from exc
    if not corpus:
        raise ConfigError(f"mock corpus {path} has no usable lines")
    return corpus


@dataclass
class ScoredExample:
    example: Example
    sequence: TokenSequence
    words: list[str]
    scores: dict[str, MeasureScore] = field(default_factory=dict)
    failure: str | None = None


def example_text_words(example: Example) -> list[str]:
    words = word_split(example.segment_a)
    if example.segment_b is not None:
        words += word_split(example.segment_b)
    return words


def score_task(examples: list[Example], vocab, backend, config: RunConfig,
               ) -> list[ScoredExample]:
    """Compute the selected measures for one task's examples.

    PreCog calls fan out across examples up to config.jobs workers; results
    are assembled in dataset order so output is schedule-independent. A
    backend failure fails that example's precog score, not the run.
    """
    scored = [ScoredExample(example=ex,
                            sequence=tokenize(ex.segment_a, ex.segment_b, vocab),
                            words=example_text_words(ex))
              for ex in examples]

    if "length" in config.measures:
        stats = length_stats([s.sequence for s in scored])
        for s in scored:
            s.scores["length"] = length_measure(s.sequence, stats,
                                                example_id=s.example.id)
    if "lexcov" in config.measures:
        for s in scored:
            try:
                s.scores["lexcov"] = lexcov(
                    s.words, vocab, example_id=s.example.id,
                    set_semantics=config.lexcov_set_semantics)
            except UndefinedMeasureError as exc:
                s.failure = str(exc)
    if "precog" in config.measures:
        def run_precog(s: ScoredExample):
            return precog(s.sequence, backend, k=config.k,
                          example_id=s.example.id, mask_token=vocab.mask_token)

        with ThreadPoolExecutor(max_workers=config.jobs) as pool:
            futures = [(s, pool.submit(run_precog, s)) for s in scored]
            for s, future in futures:
                try:
                    s.scores["precog"] = future.result()
                except (BackendError, UndefinedMeasureError) as exc:
                    s.failure = str(exc)
                    logger.error("scoring failed: %s", exc)
    return scored


def scores_to_records(task: str, scored: list[ScoredExample],
                      config: RunConfig) -> list[dict]:
    records = []
    for s in scored:
        for measure in MEASURE_ORDER:
            if measure not in config.measures or measure not in s.scores:
                continue
            score = s.scores[measure]
            record = {"eid": s.example.id, "task": task, "measure": measure,
                      "value": score.value}
            if measure == "precog":
                record["detail"] = [bool(h) for h in score.detail]
                record["k"] = config.k
            elif measure == "lexcov":
                record["detail"] = list(score.detail)
            record["t_wordpiece"] = s.sequence.content_length
            record["t_words"] = len(s.words)
            records.append(record)
    return records


def run_score(config: RunConfig) -> int:
    """Execute the score stage; returns the process exit code."""
    config.validate(for_score=True)
    started = time.time()
    os.makedirs(config.out_dir, exist_ok=True)
    vocab = load_vocabulary(config.vocabulary, cased=config.cased)
    backend, cache = build_backend(config, vocab)

    all_records: list[dict] = []
    failures: list[dict] = []
    counts: dict[str, int] = {}
    for task_name in sorted(config.tasks):
        task = config.tasks[task_name]
        examples = load_dataset(task.dataset, task.format, task_name, task.schema)
        counts[task_name] = len(examples)
        scored = score_task(examples, vocab, backend, config)
        all_records.extend(scores_to_records(task_name, scored, config))
        failures.extend({"task": task_name, "eid": s.example.id, "error": s.failure}
                        for s in scored if s.failure)

    lines = [json.dumps(r, ensure_ascii=False, sort_keys=True) for r in all_records]
    scores_path = os.path.join(config.out_dir, SCORES_FILENAME)
    atomic_write_text(scores_path, "".join(line + "\n" for line in lines))

    manifest_path = os.path.join(config.out_dir, SCORE_MANIFEST)
    write_manifest(manifest_path, config, {
        "stage": "score",
        "backend": {
            "kind": backend.kind,
            "model_id": backend.model_id,
            "fingerprint": resolve_fingerprint(backend, config.k),
        },
        "vocabulary_sha256": file_sha256(config.vocabulary),
        "examples_per_task": counts,
        "score_records": len(all_records),
        "failed_examples": failures,
        "cache": cache.stats() if cache is not None else None,
        "started_at": _iso(started),
        "finished_at": _iso(time.time()),
    })
    logger.info("wrote %d score records to %s (%d failures)",
                len(all_records), scores_path, len(failures))
    return 1 if failures else 0


def _iso(timestamp: float) -> str:
    return time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime(timestamp))


def read_scores(path) -> list[dict]:
    records = []
    try:
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    record = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise IngestionError(f"{path}: bad scores line {lineno}: {exc}") from exc
                records.append(record)
    except OSError as exc:
        raise IngestionError(f"cannot read scores file {path}: {exc}") from exc
    return records


def run_analyze(config: RunConfig, scores_path: str | None = None) -> int:
    """Execute the analyze stage; returns the process exit code."""
    config.validate(for_score=False)
    started = time.time()
    os.makedirs(config.out_dir, exist_ok=True)
    scores_path = scores_path or os.path.join(config.out_dir, SCORES_FILENAME)
    records = read_scores(scores_path)

    # scores[(task, measure)] -> list[MeasureScore]
    scores: dict[tuple[str, str], list[MeasureScore]] = {}
    for record in records:
        measure = record["measure"]
        if measure not in config.measures:
            continue
        key = (record["task"], measure)
        scores.setdefault(key, []).append(MeasureScore(
            example_id=str(record["eid"]), measure_name=measure,
            value=float(record["value"])))

    tasks_present = sorted({task for task, _ in scores})
    measures_present = [m for m in MEASURE_ORDER
                        if any(meas == m for _, meas in scores)]
    if not tasks_present:
        logger.error("scores file %s holds no records for the selected measures",
                     scores_path)
        return 1

    for task in tasks_present:
        if task not in config.tasks:
            raise ConfigError(f"scores file references task {task!r} which is "
                              f"not in the configuration")

    # correctness[task][set_name] -> {eid: bool}
    correctness: dict[str, dict[str, dict[str, bool]]] = {}
    set_names: list[str] = sorted({
        name for task in tasks_present
        for name in config.tasks[task].predictions})
    if not set_names:
        logger.error("no prediction files configured for tasks %s", tasks_present)
        return 1
    for task in tasks_present:
        task_config = config.tasks[task]
        dataset = load_dataset(task_config.dataset, task_config.format, task,
                               task_config.schema)
        correctness[task] = {}
        for set_name in set_names:
            if set_name not in task_config.predictions:
                raise ConfigError(f"task {task!r} lacks prediction set "
                                  f"{set_name!r}; all tasks must share the "
                                  f"same prediction set names")
            predictions = load_predictions(task_config.predictions[set_name], dataset)
            correctness[task][set_name] = {p.example_id: p.correct for p in predictions}

    # Join: per (task, measure) keep examples predicted in every set, so
    # sample counts and coverage are identical across prediction sets.
    join_misses: dict[str, list[str]] = {}
    joined: dict[tuple[str, str], list[MeasureScore]] = {}
    for (task, measure), task_scores in sorted(scores.items()):
        common = set.intersection(*(set(correctness[task][s]) for s in set_names))
        kept = [s for s in task_scores if s.example_id in common]
        dropped = sorted(s.example_id for s in task_scores
                         if s.example_id not in common)
        if dropped:
            join_misses.setdefault(task, dropped)
            logger.warning("task %s: %d scored examples lack predictions "
                           "and are excluded", task, len(dropped))
        joined[(task, measure)] = kept

    total_joined = sum(len(v) for v in joined.values())
    if total_joined == 0:
        logger.error("empty intersection of scores and predictions; "
                     "nothing to analyze")
        return 1

    header = {
        "tool": f"precog-{__version__}",
        "k": config.k,
        "bin_width": config.bin_width,
        "masking": "wordpiece",
        "specials_maskable": False,
        "lexcov_semantics": "set" if config.lexcov_set_semantics else "occurrence",
        "corr_abscissa": config.corr_abscissa,
        "manifest": ANALYZE_MANIFEST,
    }

    bins_rows, intervals_rows, correlation_rows, coverage_rows = [], [], [], []
    correlation_errors = []
    for measure in measures_present:
        measure_tasks = [t for t in tasks_present if (t, measure) in joined
                         and joined[(t, measure)]]
        if not measure_tasks:
            continue
        pooled_by_set: dict[str, list[Bin]] = {}
        for set_name in set_names:
            per_task_bins: dict[str, list[Bin]] = {}
            for task in measure_tasks:
                task_scores = joined[(task, measure)]
                per_task_bins[task] = bin_examples(
                    task_scores, config.bin_width,
                    correctness=correctness[task][set_name])
            pooled = weighted_task_aggregate(per_task_bins)
            pooled_by_set[set_name] = pooled
            for b in pooled:
                bins_rows.append({"measure": measure,
                                  "predictions": set_name or "default",
                                  "bin": b})
            try:
                report = correlate_measure(pooled, measure_name=measure,
                                           abscissa=config.corr_abscissa)
                correlation_rows.append({
                    "measure": measure, "predictions": set_name or "default",
                    "r": round(report.r, 4), "p": round(report.p_value, 4),
                    "n_bins": report.n_bins})
            except UndefinedCorrelationError as exc:
                correlation_errors.append({
                    "measure": measure, "predictions": set_name or "default",
                    "error": str(exc)})

        for task in measure_tasks:
            task_scores = joined[(task, measure)]
            splits = {s: interval_split(task_scores, correctness[task][s])
                      for s in set_names}
            first = splits[set_names[0]]
            for which, samples in (("high", first.high.count), ("low", first.low.count)):
                intervals_rows.append({
                    "task": task, "measure": measure,
                    "interval": getattr(first, which).label,
                    "samples": samples,
                    "accuracies": [getattr(splits[s], which).accuracy
                                   for s in set_names]})

        reference_pooled = pooled_by_set[set_names[0]]
        total = sum(b.count for b in reference_pooled)
        curve = coverage_curve(reference_pooled, total)
        for set_name in set_names:
            for b, pct, cum in zip(pooled_by_set[set_name], curve.percents,
                                   curve.cumulative):
                coverage_rows.append({"measure": measure,
                                      "predictions": set_name or "default",
                                      "bin": b, "percent": pct,
                                      "cumulative": cum})

    out = config.out_dir
    write_bins_csv(os.path.join(out, "bins.csv"), bins_rows, header)
    write_intervals_csv(os.path.join(out, "intervals.csv"), intervals_rows,
                        set_names, header)
    write_correlation_json(os.path.join(out, "correlation.json"),
                           correlation_rows + correlation_errors, header)
    write_coverage_csv(os.path.join(out, "coverage.csv"), coverage_rows, header)

    write_manifest(os.path.join(out, ANALYZE_MANIFEST), config, {
        "stage": "analyze",
        "scores_file": os.path.abspath(scores_path),
        "measures": measures_present,
        "tasks": tasks_present,
        "prediction_sets": [s or "default" for s in set_names],
        "joined_examples": total_joined,
        "join_misses": join_misses,
        "correlation_errors": correlation_errors,
        "started_at": _iso(started),
        "finished_at": _iso(time.time()),
    })
    logger.info("wrote reports to %s (%d joined example-measure records)",
                out, total_joined)
    return 0


__all__ = [
    "run_score", "run_analyze", "score_task", "build_backend",
    "load_mock_corpus", "read_scores", "atomic_write_text",
    "SCORES_FILENAME", "SCORE_MANIFEST", "ANALYZE_MANIFEST",
]
