"""Embedded end-to-end selftest.

Runs the whole pipeline on a bundled 50-example synthetic dataset with the
deterministic mock backend and checks the invariants every installation
must satisfy. Each check is isolated: one failure never stops the others.
The printed summary is byte-identical across runs on a healthy install.
"""

import filecmp
import json
import os
import tempfile
from importlib import resources

from .analytics import bin_examples, coverage_curve, pearson, weighted_task_aggregate
from .backends import (
    CachedBackend,
    MaskedVariant,
    PredictionCache,
    make_masked_variants,
    mock_backend_from_corpus,
)
from .config import RunConfig, TaskConfig
from .exceptions import PrecogError, UndefinedCorrelationError
from .measures import MeasureScore, precog
from .pipeline import SCORES_FILENAME, load_mock_corpus, run_analyze, run_score
from .tokenizer import load_vocabulary, tokenize

SELFTEST_K = 5
EXPECTED_VOCAB_SIZE = 62


def bundled_data_dir() -> str:
    return str(resources.files("precog").joinpath("data"))


class _Harness:
    def __init__(self, data_dir: str | None, emit):
        self.data_dir = data_dir or bundled_data_dir()
        self.emit = emit
        self.passed = 0
        self.failed = 0

    def path(self, name: str) -> str:
        return os.path.join(self.data_dir, name)

    def check(self, name: str, fn):
        try:
            fn()
        except Exception as exc:  # noqa: BLE001 - fault isolation is the point
            self.failed += 1
            self.emit(f"FAIL {name}: {type(exc).__name__}: {exc}")
        else:
            self.passed += 1
            self.emit(f"PASS {name}")


def _config(harness: _Harness, out_dir: str, jobs: int = 4) -> RunConfig:
    return RunConfig(
        vocabulary=harness.path("selftest_vocab.txt"),
        mock_corpus=harness.path("selftest_corpus.txt"),
        k=SELFTEST_K,
        bin_width=20,
        jobs=jobs,
        out_dir=out_dir,
        tasks={"synthetic": TaskConfig(
            name="synthetic",
            dataset=harness.path("selftest_dataset.jsonl"),
            predictions={"": harness.path("selftest_predictions.jsonl")},
        )},
    )


def run_selftest(data_dir: str | None = None, emit=print) -> int:
    """Run all checks; returns 0 when everything passed, 1 otherwise."""
    h = _Harness(data_dir, emit)
    state: dict = {}

    def load_inputs():
        state["vocab"] = load_vocabulary(h.path("selftest_vocab.txt"))
        if len(state["vocab"]) != EXPECTED_VOCAB_SIZE:
            raise PrecogError(f"vocabulary size {len(state['vocab'])} != "
                              f"{EXPECTED_VOCAB_SIZE}")

    def tokenizer_checks():
        vocab = state["vocab"]
        seq = tokenize("unaffable", None, vocab)
        if list(seq.tokens) != ["[CLS]", "un", "##aff", "##able", "[SEP]"]:
            raise PrecogError(f"greedy decomposition broke: {seq.tokens}")
        with open(h.path("selftest_dataset.jsonl"), encoding="utf-8") as fh:
            rows = [json.loads(line) for line in fh]
        sequences = [tokenize(r["a"], r.get("b"), vocab) for r in rows]
        again = [tokenize(r["a"], r.get("b"), vocab) for r in rows]
        if sequences != again:
            raise PrecogError("tokenization is not deterministic")
        for seq in sequences:
            for token in seq.tokens:
                if token not in vocab:
                    raise PrecogError(f"token {token!r} escaped the vocabulary")
            seps = sum(t == "[SEP]" for t in seq.tokens)
            pair = any(s == 1 for s in seq.segment_ids)
            if seps != (2 if pair else 1):
                raise PrecogError("separator count does not match segment shape")
        state["sequences"] = sequences

    def variant_checks():
        vocab = state["vocab"]
        for seq in state["sequences"]:
            variants = make_masked_variants(seq, mask_token=vocab.mask_token)
            if len(variants) != seq.content_length:
                raise PrecogError("variant count != T")
            for v in variants:
                rendered = v.masked_tokens()
                diffs = [i for i, (x, y) in enumerate(zip(rendered, seq.tokens))
                         if x != y]
                if diffs != [v.masked_index] and v.original_token != vocab.mask_token:
                    raise PrecogError(f"variant differs at {diffs}, "
                                      f"expected [{v.masked_index}]")
                if seq.is_special[v.masked_index]:
                    raise PrecogError("special position was masked")

    def measure_checks():
        vocab = state["vocab"]
        corpus = load_mock_corpus(h.path("selftest_corpus.txt"), vocab)
        backend = mock_backend_from_corpus(corpus, vocab)
        state["backend"] = backend
        for seq in state["sequences"]:
            low = precog(seq, backend, k=1, mask_token=vocab.mask_token)
            high = precog(seq, backend, k=SELFTEST_K, mask_token=vocab.mask_token)
            for score in (low, high):
                if not 0.0 <= score.value <= 1.0:
                    raise PrecogError(f"measure out of range: {score.value}")
            if low.value > high.value:
                raise PrecogError("precog not monotone in k")

    def equation_oracle():
        vocab = state["vocab"]
        backend = state["backend"]
        checked = 0
        for seq in state["sequences"]:
            if seq.content_length > 6:
                continue
            checked += 1
            hits = 0
            for i, token in enumerate(seq.tokens):
                if seq.is_special[i]:
                    continue
                variant = MaskedVariant(base=seq, masked_index=i,
                                        original_token=token,
                                        mask_token=vocab.mask_token)
                prediction = backend.predict_topk(variant, SELFTEST_K)
                hits += token in prediction.tokens
            direct = hits / seq.content_length
            piped = precog(seq, backend, k=SELFTEST_K,
                           mask_token=vocab.mask_token).value
            if direct != piped:
                raise PrecogError(f"pipeline {piped} != direct {direct}")
        if checked == 0:
            raise PrecogError("no short sequences to check")

    def binning_checks():
        probes = [0.0, 20.0, 20.0001, 80.0, 80.0001, 100.0]
        scores = [MeasureScore(example_id=f"p{i}", measure_name="precog",
                               value=v / 100.0) for i, v in enumerate(probes)]
        bins = bin_examples(scores, 20)
        counts = [b.count for b in bins]
        # 0 and 20 share the first bin; 80 stays in (60,80]; 80.0001 and 100
        # land in (80,100].
        if counts != [2, 1, 0, 1, 2]:
            raise PrecogError(f"boundary scores landed in wrong bins: {counts}")
        if sum(counts) != len(scores):
            raise PrecogError("binning lost or duplicated an example")

    def pooling_checks():
        values = [i / 50 for i in range(50)]
        scores = [MeasureScore(example_id=f"e{i}", measure_name="length", value=v)
                  for i, v in enumerate(values)]
        correctness = {f"e{i}": i % 3 == 0 for i in range(50)}
        direct = bin_examples(scores, 20, correctness)
        halves = {"one": bin_examples(scores[:25], 20, correctness),
                  "two": bin_examples(scores[25:], 20, correctness)}
        pooled = weighted_task_aggregate(halves)
        for d, p in zip(direct, pooled):
            if (d.count, d.correct_count) != (p.count, p.correct_count):
                raise PrecogError("pooled bins differ from direct binning")

    def pearson_checks():
        xs = [10.0, 30.0, 50.0, 70.0, 90.0]
        ys = [2 * x + 1 for x in xs]
        report = pearson(xs, ys)
        if report.r != 1.0 or report.p_value != 0.0:
            raise PrecogError(f"linear data gave r={report.r}, p={report.p_value}")
        a = pearson(xs, [0.2, 0.4, 0.5, 0.6, 0.9])
        b = pearson([0.2, 0.4, 0.5, 0.6, 0.9], xs)
        if abs(a.r - b.r) > 1e-12:
            raise PrecogError("pearson is not symmetric")
        shifted = pearson([3 * x - 7 for x in xs], [0.2, 0.4, 0.5, 0.6, 0.9])
        if abs(a.r - shifted.r) > 1e-12:
            raise PrecogError("pearson not invariant under affine transforms")
        try:
            pearson(xs, [1.0] * 5)
        except UndefinedCorrelationError:
            pass
        else:
            raise PrecogError("zero variance did not raise")

    def cache_checks():
        vocab = state["vocab"]
        inner = state["backend"]

        class Counting:
            kind = inner.kind
            model_id = inner.model_id

            def __init__(self):
                self.calls = 0

            def predict_topk(self, variant, k):
                self.calls += 1
                return inner.predict_topk(variant, k)

        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "cache.jsonl")
            counting = Counting()
            cached = CachedBackend(counting, PredictionCache(path))
            seq = state["sequences"][0]
            cold = [precog(seq, cached, k=SELFTEST_K, example_id="s000",
                           mask_token=vocab.mask_token).value]
            calls_cold = counting.calls
            warm_backend = CachedBackend(counting, PredictionCache(path))
            warm = [precog(seq, warm_backend, k=SELFTEST_K, example_id="s000",
                           mask_token=vocab.mask_token).value]
            if cold != warm:
                raise PrecogError("cache changed a score")
            if counting.calls != calls_cold:
                raise PrecogError("warm cache still hit the backend")

    def report_checks():
        with tempfile.TemporaryDirectory() as tmp:
            out_a = os.path.join(tmp, "a")
            out_b = os.path.join(tmp, "b")
            for out in (out_a, out_b):
                if run_score(_config(h, out)) != 0:
                    raise PrecogError("score stage reported failures")
                if run_analyze(_config(h, out)) != 0:
                    raise PrecogError("analyze stage failed")
            for name in (SCORES_FILENAME, "bins.csv", "intervals.csv",
                         "correlation.json", "coverage.csv"):
                if not filecmp.cmp(os.path.join(out_a, name),
                                   os.path.join(out_b, name), shallow=False):
                    raise PrecogError(f"{name} differs between identical runs")
            with open(os.path.join(out_a, "correlation.json")) as fh:
                rows = json.load(fh)["rows"]
            measured = {row["measure"] for row in rows if "r" in row}
            if measured != {"precog", "lexcov", "length"}:
                raise PrecogError(f"correlation missing measures: {sorted(measured)}")
            with open(os.path.join(out_a, "coverage.csv")) as fh:
                lines = fh.read().splitlines()[2:]
            per_measure: dict[str, float] = {}
            for line in lines:
                cells = line.split(",")
                key = f"{cells[0]}/{cells[1]}"
                per_measure[key] = per_measure.get(key, 0.0) + float(cells[5])
            for key, total in per_measure.items():
                if abs(total - 100.0) > 1e-9:
                    raise PrecogError(f"coverage for {key} sums to {total}")

    def scheduling_checks():
        with tempfile.TemporaryDirectory() as tmp:
            out_serial = os.path.join(tmp, "serial")
            out_parallel = os.path.join(tmp, "parallel")
            run_score(_config(h, out_serial, jobs=1))
            run_score(_config(h, out_parallel, jobs=8))
            if not filecmp.cmp(os.path.join(out_serial, SCORES_FILENAME),
                               os.path.join(out_parallel, SCORES_FILENAME),
                               shallow=False):
                raise PrecogError("scores depend on worker scheduling")

    h.check("vocabulary-load", load_inputs)
    h.check("tokenizer", tokenizer_checks)
    h.check("masked-variants", variant_checks)
    h.check("measure-ranges", measure_checks)
    h.check("precog-direct-evaluation", equation_oracle)
    h.check("binning-boundaries", binning_checks)
    h.check("task-pooling", pooling_checks)
    h.check("pearson", pearson_checks)
    h.check("cache-transparency", cache_checks)
    h.check("reports", report_checks)
    h.check("scheduling-independence", scheduling_checks)

    emit = h.emit
    emit(f"selftest: {h.passed}/{h.passed + h.failed} checks passed")
    return 0 if h.failed == 0 else 1
