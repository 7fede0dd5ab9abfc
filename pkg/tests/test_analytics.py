import math
import random

import pytest
import scipy.stats
from hypothesis import given, settings
from hypothesis import strategies as st

from precog.analytics import (
    Bin,
    bin_examples,
    correlate_measure,
    coverage_curve,
    interval_split,
    pearson,
    regularized_incomplete_beta,
    weighted_task_aggregate,
)
from precog.exceptions import AnalyticsError, UndefinedCorrelationError
from precog.measures import MeasureScore


def scores_from(values, measure="precog", prefix="e"):
    return [MeasureScore(example_id=f"{prefix}{i}", measure_name=measure, value=v)
            for i, v in enumerate(values)]


def reference_bin_index(value_pct, width):
    """Independent binning rule: count edges strictly below the value,
    special-casing 0 into the first bin."""
    if value_pct <= 0:
        return 0
    edges = [i * width for i in range(1, 100 // width)]
    return sum(1 for e in edges if value_pct > e)


class TestBinning:
    def test_documented_boundaries(self):
        scores = scores_from([0.0, 0.2, 0.4, 0.6, 0.8, 1.0])
        bins = bin_examples(scores, 20)
        assert [b.count for b in bins] == [2, 1, 1, 1, 1]
        assert (bins[0].lower, bins[0].upper) == (0, 20)

    def test_all_at_hundred(self):
        bins = bin_examples(scores_from([1.0] * 7), 20)
        assert [b.count for b in bins] == [0, 0, 0, 0, 7]

    def test_exact_fifth_ratios_stay_in_lower_bin(self):
        # 1/5 and 4/5 computed as ratios must not leak over the 20/80 edges.
        scores = scores_from([1 / 5, 4 / 5, 2 / 10, 12 / 15])
        bins = bin_examples(scores, 20)
        assert bins[0].count == 2
        assert bins[3].count == 2

    def test_mixed_measures_rejected(self):
        mixed = scores_from([0.5]) + scores_from([0.6], measure="lexcov",
                                                 prefix="x")
        with pytest.raises(AnalyticsError, match="mixed measures"):
            bin_examples(mixed, 20)

    def test_bad_width_rejected(self):
        with pytest.raises(AnalyticsError, match="divisor"):
            bin_examples(scores_from([0.5]), 30)

    def test_ten_thousand_random_scores_match_reference(self):
        rng = random.Random(3)
        values = [rng.random() for _ in range(10_000)]
        for width in (5, 10, 20, 25, 50):
            bins = bin_examples(scores_from(values), width)
            expected = [0] * (100 // width)
            for v in values:
                expected[reference_bin_index(v * 100, width)] += 1
            assert [b.count for b in bins] == expected

    def test_correctness_counts(self):
        scores = scores_from([0.1, 0.15, 0.9])
        correctness = {"e0": True, "e1": False, "e2": True}
        bins = bin_examples(scores, 20, correctness)
        assert bins[0].count == 2 and bins[0].correct_count == 1
        assert bins[0].accuracy == 0.5
        assert bins[4].accuracy == 1.0

    def test_missing_correctness_entry_rejected(self):
        with pytest.raises(AnalyticsError, match="e0"):
            bin_examples(scores_from([0.5]), 20, {})


@settings(max_examples=80, deadline=None)
@given(st.lists(st.floats(min_value=0.0, max_value=1.0), min_size=1,
                max_size=200),
       st.sampled_from([5, 10, 20, 25, 50]))
def test_binning_partition(values, width):
    bins = bin_examples(scores_from(values), width)
    assert sum(b.count for b in bins) == len(values)
    for value in values:
        holders = [b for b in bins
                   if (value * 100 > b.lower or b.lower == 0)
                   and value * 100 <= b.upper + 1e-9]
        assert holders


class TestIntervalSplit:
    def test_all_high_and_correct(self):
        scores = scores_from([0.9] * 5)
        split = interval_split(scores, {f"e{i}": True for i in range(5)})
        assert split.high.count == 5 and split.high.accuracy == 1.0
        assert split.low.count == 0

    def test_exactly_eighty_goes_low(self):
        split = interval_split(scores_from([0.8]), {"e0": True})
        assert split.low.count == 1 and split.high.count == 0

    def test_table_shaped_fixture(self):
        """577 examples above 80 with 549 correct, 368 at or below with 320
        correct; the split must reproduce the fixture arithmetic."""
        rng = random.Random(17)
        values, correct = [], {}
        for i in range(577):
            values.append(rng.uniform(0.801, 1.0))
            correct[f"e{i}"] = i < 549
        for j in range(368):
            values.append(rng.uniform(0.0, 0.80))
            correct[f"e{577 + j}"] = j < 320
        split = interval_split(scores_from(values), correct)
        assert (split.high.count, split.low.count) == (577, 368)
        assert split.high.accuracy == pytest.approx(549 / 577)
        assert split.low.accuracy == pytest.approx(320 / 368)
        assert f"{split.high.accuracy:.3f}" == "0.951"
        assert f"{split.low.accuracy:.3f}" == "0.870"

    def test_empty_join_rejected(self):
        with pytest.raises(AnalyticsError, match="empty"):
            interval_split([], {})


@settings(max_examples=80, deadline=None)
@given(st.lists(st.tuples(st.floats(min_value=0.0, max_value=1.0),
                          st.booleans()), min_size=1, max_size=300))
def test_interval_counts_sum_and_union_accuracy(rows):
    scores = scores_from([v for v, _ in rows])
    correctness = {f"e{i}": ok for i, (_, ok) in enumerate(rows)}
    split = interval_split(scores, correctness)
    assert split.total == len(rows)
    union_accuracy = sum(correctness.values()) / len(rows)
    pooled = (split.high.correct_count + split.low.correct_count) / split.total
    assert pooled == pytest.approx(union_accuracy, abs=1e-12)


class TestWeightedAggregate:
    def test_idempotent_on_identical_tasks(self):
        scores = scores_from([0.1, 0.5, 0.9])
        correctness = {"e0": True, "e1": False, "e2": True}
        bins = bin_examples(scores, 20, correctness)
        pooled = weighted_task_aggregate({"a": bins, "b": bins})
        for p, b in zip(pooled, bins):
            assert p.accuracy == b.accuracy
            assert p.count == 2 * b.count

    def test_weighted_mean(self):
        a = [Bin(lower=0, upper=100, count=10, correct_count=10)]
        b = [Bin(lower=0, upper=100, count=90, correct_count=0)]
        pooled = weighted_task_aggregate({"a": a, "b": b})
        assert pooled[0].accuracy == pytest.approx(0.10)

    def test_mismatched_edges_rejected(self):
        a = [Bin(lower=0, upper=50), Bin(lower=50, upper=100)]
        b = [Bin(lower=0, upper=100)]
        with pytest.raises(AnalyticsError, match="different edges"):
            weighted_task_aggregate({"a": a, "b": b})

    def test_eight_tasks_match_pooling_oracle(self):
        rng = random.Random(23)
        per_task = {}
        all_rows = []
        for t in range(8):
            rows = [(rng.random(), rng.random() < 0.7)
                    for _ in range(rng.randint(50, 200))]
            all_rows.extend(rows)
            scores = scores_from([v for v, _ in rows], prefix=f"t{t}e")
            correctness = {f"t{t}e{i}": ok for i, (_, ok) in enumerate(rows)}
            per_task[f"task{t}"] = bin_examples(scores, 20, correctness)
        pooled = weighted_task_aggregate(per_task)

        # Oracle: direct sums over the union, per bin.
        expected_counts = [0] * 5
        expected_correct = [0] * 5
        for value, ok in all_rows:
            idx = reference_bin_index(value * 100, 20)
            expected_counts[idx] += 1
            expected_correct[idx] += ok
        assert [b.count for b in pooled] == expected_counts
        assert [b.correct_count for b in pooled] == expected_correct

    def test_pooling_identity_vs_direct_binning(self):
        rng = random.Random(29)
        per_task = {}
        union_scores = []
        union_correct = {}
        for t in range(4):
            n = rng.randint(20, 60)
            values = [rng.random() for _ in range(n)]
            scores = [MeasureScore(example_id=f"t{t}e{i}", measure_name="precog",
                                   value=v) for i, v in enumerate(values)]
            correct = {s.example_id: rng.random() < 0.5 for s in scores}
            per_task[f"t{t}"] = bin_examples(scores, 25, correct)
            union_scores.extend(scores)
            union_correct.update(correct)
        pooled = weighted_task_aggregate(per_task)
        direct = bin_examples(union_scores, 25, union_correct)
        for p, d in zip(pooled, direct):
            assert (p.count, p.correct_count) == (d.count, d.correct_count)


class TestPearson:
    def test_perfect_linear(self):
        xs = [10.0, 30.0, 50.0, 70.0, 90.0]
        report = pearson(xs, [2 * x + 1 for x in xs])
        assert report.r == 1.0
        assert report.p_value == 0.0

    def test_perfect_negative(self):
        xs = [1.0, 2.0, 3.0, 4.0]
        report = pearson(xs, [-3 * x for x in xs])
        assert report.r == -1.0

    def test_reference_vector_matches_scipy(self):
        xs = [10.0, 30.0, 50.0, 70.0, 90.0]
        ys = [0.2, 0.4, 0.5, 0.6, 0.9]
        report = pearson(xs, ys)
        expected = scipy.stats.pearsonr(xs, ys)
        assert report.r == pytest.approx(expected.statistic, abs=1e-9)
        assert report.p_value == pytest.approx(expected.pvalue, abs=1e-9)

    def test_fifty_random_vectors_match_scipy(self):
        rng = random.Random(31)
        for _ in range(50):
            xs = [rng.uniform(-5, 5) for _ in range(5)]
            ys = [rng.uniform(-5, 5) for _ in range(5)]
            report = pearson(xs, ys)
            expected = scipy.stats.pearsonr(xs, ys)
            assert report.r == pytest.approx(expected.statistic, abs=1e-9)
            assert report.p_value == pytest.approx(expected.pvalue, abs=1e-9)

    def test_larger_samples_match_scipy(self):
        rng = random.Random(37)
        for n in (3, 4, 10, 100):
            xs = [rng.gauss(0, 1) for _ in range(n)]
            ys = [0.4 * x + rng.gauss(0, 1) for x in xs]
            report = pearson(xs, ys)
            expected = scipy.stats.pearsonr(xs, ys)
            assert report.r == pytest.approx(expected.statistic, abs=1e-9)
            assert report.p_value == pytest.approx(expected.pvalue, abs=1e-9)

    def test_too_few_points(self):
        with pytest.raises(UndefinedCorrelationError, match="3 points"):
            pearson([1.0, 2.0], [1.0, 2.0])

    def test_zero_variance(self):
        with pytest.raises(UndefinedCorrelationError, match="zero variance"):
            pearson([1.0, 1.0, 1.0], [1.0, 2.0, 3.0])

    @settings(max_examples=60, deadline=None)
    @given(st.lists(st.tuples(
        st.floats(min_value=-100, max_value=100),
        st.floats(min_value=-100, max_value=100)), min_size=3, max_size=40))
    def test_bounds_and_symmetry(self, pairs):
        xs = [a for a, _ in pairs]
        ys = [b for _, b in pairs]
        try:
            forward = pearson(xs, ys)
            backward = pearson(ys, xs)
        except UndefinedCorrelationError:
            return
        assert -1.0 <= forward.r <= 1.0
        assert forward.r == pytest.approx(backward.r, abs=1e-12)

    def test_affine_invariance(self):
        rng = random.Random(41)
        xs = [rng.random() for _ in range(10)]
        ys = [rng.random() for _ in range(10)]
        base = pearson(xs, ys)
        scaled = pearson([5.5 * x + 3 for x in xs], ys)
        assert scaled.r == pytest.approx(base.r, abs=1e-12)


class TestIncompleteBeta:
    def test_against_scipy(self):
        import scipy.special

        rng = random.Random(43)
        for _ in range(200):
            a = rng.uniform(0.5, 50)
            b = rng.uniform(0.5, 50)
            x = rng.random()
            assert regularized_incomplete_beta(a, b, x) == pytest.approx(
                scipy.special.betainc(a, b, x), abs=1e-9)

    def test_edges(self):
        assert regularized_incomplete_beta(2.0, 3.0, 0.0) == 0.0
        assert regularized_incomplete_beta(2.0, 3.0, 1.0) == 1.0


class TestCorrelateMeasure:
    def bins_with(self, accuracies, counts=None):
        counts = counts or [10] * len(accuracies)
        width = 100 // len(accuracies)
        return [Bin(lower=i * width, upper=(i + 1) * width, count=c,
                    correct_count=round(a * c), value_sum=c * (i * width + 1))
                for i, (a, c) in enumerate(zip(accuracies, counts))]

    def test_linear_accuracies(self):
        bins = self.bins_with([0.2, 0.4, 0.6, 0.8, 1.0])
        report = correlate_measure(bins, measure_name="precog")
        assert report.r == 1.0
        assert report.measure_name == "precog"

    def test_constant_accuracies_degenerate(self):
        with pytest.raises(UndefinedCorrelationError):
            correlate_measure(self.bins_with([0.5] * 5))

    def test_empty_bins_skipped(self):
        bins = self.bins_with([0.2, 0.4, 0.6, 0.8, 1.0])
        bins[1].count = 0
        report = correlate_measure(bins)
        assert report.n_bins == 4

    def test_matches_manual_pearson(self):
        bins = self.bins_with([0.3, 0.5, 0.45, 0.8, 0.9])
        report = correlate_measure(bins)
        manual = pearson([10.0, 30.0, 50.0, 70.0, 90.0],
                         [b.accuracy for b in bins])
        assert report.r == manual.r
        assert report.p_value == manual.p_value

    def test_mean_abscissa(self):
        bins = self.bins_with([0.2, 0.4, 0.6, 0.8, 1.0])
        report = correlate_measure(bins, abscissa="mean")
        manual = pearson([b.mean_value for b in bins],
                         [b.accuracy for b in bins])
        assert report.r == manual.r

    def test_too_few_nonempty(self):
        bins = self.bins_with([0.2, 0.8])
        with pytest.raises(UndefinedCorrelationError, match="non-empty"):
            correlate_measure(bins)


class TestCoverage:
    def make_bins(self, counts):
        width = 100 // len(counts)
        return [Bin(lower=i * width, upper=(i + 1) * width, count=c)
                for i, c in enumerate(counts)]

    def test_single_bin(self):
        curve = coverage_curve(self.make_bins([0, 0, 12, 0, 0]), 12)
        assert curve.percents == (0.0, 0.0, 100.0, 0.0, 0.0)
        assert curve.cumulative[-1] == 100.0

    def test_documented_example(self):
        curve = coverage_curve(self.make_bins([10, 10, 10, 10, 60]), 100)
        assert curve.percents == (10.0, 10.0, 10.0, 10.0, 60.0)
        assert curve.cumulative == (10.0, 20.0, 30.0, 40.0, 100.0)

    def test_total_mismatch_rejected(self):
        with pytest.raises(AnalyticsError, match="does not match"):
            coverage_curve(self.make_bins([1, 0, 0, 0, 0]), 5)

    @settings(max_examples=80, deadline=None)
    @given(st.lists(st.integers(min_value=0, max_value=1000), min_size=4,
                    max_size=4).filter(lambda c: sum(c) > 0))
    def test_percents_sum_to_hundred(self, counts):
        curve = coverage_curve(self.make_bins(counts), sum(counts))
        assert math.fsum(curve.percents) == pytest.approx(100.0, abs=1e-9)
        assert all(b >= a - 1e-12 for a, b in
                   zip(curve.cumulative, curve.cumulative[1:]))
        assert curve.cumulative[-1] == pytest.approx(100.0, abs=1e-9)
