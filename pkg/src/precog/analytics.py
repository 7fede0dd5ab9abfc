"""Binned-accuracy analytics: histograms, interval splits, task pooling,
Pearson correlation, coverage curves, and the report files built from them.

Bins cover the 0-100 measure scale with a lower-exclusive/upper-inclusive
boundary rule; the first bin also includes 0. Pooling across tasks is
micro-accuracy (sum of corrects over sum of counts), which makes pooled
aggregation identical to binning the union of tasks directly.

The Pearson p-value is computed in-process: two-sided from the
t-distribution with n-2 degrees of freedom via a continued-fraction
evaluation of the regularized incomplete beta function, accurate to well
under 1e-9 absolute.
"""

import csv
import json
import math
from bisect import bisect_left
from dataclasses import dataclass, field

from .exceptions import AnalyticsError, UndefinedCorrelationError
from .measures import MeasureScore

FULL_SCALE = 100
INTERVAL_THRESHOLD = 80  # Table-style split: (80,100] vs [0,80]


@dataclass
class Bin:
    """One measure-value interval with its example and correctness counts.

    Bounds are on the 0-100 scale, lower-exclusive/upper-inclusive; the
    first bin of a histogram also contains 0. value_sum accumulates the
    0-100-scale measure values of members, for the mean-abscissa option.
    """

    lower: float
    upper: float
    count: int = 0
    correct_count: int = 0
    value_sum: float = 0.0

    def __post_init__(self):
        if not 0 <= self.lower < self.upper <= FULL_SCALE:
            raise AnalyticsError(f"invalid bin bounds ({self.lower}, {self.upper})")

    @property
    def accuracy(self) -> float | None:
        if self.count == 0:
            return None
        return self.correct_count / self.count

    @property
    def midpoint(self) -> float:
        return (self.lower + self.upper) / 2

    @property
    def mean_value(self) -> float | None:
        if self.count == 0:
            return None
        return self.value_sum / self.count

    @property
    def label(self) -> str:
        open_bracket = "[" if self.lower == 0 else "("
        return f"{open_bracket}{self.lower:g},{self.upper:g}]"


@dataclass(frozen=True)
class IntervalSplit:
    """The two-row table split: (80,100] versus [0,80]."""

    high: Bin
    low: Bin

    @property
    def total(self) -> int:
        return self.high.count + self.low.count


@dataclass(frozen=True)
class CorrelationReport:
    measure_name: str
    r: float
    p_value: float
    n_bins: int

    def __post_init__(self):
        if not -1.0 <= self.r <= 1.0:
            raise AnalyticsError(f"correlation {self.r} outside [-1, 1]")
        if not 0.0 <= self.p_value <= 1.0:
            raise AnalyticsError(f"p-value {self.p_value} outside [0, 1]")


@dataclass(frozen=True)
class CoverageCurve:
    """Per-bin percent of the dataset, plus the cumulative curve
    (low-to-high bin order) used for accuracy-vs-coverage plots."""

    bins: tuple[Bin, ...]
    percents: tuple[float, ...]
    cumulative: tuple[float, ...]


def _bin_index(value: float, edges: list[float]) -> int:
    """Index of the (lower, upper] bin containing value; bin 0 includes 0."""
    return max(0, bisect_left(edges, value) - 1)


def _check_width(width: int) -> int:
    if not isinstance(width, int) or width <= 0 or FULL_SCALE % width != 0:
        raise AnalyticsError(f"bin width {width!r} must be a positive divisor of 100")
    return FULL_SCALE // width


def bin_examples(scores: list[MeasureScore], width: int,
                 correctness: dict[str, bool] | None = None) -> list[Bin]:
    """Histogram scores into 100/width bins on the 0-100 scale.

    All scores must share one measure name; every example lands in exactly
    one bin. When a correctness map (example id -> bool) is supplied it must
    cover every scored example, and per-bin accuracies become available.
    """
    n_bins = _check_width(width)
    measures = {s.measure_name for s in scores}
    if len(measures) > 1:
        raise AnalyticsError(f"mixed measures in one binning: {sorted(measures)}")
    # Comparing against edge/100 keeps exact-ratio scores (e.g. 1/5 vs the
    # 20-point edge) on the documented side of the boundary.
    edges = [i * width / FULL_SCALE for i in range(n_bins + 1)]
    bins = [Bin(lower=i * width, upper=(i + 1) * width) for i in range(n_bins)]
    for score in scores:
        b = bins[_bin_index(score.value, edges)]
        b.count += 1
        b.value_sum += score.value * FULL_SCALE
        if correctness is not None:
            if score.example_id not in correctness:
                raise AnalyticsError(
                    f"no correctness entry for scored example {score.example_id!r}")
            b.correct_count += bool(correctness[score.example_id])
    return bins


def interval_split(scores: list[MeasureScore],
                   correctness: dict[str, bool]) -> IntervalSplit:
    """Split joined examples at the 80-point boundary: (80,100] and [0,80].

    A score of exactly 80 falls in the low interval.
    """
    if not scores:
        raise AnalyticsError("interval split over an empty join")
    high = Bin(lower=INTERVAL_THRESHOLD, upper=FULL_SCALE)
    low = Bin(lower=0, upper=INTERVAL_THRESHOLD)
    threshold = INTERVAL_THRESHOLD / FULL_SCALE
    for score in scores:
        if score.example_id not in correctness:
            raise AnalyticsError(
                f"no correctness entry for scored example {score.example_id!r}")
        b = high if score.value > threshold else low
        b.count += 1
        b.value_sum += score.value * FULL_SCALE
        b.correct_count += bool(correctness[score.example_id])
    return IntervalSplit(high=high, low=low)


def weighted_task_aggregate(per_task_bins: dict[str, list[Bin]]) -> list[Bin]:
    """Pool per-task bins with sample-count weights.

    Per bin, pooled accuracy is sum(correct) / sum(count) across tasks,
    i.e. the count-weighted mean of task accuracies. All tasks must share
    identical bin edges.
    """
    if not per_task_bins:
        raise AnalyticsError("nothing to aggregate")
    task_order = sorted(per_task_bins)
    reference = [(b.lower, b.upper) for b in per_task_bins[task_order[0]]]
    pooled = [Bin(lower=lo, upper=up) for lo, up in reference]
    for task in task_order:
        bins = per_task_bins[task]
        if [(b.lower, b.upper) for b in bins] != reference:
            raise AnalyticsError(f"task {task!r} was binned with different edges")
        for target, source in zip(pooled, bins):
            target.count += source.count
            target.correct_count += source.correct_count
            target.value_sum += source.value_sum
    return pooled


# --- Pearson correlation with a self-contained p-value ---------------------

_BETACF_MAX_ITER = 300
_BETACF_EPS = 3e-16


def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta (modified Lentz)."""
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, _BETACF_MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _BETACF_EPS:
            return h
    raise AnalyticsError("incomplete beta continued fraction did not converge")


def regularized_incomplete_beta(a: float, b: float, x: float) -> float:
    """I_x(a, b), accurate to well under 1e-9 absolute for a, b > 0."""
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    ln_front = (math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
                + a * math.log(x) + b * math.log1p(-x))
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def student_t_two_sided_p(t: float, dof: int) -> float:
    """P(|T| >= |t|) for a t-distribution with dof degrees of freedom."""
    if dof < 1:
        raise AnalyticsError(f"invalid degrees of freedom {dof}")
    if math.isinf(t):
        return 0.0
    return regularized_incomplete_beta(dof / 2.0, 0.5, dof / (dof + t * t))


def pearson(xs: list[float], ys: list[float], measure_name: str = "") -> CorrelationReport:
    """Product-moment correlation with a two-sided t-distribution p-value.

    Requires at least 3 points and nonzero variance on both sides; r is
    clamped into [-1, 1] against rounding, and |r| = 1 maps to p = 0.
    """
    n = len(xs)
    if n != len(ys):
        raise AnalyticsError(f"length mismatch: {n} xs vs {len(ys)} ys")
    if n < 3:
        raise UndefinedCorrelationError(f"need at least 3 points, got {n}")
    mean_x = math.fsum(xs) / n
    mean_y = math.fsum(ys) / n
    dx = [x - mean_x for x in xs]
    dy = [y - mean_y for y in ys]
    sxx = math.fsum(d * d for d in dx)
    syy = math.fsum(d * d for d in dy)
    if sxx == 0.0 or syy == 0.0:
        raise UndefinedCorrelationError("zero variance input")
    r = math.fsum(a * b for a, b in zip(dx, dy)) / math.sqrt(sxx * syy)
    r = max(-1.0, min(1.0, r))
    if abs(r) == 1.0:
        p = 0.0
    else:
        dof = n - 2
        t = r * math.sqrt(dof / (1.0 - r * r))
        p = student_t_two_sided_p(t, dof)
    return CorrelationReport(measure_name=measure_name, r=r, p_value=p, n_bins=n)


def correlate_measure(bins: list[Bin], measure_name: str = "",
                      abscissa: str = "midpoint") -> CorrelationReport:
    """Pearson over (bin abscissa, bin accuracy) pairs, skipping empty bins.

    abscissa is "midpoint" (default) or "mean" for the per-bin mean measure
    value. Fewer than 3 non-empty bins is an error.
    """
    if abscissa not in ("midpoint", "mean"):
        raise AnalyticsError(f"unknown abscissa {abscissa!r}")
    occupied = [b for b in bins if b.count > 0]
    if len(occupied) < 3:
        raise UndefinedCorrelationError(
            f"need at least 3 non-empty bins, got {len(occupied)}")
    if abscissa == "midpoint":
        xs = [b.midpoint for b in occupied]
    else:
        xs = [b.mean_value for b in occupied]
    ys = [b.accuracy for b in occupied]
    return pearson(xs, ys, measure_name=measure_name)


def coverage_curve(bins: list[Bin], total: int) -> CoverageCurve:
    """Percent of the dataset per bin plus the cumulative curve."""
    if total != sum(b.count for b in bins):
        raise AnalyticsError(
            f"total {total} does not match bin counts {sum(b.count for b in bins)}")
    if total <= 0:
        raise AnalyticsError("coverage curve over zero examples")
    percents = [b.count / total * FULL_SCALE for b in bins]
    cumulative = []
    for i in range(len(percents)):
        cumulative.append(math.fsum(percents[:i + 1]))
    return CoverageCurve(bins=tuple(bins), percents=tuple(percents),
                         cumulative=tuple(cumulative))


# --- Report files -----------------------------------------------------------
#
# All table values are rendered with 4 decimal places. Every file names its
# manifest and the run choices that can move a number (masking level, k,
# lexcov semantics, correlation abscissa).


def _fmt(x: float | None) -> str:
    return "" if x is None else f"{x:.4f}"


def report_header_line(header: dict[str, object]) -> str:
    parts = [f"{key}={header[key]}" for key in sorted(header)]
    return "# " + " ".join(parts)


def write_bins_csv(path, rows: list[dict], header: dict[str, object]):
    """rows: one per (measure, prediction set, bin), keyed measure,
    predictions, bin objects."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(report_header_line(header) + "\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["measure", "predictions", "bin_lower", "bin_upper",
                         "count", "accuracy"])
        for row in rows:
            b: Bin = row["bin"]
            writer.writerow([row["measure"], row["predictions"],
                             f"{b.lower:g}", f"{b.upper:g}", b.count,
                             _fmt(b.accuracy)])


def write_intervals_csv(path, rows: list[dict], set_names: list[str],
                        header: dict[str, object]):
    """rows: one per (task, measure, interval) with per-set accuracies."""
    accuracy_cols = ["accuracy" if not name else f"accuracy_{name}"
                     for name in set_names]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(report_header_line(header) + "\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["task", "measure", "interval", "samples", *accuracy_cols])
        for row in rows:
            writer.writerow([row["task"], row["measure"], row["interval"],
                             row["samples"],
                             *[_fmt(a) for a in row["accuracies"]]])


def write_correlation_json(path, rows: list[dict], header: dict[str, object]):
    payload = {"header": {k: header[k] for k in sorted(header)}, "rows": rows}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_coverage_csv(path, rows: list[dict], header: dict[str, object]):
    """rows: one per (measure, prediction set, bin) with coverage percents
    and the pooled accuracy, enough to plot both the coverage histogram and
    the accuracy-vs-cumulative-coverage curve."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(report_header_line(header) + "\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["measure", "predictions", "bin_lower", "bin_upper",
                         "count", "percent", "cumulative_percent", "accuracy"])
        for row in rows:
            b: Bin = row["bin"]
            writer.writerow([row["measure"], row["predictions"],
                             f"{b.lower:g}", f"{b.upper:g}",
                             b.count, _fmt(row["percent"]),
                             _fmt(row["cumulative"]), _fmt(b.accuracy)])
