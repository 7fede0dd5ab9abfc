"""Dataset and prediction-file loading.

Datasets arrive as JSON-lines ({id, a, b?, label}) or TSV with a header
row; a task schema names the columns when they differ from the defaults.
Predictions are JSON-lines ({id, label}) produced by any classifier; the
toolkit never runs models itself, it only joins their outputs against gold
labels.
"""

import csv
import json
import logging
from dataclasses import dataclass

from .exceptions import IngestionError

logger = logging.getLogger(__name__)

FORMATS = ("jsonl", "tsv")


@dataclass(frozen=True)
class Example:
    """One test-set item."""

    id: str
    task: str
    segment_a: str
    segment_b: str | None
    gold_label: str


@dataclass(frozen=True)
class PredictionRecord:
    """One classifier output joined against its example's gold label."""

    example_id: str
    task: str
    predicted_label: str
    correct: bool


@dataclass(frozen=True)
class TaskSchema:
    """Column names for one task's dataset file.

    id_field may be None, in which case ids are synthesized from 0-based
    data-row indices.
    """

    a_field: str = "a"
    b_field: str | None = "b"
    label_field: str = "label"
    id_field: str | None = "id"


def _row_values(row: dict, schema: TaskSchema, path, rowno: int):
    def pick(name, required):
        if name is None:
            return None
        if name not in row:
            if required:
                raise IngestionError(f"{path}: row {rowno} missing column {name!r}")
            return None
        value = row[name]
        return None if value is None else str(value)

    a = pick(schema.a_field, required=True)
    b = pick(schema.b_field, required=False)
    label = pick(schema.label_field, required=True)
    eid = pick(schema.id_field, required=False) if schema.id_field else None
    return eid, a, b, label


def _iter_rows(path, fmt: str):
    if fmt == "jsonl":
        with open(path, encoding="utf-8") as fh:
            for rowno, line in enumerate(fh):
                if not line.strip():
                    continue
                try:
                    record = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise IngestionError(f"{path}: bad JSON at row {rowno}: {exc}") from exc
                if not isinstance(record, dict):
                    raise IngestionError(f"{path}: row {rowno} is not an object")
                yield rowno, record
    elif fmt == "tsv":
        with open(path, encoding="utf-8", newline="") as fh:
            reader = csv.DictReader(fh, delimiter="\t")
            if reader.fieldnames is None:
                raise IngestionError(f"{path}: empty TSV file")
            for rowno, record in enumerate(reader):
                yield rowno, record
    else:
        raise IngestionError(f"unknown dataset format {fmt!r} (expected one of {FORMATS})")


def load_dataset(path, fmt: str, task: str,
                 schema: TaskSchema | None = None) -> list[Example]:
    """Load one task's examples.

    Rows with an empty first segment are rejected with a logged warning
    naming their row numbers; duplicate ids and missing columns are errors.
    """
    schema = schema or TaskSchema()
    examples: list[Example] = []
    seen_ids: set[str] = set()
    rejected: list[int] = []
    try:
        for rowno, record in _iter_rows(path, fmt):
            eid, a, b, label = _row_values(record, schema, path, rowno)
            if a is None or not a.strip():
                rejected.append(rowno)
                continue
            if label is None:
                raise IngestionError(f"{path}: row {rowno} has no label")
            if b is not None and not b.strip():
                b = None
            if eid is None:
                eid = str(rowno)
            if eid in seen_ids:
                raise IngestionError(f"{path}: duplicate example id {eid!r}")
            seen_ids.add(eid)
            examples.append(Example(id=eid, task=task, segment_a=a,
                                    segment_b=b, gold_label=label.strip()))
    except OSError as exc:
        raise IngestionError(f"cannot read dataset {path}: {exc}") from exc
    if rejected:
        logger.warning("%s: rejected %d rows with empty first segment (rows %s)",
                       path, len(rejected), rejected)
    return examples


def write_dataset(examples: list[Example], path):
    """Write examples back out in the JSONL dataset format (round-trips
    through load_dataset)."""
    with open(path, "w", encoding="utf-8") as fh:
        for ex in examples:
            record = {"id": ex.id, "a": ex.segment_a}
            if ex.segment_b is not None:
                record["b"] = ex.segment_b
            record["label"] = ex.gold_label
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")


def load_predictions(path, dataset: list[Example]) -> list[PredictionRecord]:
    """Load {id, label} predictions and join them against the dataset.

    Correctness is exact label-string equality after trimming. A prediction
    for an unknown example id is an error; examples with no prediction are
    logged and simply absent from the result (callers exclude them from
    accuracy analytics and report the count).
    """
    gold = {ex.id: ex for ex in dataset}
    records: list[PredictionRecord] = []
    seen: set[str] = set()
    try:
        with open(path, encoding="utf-8") as fh:
            for rowno, line in enumerate(fh):
                if not line.strip():
                    continue
                try:
                    record = json.loads(line)
                    eid = str(record["id"])
                    label = str(record["label"]).strip()
                except (json.JSONDecodeError, KeyError, TypeError) as exc:
                    raise IngestionError(
                        f"{path}: bad prediction row {rowno}: {exc}") from exc
                if eid not in gold:
                    raise IngestionError(
                        f"{path}: prediction for unknown example id {eid!r}")
                if eid in seen:
                    raise IngestionError(f"{path}: duplicate prediction for id {eid!r}")
                seen.add(eid)
                example = gold[eid]
                records.append(PredictionRecord(
                    example_id=eid, task=example.task, predicted_label=label,
                    correct=label == example.gold_label))
    except OSError as exc:
        raise IngestionError(f"cannot read predictions {path}: {exc}") from exc
    missing = len(gold) - len(seen)
    if missing:
        logger.warning("%s: %d of %d examples have no prediction; they are "
                       "excluded from accuracy analytics", path, missing, len(gold))
    return records
