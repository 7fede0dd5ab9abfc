"""Run configuration: a declarative JSON file plus CLI flag overrides.

Flags win over the file. The resolved configuration is snapshotted into the
run manifest so every reported number can be traced to its knobs.
"""

import json
import os
from dataclasses import dataclass, field

from .exceptions import ConfigError
from .ingestion import FORMATS, TaskSchema
from .measures import MEASURE_NAMES

CACHE_DIR_ENV = "PRECOG_CACHE_DIR"
DEFAULT_CACHE_FILENAME = "predictions_cache.jsonl"


@dataclass
class TaskConfig:
    name: str
    dataset: str
    format: str = "jsonl"
    schema: TaskSchema = field(default_factory=TaskSchema)
    # prediction set name -> path; "" is the unnamed default set
    predictions: dict[str, str] = field(default_factory=dict)


@dataclass
class RunConfig:
    vocabulary: str | None = None
    cased: bool = False
    backend_url: str | None = None
    mock_corpus: str | None = None
    cache_path: str | None = None
    cache_fingerprint: str | None = None
    k: int = 100
    bin_width: int = 20
    measures: tuple[str, ...] = MEASURE_NAMES
    lexcov_set_semantics: bool = False
    corr_abscissa: str = "midpoint"
    jobs: int = 8
    out_dir: str = "precog_out"
    tasks: dict[str, TaskConfig] = field(default_factory=dict)

    def validate(self, for_score: bool = False):
        if self.k < 1:
            raise ConfigError(f"k must be >= 1, got {self.k}")
        if self.bin_width <= 0 or 100 % self.bin_width != 0:
            raise ConfigError(f"bin width {self.bin_width} must divide 100")
        if not self.measures:
            raise ConfigError("at least one measure must be selected")
        unknown = set(self.measures) - set(MEASURE_NAMES)
        if unknown:
            raise ConfigError(f"unknown measures {sorted(unknown)}; "
                              f"choose from {list(MEASURE_NAMES)}")
        if self.corr_abscissa not in ("midpoint", "mean"):
            raise ConfigError(f"corr_abscissa must be midpoint or mean, "
                              f"got {self.corr_abscissa!r}")
        if self.jobs < 1:
            raise ConfigError(f"jobs must be >= 1, got {self.jobs}")
        if not self.tasks:
            raise ConfigError("no tasks configured (config file 'tasks' section)")
        if self.vocabulary is None:
            raise ConfigError("no vocabulary file configured")
        if for_score:
            sources = [s for s in (self.backend_url, self.mock_corpus) if s]
            if len(sources) > 1:
                raise ConfigError("configure only one of backend_url / mock_corpus")
            if not sources and not self.cache_path:
                raise ConfigError("scoring needs a backend: backend_url, "
                                  "mock_corpus, or a cache to replay")

    def snapshot(self) -> dict:
        """JSON-ready view of every knob that can change a reported number."""
        return {
            "vocabulary": self.vocabulary,
            "cased": self.cased,
            "backend_url": self.backend_url,
            "mock_corpus": self.mock_corpus,
            "cache_path": self.cache_path,
            "cache_fingerprint": self.cache_fingerprint,
            "k": self.k,
            "bin_width": self.bin_width,
            "measures": list(self.measures),
            "lexcov_semantics": "set" if self.lexcov_set_semantics else "occurrence",
            "corr_abscissa": self.corr_abscissa,
            "jobs": self.jobs,
            "out_dir": self.out_dir,
            "masking": "wordpiece",
            "specials_maskable": False,
            "tasks": {
                name: {
                    "dataset": t.dataset,
                    "format": t.format,
                    "predictions": dict(sorted(t.predictions.items())),
                }
                for name, t in sorted(self.tasks.items())
            },
        }


def _parse_task(name: str, raw: dict) -> TaskConfig:
    if "dataset" not in raw:
        raise ConfigError(f"task {name!r}: missing 'dataset' path")
    fmt = raw.get("format", "jsonl")
    if fmt not in FORMATS:
        raise ConfigError(f"task {name!r}: unknown format {fmt!r}")
    columns = raw.get("columns", {})
    schema = TaskSchema(
        a_field=columns.get("a", "a"),
        b_field=columns.get("b", "b"),
        label_field=columns.get("label", "label"),
        id_field=columns.get("id", "id" if fmt == "jsonl" else None),
    )
    predictions = raw.get("predictions", {})
    if isinstance(predictions, str):
        predictions = {"": predictions}
    elif not isinstance(predictions, dict):
        raise ConfigError(f"task {name!r}: predictions must be a path or a "
                          f"name->path mapping")
    return TaskConfig(name=name, dataset=raw["dataset"], format=fmt,
                      schema=schema, predictions=dict(predictions))


def load_config_file(path) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"config file {path} must hold a JSON object")

    config = RunConfig()
    simple = {
        "vocabulary": str, "cased": bool, "backend_url": str,
        "mock_corpus": str, "cache_path": str, "cache_fingerprint": str,
        "k": int, "bin_width": int, "lexcov_set_semantics": bool,
        "corr_abscissa": str, "jobs": int, "out_dir": str,
    }
    for key, kind in simple.items():
        if key in raw:
            value = raw[key]
            if not isinstance(value, kind) or isinstance(value, bool) and kind is int:
                raise ConfigError(f"config key {key!r} must be {kind.__name__}")
            setattr(config, key, value)
    if "measures" in raw:
        if (not isinstance(raw["measures"], list)
                or not all(isinstance(m, str) for m in raw["measures"])):
            raise ConfigError("config key 'measures' must be a list of names")
        config.measures = tuple(raw["measures"])
    tasks = raw.get("tasks", {})
    if not isinstance(tasks, dict):
        raise ConfigError("config key 'tasks' must be an object")
    config.tasks = {name: _parse_task(name, t) for name, t in tasks.items()}
    return config


def resolve_cache_path(config: RunConfig) -> str | None:
    """Explicit cache path wins; else PRECOG_CACHE_DIR provides a default
    location; else caching is off."""
    if config.cache_path:
        return config.cache_path
    cache_dir = os.environ.get(CACHE_DIR_ENV)
    if cache_dir:
        return os.path.join(cache_dir, DEFAULT_CACHE_FILENAME)
    return None
