"""Command-line interface.

Subcommands: score, analyze, selftest, cache stats, cache verify. A JSON
config file supplies anything not given as a flag; flags win. Exit codes:
0 success, 1 partial or data failures, 2 configuration errors.
"""

import argparse
import json
import logging
import sys

from .backends import scan_cache_file
from .config import RunConfig, load_config_file, resolve_cache_path
from .exceptions import ConfigError, PrecogError
from .measures import MEASURE_NAMES
from .pipeline import run_analyze, run_score
from .selftest import run_selftest

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURES = 1
EXIT_CONFIG = 2


def _add_common_flags(parser: argparse.ArgumentParser):
    parser.add_argument("--config", help="JSON config file")
    parser.add_argument("--vocab", help="vocabulary file (one token per line)")
    parser.add_argument("--backend-url", help="remote /topk backend base URL")
    parser.add_argument("--cache", help="prediction cache file (JSON lines)")
    parser.add_argument("--mock-corpus",
                        help="text file for the deterministic mock backend")
    parser.add_argument("--k", type=int, help="top-k cutoff (default 100)")
    parser.add_argument("--bin-width", type=int,
                        help="histogram bin width in points (default 20)")
    parser.add_argument("--measures",
                        help=f"comma-separated subset of {','.join(MEASURE_NAMES)}")
    parser.add_argument("--out", help="output directory")
    parser.add_argument("--jobs", type=int, help="scoring concurrency (default 8)")
    parser.add_argument("--lexcov-set-semantics", action="store_true",
                        default=None,
                        help="count repeated out-of-vocabulary words once")
    parser.add_argument("--corr-abscissa", choices=("midpoint", "mean"),
                        help="x-value representing a bin in correlations")


def _resolve_config(args) -> RunConfig:
    config = load_config_file(args.config) if args.config else RunConfig()
    overrides = {
        "vocabulary": args.vocab,
        "backend_url": args.backend_url,
        "cache_path": args.cache,
        "mock_corpus": args.mock_corpus,
        "k": args.k,
        "bin_width": args.bin_width,
        "out_dir": args.out,
        "jobs": args.jobs,
        "lexcov_set_semantics": args.lexcov_set_semantics,
        "corr_abscissa": args.corr_abscissa,
    }
    for key, value in overrides.items():
        if value is not None:
            setattr(config, key, value)
    if args.measures is not None:
        config.measures = tuple(m.strip() for m in args.measures.split(",")
                                if m.strip())
    return config


def _cache_path_from_args(args) -> str:
    config = load_config_file(args.config) if args.config else RunConfig()
    if args.cache:
        config.cache_path = args.cache
    path = resolve_cache_path(config)
    if not path:
        raise ConfigError("no cache configured: pass --cache, set cache_path "
                          "in the config, or set PRECOG_CACHE_DIR")
    return path


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="precog",
        description="Pre-training coverage measures and accuracy-correlation "
                    "reports for text datasets.")
    parser.add_argument("-v", "--verbose", action="store_true",
                        help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p_score = sub.add_parser("score", help="compute measures into a scores file")
    _add_common_flags(p_score)

    p_analyze = sub.add_parser("analyze",
                               help="bin scores against predictions and write reports")
    _add_common_flags(p_analyze)
    p_analyze.add_argument("--scores",
                           help="scores file (default: <out>/scores.jsonl)")

    p_selftest = sub.add_parser("selftest",
                                help="run the embedded end-to-end checks")
    p_selftest.add_argument("--data-dir", help=argparse.SUPPRESS)

    p_cache = sub.add_parser("cache", help="inspect the prediction cache")
    cache_sub = p_cache.add_subparsers(dest="cache_command", required=True)
    for name, help_text in (("stats", "entry and fingerprint counts"),
                            ("verify", "scan for malformed or conflicting lines")):
        p = cache_sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--cache", help="prediction cache file")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "score":
            return run_score(_resolve_config(args))
        if args.command == "analyze":
            return run_analyze(_resolve_config(args), scores_path=args.scores)
        if args.command == "selftest":
            return run_selftest(data_dir=args.data_dir)
        if args.command == "cache":
            report = scan_cache_file(_cache_path_from_args(args))
            if args.cache_command == "stats":
                stats = {key: report[key]
                         for key in ("path", "entries", "fingerprints")}
                print(json.dumps(stats, indent=2, sort_keys=True))
                return EXIT_OK
            print(json.dumps(report, indent=2, sort_keys=True))
            return EXIT_OK if report["ok"] else EXIT_FAILURES
    except ConfigError as exc:
        logger.error("configuration error: %s", exc)
        return EXIT_CONFIG
    except PrecogError as exc:
        logger.error("%s", exc)
        return EXIT_FAILURES
    raise AssertionError(f"unhandled command {args.command!r}")


if __name__ == "__main__":
    sys.exit(main())
