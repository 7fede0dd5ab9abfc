#!/usr/bin/env python3
"""Benchmark the compiled tokenizer kernels against the pure-Python fallback.

Builds a synthetic vocabulary and corpus, then times word splitting and
WordPiece decomposition through both kernel implementations in the same
process. Run from the repository root after installing the package:

    python benchmarks/bench_tokenizer.py [--words 200000]
"""

import argparse
import random
import time

from precog import _kernels_py

try:
    from precog import _kernels as _compiled
except ImportError:
    _compiled = None


def build_inputs(n_words: int, seed: int = 7):
    rng = random.Random(seed)
    syllables = ["ab", "be", "cri", "dol", "eme", "fu", "gra", "hi", "jo",
                 "ka", "lum", "mor", "ne", "os", "pri", "qua", "ril", "sto",
                 "tu", "vex"]
    fulls = {a + b for a in syllables for b in syllables}
    vocab = set(syllables) | fulls | {"##" + s for s in syllables} | {
        "##" + a + b for a in syllables for b in syllables if rng.random() < 0.3}
    words = []
    for _ in range(n_words):
        word = "".join(rng.choice(syllables) for _ in range(rng.randint(1, 4)))
        words.append(word)
    text = " ".join(
        w + rng.choice(["", "", "", ",", "."]) for w in words)
    return vocab, words, text


def time_call(fn, *args, repeats=3):
    best = float("inf")
    result = None
    for _ in range(repeats):
        start = time.perf_counter()
        result = fn(*args)
        best = min(best, time.perf_counter() - start)
    return best, result


def run_split(kernels, text):
    return kernels.split_words(text)


def run_wordpiece(kernels, words, vocab):
    out = 0
    for w in words:
        pieces = kernels.wordpiece(w, vocab, 100)
        out += len(pieces) if pieces else 1
    return out


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--words", type=int, default=200_000)
    args = parser.parse_args()

    vocab, words, text = build_inputs(args.words)
    rows = []
    for name, kernels in (("pure-python", _kernels_py),
                          ("compiled", _compiled)):
        if kernels is None:
            print("compiled kernels not available; built the extension with "
                  "'pip install -e .'")
            continue
        t_split, split_result = time_call(run_split, kernels, text)
        t_wp, piece_count = time_call(run_wordpiece, kernels, words, vocab)
        rows.append((name, t_split, len(split_result) / t_split,
                     t_wp, len(words) / t_wp))
        print(f"{name:12s} split_words: {t_split * 1e3:8.1f} ms "
              f"({len(split_result) / t_split / 1e6:6.2f} M words/s)   "
              f"wordpiece: {t_wp * 1e3:8.1f} ms "
              f"({len(words) / t_wp / 1e3:7.1f} K words/s, "
              f"{piece_count} pieces)")

    if len(rows) == 2:
        print(f"{'speedup':12s} split_words: {rows[0][1] / rows[1][1]:.2f}x   "
              f"wordpiece: {rows[0][3] / rows[1][3]:.2f}x")


if __name__ == "__main__":
    main()
