#!/usr/bin/env python3
"""Regenerate the bundled selftest data under src/precog/data/.

The dataset is fully deterministic: 50 synthetic examples in five groups of
ten, engineered so that under the bundled mock corpus with k=5 the precog
values of the groups land in the five 20-point bins, lexcov and length are
spread over several bins, and per-bin accuracy increases with precog.
"""

import json
import os
import random

HERE = os.path.dirname(os.path.abspath(__file__))
DATA_DIR = os.path.join(HERE, "..", "src", "precog", "data")

SPECIALS = ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"]
TOP5 = ["the", "a", "to", "of", "and"]
NOUNS = ["cat", "dog", "bird", "fish", "house", "tree", "river", "sky", "moon",
         "sun", "star", "cloud", "rain", "boat", "road"]
VERBS = ["runs", "sits", "sleeps", "eats", "sees", "flies", "swims", "waits",
         "sings", "plays"]
ADJS = ["big", "small", "red", "blue", "old", "new", "bright", "dark",
        "quiet", "loud"]
PREPS = ["on", "in", "at", "with", "under", "over", "near"]
PIECES = ["un", "##aff", "##able", "##ing", "##s", "##ly"]
PUNCT = [".", ",", "!", "?"]

OTHERS = NOUNS + VERBS + ADJS + PREPS
OOV_WORDS = ["qzxv", "zorply", "blenth", "vrimp", "snurf", "glorp", "wexqi",
             "jubrix", "kralve", "drofus"]

# (n_top5, n_other, n_oov) per example; groups of ten target precog bins
# [0,20], (20,40], (40,60], (60,80], (80,100] under the k=5 mock backend.
GROUP_SPECS = [
    [(0, 3, 1), (1, 6, 3), (0, 2, 6), (1, 8, 1), (0, 5, 3),
     (1, 10, 5), (0, 4, 0), (2, 10, 8), (0, 1, 7), (1, 4, 1)],
    [(1, 2, 1), (3, 6, 1), (2, 3, 1), (4, 7, 1), (3, 4, 1),
     (5, 8, 3), (2, 4, 0), (4, 5, 3), (6, 10, 4), (2, 6, 0)],
    [(2, 2, 0), (5, 4, 1), (3, 3, 0), (6, 5, 1), (4, 3, 1),
     (8, 6, 2), (3, 2, 1), (5, 3, 2), (10, 8, 2), (7, 4, 1)],
    [(3, 1, 0), (7, 2, 1), (4, 2, 0), (8, 3, 1), (6, 2, 0),
     (11, 4, 1), (4, 1, 1), (8, 2, 0), (14, 5, 1), (9, 3, 0)],
    [(4, 0, 0), (9, 1, 0), (5, 1, 0), (11, 1, 0), (7, 1, 0),
     (14, 2, 0), (6, 0, 0), (9, 0, 1), (18, 2, 0), (11, 0, 1)],
]
# correctness per group member; group accuracies 0.3, 0.5, 0.6, 0.8, 1.0
GROUP_CORRECT = [
    [1, 0, 0, 1, 0, 0, 1, 0, 0, 0],
    [1, 0, 1, 0, 1, 0, 1, 0, 1, 0],
    [1, 1, 0, 1, 0, 1, 0, 1, 0, 1],
    [1, 1, 1, 0, 1, 1, 1, 0, 1, 1],
    [1, 1, 1, 1, 1, 1, 1, 1, 1, 1],
]

CORPUS_LINES = (
    ["the a to of and"] * 7
    + ["the the the the the", "a a a", "to to", "of"]
    + ["cat sits on tree", "dog runs near road", "bird flies over cloud",
       "fish swims under river", "moon sun star sky", "rain waits at house",
       "boat sees old tree", "big small red blue", "new bright dark quiet",
       "loud sings plays sleeps", "eats with in on"]
)


def cycle_take(pool, start, n):
    return [pool[(start + i) % len(pool)] for i in range(n)]


def build_example(index, spec):
    n5, n_other, n_oov = spec
    words = (cycle_take(TOP5, index % 5, n5)
             + cycle_take(OTHERS, (index * 3) % len(OTHERS), n_other)
             + cycle_take(OOV_WORDS, index % len(OOV_WORDS), n_oov))
    random.Random(1000 + index).shuffle(words)
    is_pair = index % 5 == 4 and len(words) >= 4
    if is_pair:
        cut = (len(words) * 3) // 5
        return " ".join(words[:cut]), " ".join(words[cut:])
    return " ".join(words), None


def main():
    os.makedirs(DATA_DIR, exist_ok=True)

    vocab = SPECIALS + TOP5 + NOUNS + VERBS + ADJS + PREPS + PIECES + PUNCT
    with open(os.path.join(DATA_DIR, "selftest_vocab.txt"), "w") as fh:
        fh.write("\n".join(vocab) + "\n")

    with open(os.path.join(DATA_DIR, "selftest_corpus.txt"), "w") as fh:
        fh.write("\n".join(CORPUS_LINES) + "\n")

    examples = []
    predictions = []
    index = 0
    for group, specs in enumerate(GROUP_SPECS):
        for member, spec in enumerate(specs):
            a, b = build_example(index, spec)
            eid = f"s{index:03d}"
            gold = "pos" if index % 2 == 0 else "neg"
            record = {"id": eid, "a": a}
            if b is not None:
                record["b"] = b
            record["label"] = gold
            examples.append(record)
            correct = bool(GROUP_CORRECT[group][member])
            predicted = gold if correct else ("neg" if gold == "pos" else "pos")
            predictions.append({"id": eid, "label": predicted})
            index += 1

    with open(os.path.join(DATA_DIR, "selftest_dataset.jsonl"), "w") as fh:
        for record in examples:
            fh.write(json.dumps(record) + "\n")
    with open(os.path.join(DATA_DIR, "selftest_predictions.jsonl"), "w") as fh:
        for record in predictions:
            fh.write(json.dumps(record) + "\n")
    print(f"wrote {len(vocab)}-token vocab, {len(CORPUS_LINES)} corpus lines, "
          f"{len(examples)} examples to {os.path.normpath(DATA_DIR)}")


if __name__ == "__main__":
    main()
