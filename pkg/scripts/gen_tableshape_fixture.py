#!/usr/bin/env python3
"""Regenerate the table-shape fixture under tests/fixtures/tableshape/.

Two tasks of 80 examples, 16 per 20-point precog bin at values
0.10/0.30/0.50/0.70/0.90. Two prediction sets with per-bin correct counts
(4,6,8,10,12) and (8,9,10,11,12): the resulting bin accuracies are exact
dyadic rationals, linear in the bin midpoints, so the pooled Pearson
correlation is exactly 1.0 for both sets and every reported number is
hand-checkable:

    per task the (80,100] interval holds 16 samples (ft 0.7500, da 0.7500)
    and [0,80] holds 64 (ft 28/64 = 0.4375, da 38/64 = 0.59375).
"""

import json
import os

HERE = os.path.dirname(os.path.abspath(__file__))
OUT = os.path.join(HERE, "..", "tests", "fixtures", "tableshape")

BIN_VALUES = [0.10, 0.30, 0.50, 0.70, 0.90]
PER_BIN = 16
FT_CORRECT = [4, 6, 8, 10, 12]
DA_CORRECT = [8, 9, 10, 11, 12]


def main():
    os.makedirs(OUT, exist_ok=True)
    scores = []
    for task in ("taska", "taskb"):
        rows, ft, da = [], [], []
        for b, value in enumerate(BIN_VALUES):
            for j in range(PER_BIN):
                i = b * PER_BIN + j
                eid = f"{task[-1]}{i:03d}"
                gold = "pos" if i % 2 == 0 else "neg"
                flipped = "neg" if gold == "pos" else "pos"
                rows.append({"id": eid, "a": f"sample text {eid}",
                             "label": gold})
                ft.append({"id": eid,
                           "label": gold if j < FT_CORRECT[b] else flipped})
                da.append({"id": eid,
                           "label": gold if j < DA_CORRECT[b] else flipped})
                scores.append({"eid": eid, "task": task, "measure": "precog",
                               "value": value, "k": 100,
                               "t_wordpiece": 3, "t_words": 3})
        for name, payload in ((f"{task}.jsonl", rows),
                              (f"{task}_ft.jsonl", ft),
                              (f"{task}_da.jsonl", da)):
            with open(os.path.join(OUT, name), "w") as fh:
                for record in payload:
                    fh.write(json.dumps(record) + "\n")
    with open(os.path.join(OUT, "scores.jsonl"), "w") as fh:
        for record in scores:
            fh.write(json.dumps(record, sort_keys=True) + "\n")
    print(f"wrote {len(scores)} score records to {os.path.normpath(OUT)}")


if __name__ == "__main__":
    main()
