#!/usr/bin/env python3
# Copyright 2026 The wordlens Authors
# SPDX-License-Identifier: Apache-2.0
"""Regenerates the shipped toy vocabulary and synthetic dataset in data/.

The vocabulary is 256 byte tokens plus 100 merges learned from the dataset
prompts, using the same byte mapping and whitespace pre-split as the C++
tokenizer. Output is deterministic.
"""

import collections
import json
import os
import random

NUM_MERGES = 100
NUM_RECORDS = 40
LABELS = ["A", "B", "C", "D"]

CATEGORIES = {
    "fruit": ["apple", "banana", "cherry", "grape", "lemon", "mango", "peach"],
    "animal": ["horse", "tiger", "rabbit", "eagle", "otter", "camel", "zebra"],
    "color": ["red", "green", "blue", "yellow", "purple", "orange", "black"],
    "tool": ["hammer", "wrench", "saw", "drill", "shovel", "chisel", "pliers"],
    "planet": ["mars", "venus", "saturn", "jupiter", "mercury", "neptune"],
}


def bytes_to_unicode():
    bs = (list(range(ord("!"), ord("~") + 1)) + list(range(0xA1, 0xAD)) +
          list(range(0xAE, 0x100)))
    cs = bs[:]
    n = 0
    for b in range(256):
        if b not in bs:
            bs.append(b)
            cs.append(256 + n)
            n += 1
    return {b: chr(c) for b, c in zip(bs, cs)}


def pretokenize(text):
    chunks, start = [], 0
    for i in range(1, len(text)):
        if text[i] in " \n\t\r\v\f":
            chunks.append(text[start:i])
            start = i
    if text:
        chunks.append(text[start:])
    return chunks


def build_prompt(rec):
    out = "Question: " + rec["question"] + "\n"
    for o in rec["options"]:
        out += o["label"] + ". " + o["text"] + "\n"
    return out + "Answer:"


def make_records(rng):
    names = sorted(CATEGORIES)
    records = []
    for i in range(NUM_RECORDS):
        cat = names[i % len(names)]
        right = rng.choice(CATEGORIES[cat])
        others = [w for c in names if c != cat for w in CATEGORIES[c]]
        wrong = rng.sample(others, 3)
        answer = rng.randrange(4)
        words = wrong[:answer] + [right] + wrong[answer:]
        article = "an" if cat[0] in "aeiou" else "a"
        records.append({
            "id": "syn-%03d" % i,
            "question": "Which of these is %s %s?" % (article, cat),
            "options": [{"label": l, "text": w} for l, w in zip(LABELS, words)],
            "answer_label": LABELS[answer],
        })
    return records


def train_merges(texts, table):
    words = collections.Counter()
    for t in texts:
        for chunk in pretokenize(t):
            words[tuple(table[b] for b in chunk.encode("utf-8"))] += 1
    merges = []
    for _ in range(NUM_MERGES):
        pairs = collections.Counter()
        for w, c in words.items():
            for a, b in zip(w, w[1:]):
                pairs[(a, b)] += c
        if not pairs:
            break
        best = min(pairs, key=lambda p: (-pairs[p], p))
        merges.append(best)
        merged = collections.Counter()
        for w, c in words.items():
            out, i = [], 0
            while i < len(w):
                if i + 1 < len(w) and (w[i], w[i + 1]) == best:
                    out.append(w[i] + w[i + 1])
                    i += 2
                else:
                    out.append(w[i])
                    i += 1
            merged[tuple(out)] += c
        words = merged
    return merges


def main():
    root = os.path.join(os.path.dirname(os.path.abspath(__file__)), "..", "data")
    rng = random.Random(20260114)
    records = make_records(rng)
    table = bytes_to_unicode()
    merges = train_merges([build_prompt(r) for r in records], table)

    vocab = {table[b]: b for b in range(256)}
    for a, b in merges:
        vocab.setdefault(a + b, len(vocab))

    with open(os.path.join(root, "toy_vocab.json"), "w", encoding="utf-8",
              newline="\n") as f:
        f.write(json.dumps(vocab, ensure_ascii=False, indent=2) + "\n")
    with open(os.path.join(root, "toy_merges.txt"), "w", encoding="utf-8",
              newline="\n") as f:
        f.write("#version: 0.2\n")
        for a, b in merges:
            f.write(a + " " + b + "\n")
    with open(os.path.join(root, "synthetic_mcqa.jsonl"), "w", encoding="utf-8",
              newline="\n") as f:
        for r in records:
            f.write(json.dumps(r) + "\n")


if __name__ == "__main__":
    main()
