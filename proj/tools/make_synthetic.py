#!/usr/bin/env python3
"""Regenerates the bundled synthetic corpus under data/synthetic/.

The corpus has 3 topics x 2 stances and 9 key points, with 30 train, 12 dev
and 24 test arguments. Each key point carries one signature word; an argument
matches a key point exactly when it contains that word twice. Filler words
come from small shared pools, so the match structure is visible to tf-idf
features of the concatenated input but not to the generic embeddings.

Embedding files:
  embeddings.jsonl        small noise, both variants
  embeddings_topic.jsonl  with_topic carries the label; no_topic only does so
                          for two of the three topics
  embeddings_hard.jsonl   label signal whose sign flips in a hard cluster

Output is fully determined by SEED.
"""

import argparse
import csv
import json
import os
import random

SEED = 20211
DIM = 8
LAYERS = 4
KP_FILL = 2
ARG_FILL = 4
# A matching argument repeats its key point's signature word.
SIG_REP = 2
NOISE = 0.1

TOPICS = [
    "Social media platforms should be regulated by the government",
    "Homeschooling should be banned",
    "Routine child vaccinations should be mandatory",
]

# (topic index, stance) -> signature words of that group's key points
GROUPS = [
    (0, 1, ["privacy", "misinformation"]),
    (0, -1, ["censorship", "innovation"]),
    (1, 1, ["socialization", "standards"]),
    (1, -1, ["flexibility"]),
    (2, 1, ["outbreaks"]),
    (2, -1, ["autonomy"]),
]

KP_FILLER = ["matters", "greatly", "protects"]
ARG_FILLER = ["i", "think", "because", "really", "would", "many"]

# Every surface word gets a fixed (UPOS, DEPREL) drawn from the frequent tag sets.
POS_TAGS = ["NOUN", "VERB", "ADJ", "ADV", "PRON", "DET", "ADP", "AUX", "PROPN", "SCONJ"]
DEP_TAGS = ["nsubj", "dobj", "amod", "aux", "prep", "pobj", "compound", "conj", "ccomp", "ROOT"]

SEP = "[SEP]"


def tag_of(word):
    if word == SEP:
        return "PUNCT", "punct"
    h = sum(ord(c) * (i + 1) for i, c in enumerate(word.lower()))
    return POS_TAGS[h % len(POS_TAGS)], DEP_TAGS[(h // 7) % len(DEP_TAGS)]


def make_keypoints(rng):
    kps = []
    n = 0
    for topic, stance, sigs in GROUPS:
        for sig in sigs:
            filler = rng.sample(KP_FILLER, KP_FILL)
            kps.append({
                "id": f"kp_{topic}_{n}",
                "text": " ".join([sig] + filler),
                "topic": TOPICS[topic],
                "stance": stance,
                "sig": sig,
            })
            n += 1
    return kps


def make_arguments(rng, split, plan):
    """plan: per group, list of signature words (None = matches nothing)."""
    args = []
    for g, (topic, stance, _) in enumerate(GROUPS):
        for i, sig in enumerate(plan[g]):
            words = rng.sample(ARG_FILLER, ARG_FILL)
            if sig is not None:
                for _ in range(SIG_REP):
                    words.insert(rng.randrange(len(words) + 1), sig)
            args.append({
                "id": f"arg_{split}_{g}_{i}",
                "text": " ".join(words),
                "topic": TOPICS[topic],
                "stance": stance,
                "sig": sig,
            })
    return args


def split_plan(split):
    plans = []
    for _, _, sigs in GROUPS:
        if split == "train":
            plan = [sigs[0], sigs[-1], sigs[0], sigs[-1], None] if len(sigs) == 2 else \
                   [sigs[0], sigs[0], sigs[0], None, None]
        elif split == "dev":
            plan = [sigs[0], None] if len(sigs) == 1 else [sigs[0], sigs[1]]
        else:
            plan = [sigs[0], sigs[-1], None, None] if len(sigs) == 2 else \
                   [sigs[0], sigs[0], None, None]
        plans.append(plan)
    return plans


def pairs_of(args, kps):
    out = []
    for a in args:
        for k in kps:
            if a["topic"] == k["topic"] and a["stance"] == k["stance"]:
                out.append((a, k))
    return out


def write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def noise(rng, scale=1.0):
    return [rng.gauss(0.0, scale) for _ in range(DIM)]


def layers_with_signal(rng, signal, dims, noise_scale):
    """Four layers; the signal grows towards the final hidden state."""
    out = []
    for level in (0.25, 0.5, 0.75, 1.0):
        v = noise(rng, noise_scale)
        for d, s in dims:
            v[d] += level * s * signal
        out.append(v)
    return out


def fmt_layers(layers):
    return [[round(x, 6) for x in layer] for layer in layers]


def emit_record(f, pair_id, variant, layers):
    f.write(json.dumps({"pair_id": pair_id, "variant": variant, "layers": fmt_layers(layers)},
                       separators=(",", ":")) + "\n")


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default=os.path.join(os.path.dirname(__file__), "..", "data",
                                                  "synthetic"))
    out = ap.parse_args().out
    os.makedirs(out, exist_ok=True)
    rng = random.Random(SEED)

    kps = make_keypoints(rng)
    splits = {s: make_arguments(rng, s, split_plan(s)) for s in ("train", "dev", "test")}

    all_pairs = []
    for split, args in splits.items():
        write_csv(os.path.join(out, f"arguments_{split}.csv"),
                  ["arg_id", "argument", "topic", "stance"],
                  [[a["id"], a["text"], a["topic"], a["stance"]] for a in args])
        write_csv(os.path.join(out, f"key_points_{split}.csv"),
                  ["key_point_id", "key_point", "topic", "stance"],
                  [[k["id"], k["text"], k["topic"], k["stance"]] for k in kps])
        rows = []
        pairs = pairs_of(args, kps)
        for n, (a, k) in enumerate(pairs):
            match = a["sig"] == k["sig"]
            # Leave every fifth non-matching pair unlabeled (Undecided).
            if not match and n % 5 == 2:
                continue
            rows.append([a["id"], k["id"], 1 if match else 0])
        write_csv(os.path.join(out, f"labels_{split}.csv"),
                  ["arg_id", "key_point_id", "label"], rows)
        all_pairs.extend(pairs)

    # Auxiliary corpora.
    sigs = [k["sig"] for k in kps]
    sts_rows, ibm_rows = [], []
    for i in range(40):
        a_sig = rng.choice(sigs)
        same = i % 2 == 0
        b_sig = a_sig if same else rng.choice([s for s in sigs if s != a_sig])
        a = " ".join([a_sig] + rng.sample(ARG_FILLER, 4))
        b = " ".join([b_sig] + rng.sample(KP_FILLER, 3))
        score = round(rng.uniform(3.5, 5.0) if same else rng.uniform(0.0, 1.5), 2)
        sts_rows.append([f"sts_{i}", a, b, score])
    for i in range(40):
        topic = rng.choice(TOPICS)
        arg = " ".join(rng.sample(ARG_FILLER, 6))
        ibm_rows.append([arg, topic, "train", round(rng.uniform(0.0, 1.0), 4),
                         round(rng.uniform(0.0, 1.0), 4)])
    with open(os.path.join(out, "sts.tsv"), "w", encoding="utf-8") as f:
        f.write("id\tsentence1\tsentence2\tscore\n")
        for r in sts_rows:
            f.write("\t".join(str(x) for x in r) + "\n")
    write_csv(os.path.join(out, "ibm30k.csv"), ["argument", "topic", "set", "WA", "MACE-P"],
              [[r[0], r[1], r[2], r[3], r[4]] for r in ibm_rows])

    # Annotations: one sentence per concatenated input (with topic).
    def doc(doc_id, text):
        lines = [f"# doc_id = {doc_id}"]
        for i, w in enumerate(text.split(" "), 1):
            pos, dep = tag_of(w)
            lines.append(f"{i}\t{w}\t{pos}\t{dep}")
        return "\n".join(lines) + "\n\n"

    with open(os.path.join(out, "annotations.conllu"), "w", encoding="utf-8") as f:
        for a, k in all_pairs:
            f.write(doc(f"{a['id']}::{k['id']}",
                        f"{k['text']} {SEP} {a['text']} {SEP} {a['topic']}"))
    with open(os.path.join(out, "aux_annotations.conllu"), "w", encoding="utf-8") as f:
        for r in sts_rows:
            f.write(doc(r[0], f"{r[1]} {SEP} {r[2]}"))
        for i, r in enumerate(ibm_rows):
            f.write(doc(f"ibm_{i}", f"{r[0]} {SEP} {r[1]}"))

    # Embeddings.
    topic_of = {t: i for i, t in enumerate(TOPICS)}
    with open(os.path.join(out, "embeddings.jsonl"), "w", encoding="utf-8") as f:
        for a, k in all_pairs:
            pid = f"{a['id']}::{k['id']}"
            for variant in ("with_topic", "no_topic"):
                emit_record(f, pid, variant, [noise(rng, NOISE) for _ in range(LAYERS)])

    with open(os.path.join(out, "embeddings_topic.jsonl"), "w", encoding="utf-8") as f:
        for a, k in all_pairs:
            pid = f"{a['id']}::{k['id']}"
            signal = 1.0 if a["sig"] == k["sig"] else -1.0
            emit_record(f, pid, "with_topic",
                        layers_with_signal(rng, signal, [(0, 2.0)], 0.5))
            # Without the topic the encoder cannot place the last topic's pairs.
            nt = signal if topic_of[a["topic"]] < 2 else 0.0
            emit_record(f, pid, "no_topic", layers_with_signal(rng, nt, [(0, 2.0)], 0.5))

    with open(os.path.join(out, "embeddings_hard.jsonl"), "w", encoding="utf-8") as f:
        for a, k in all_pairs:
            pid = f"{a['id']}::{k['id']}"
            signal = 1.0 if a["sig"] == k["sig"] else -1.0
            hard = topic_of[a["topic"]] == 2
            dims = [(0, -1.5), (1, 1.0)] if hard else [(0, 1.5)]
            layers = layers_with_signal(rng, signal, dims, 0.4)
            for layer in layers:
                layer[2] = 1.0 if hard else 0.0
            for variant in ("with_topic", "no_topic"):
                emit_record(f, pid, variant, layers)

    for name, rows in (("sts_embeddings.jsonl", [r[0] for r in sts_rows]),
                       ("ibm30k_embeddings.jsonl", [f"ibm_{i}" for i in range(len(ibm_rows))])):
        with open(os.path.join(out, name), "w", encoding="utf-8") as f:
            for rid in rows:
                emit_record(f, rid, "no_topic", [noise(rng) for _ in range(LAYERS)])


if __name__ == "__main__":
    main()
