#!/usr/bin/env python3
"""Regenerates the bundled test fixtures under tests/fixtures/.

Lexicon: every CVCV word over {b,d,k,m,s,t} x {a,e,i,o}, Zipf-like counts.
Embeddings: linear in the trigram form vectors plus gaussian noise.
Trials: three participants, words and CVCVCV nonwords.
"""
import pathlib
import numpy as np

OUT = pathlib.Path(__file__).resolve().parent.parent / "tests" / "fixtures"
rng = np.random.default_rng(20240101)

cons, vows = "bdkmst", "aeio"
syl = [c + v for c in cons for v in vows]
words = [a + b for a in syl for b in syl]


def cues(w, n=3):
    p = "#" + w + "#"
    return [p[i:i + n] for i in range(len(p) - n + 1)]


inventory = sorted({c for w in words for c in cues(w)})
col = {c: i for i, c in enumerate(inventory)}
C = np.zeros((len(words), len(inventory)))
for r, w in enumerate(words):
    for c in cues(w):
        C[r, col[c]] = 1.0

dim = 24
S = C @ rng.normal(size=(len(inventory), dim)) + 0.3 * rng.normal(size=(len(words), dim))
ranks = rng.permutation(len(words)) + 1
freqs = np.maximum(1, np.round(20000.0 / ranks ** 1.1)).astype(int)
freqs[rng.choice(len(words), 4, replace=False)] = 0

with open(OUT / "lexicon.tsv", "w") as f:
    f.write("form\tfrequency\n")
    for w, fr in zip(words, freqs):
        f.write(f"{w}\t{fr}\n")

with open(OUT / "embeddings.txt", "w") as f:
    f.write(f"{len(words)} {dim}\n")
    order = rng.permutation(len(words))
    for i in order:
        f.write(words[i] + " " + " ".join(f"{v:.6f}" for v in S[i]) + "\n")

nonwords = sorted({a + b + c for a in syl for b in syl for c in syl})
with open(OUT / "trials.tsv", "w") as f:
    f.write("participant\torder\tform\tis_word\trt_ms\n")
    for p in ("p01", "p02", "p03"):
        items = [(w, 1) for w in rng.choice(words, 45)] + \
                [(w, 0) for w in rng.choice(nonwords, 15)]
        rng.shuffle(items)
        for k, (w, lex) in enumerate(items):
            base = 560.0 if lex else 640.0
            fr = freqs[words.index(w)] if lex else 0
            rt = base - 18.0 * np.log1p(fr) + rng.normal(0, 45)
            f.write(f"{p}\t{k + 1}\t{w}\t{lex}\t{max(rt, 250.0):.1f}\n")

# Phone-segmented lexicon in the dot-separated unit format.
phones = [("i1.x.ia4.z.ii5", 12), ("i1.x.ia4", 30), ("x.ia4.z.ii5", 7),
          ("z.ii5", 55), ("i1.z.ii5", 3)]
with open(OUT / "lexicon_phones.tsv", "w") as f:
    f.write("form\tfrequency\tsegmentation\n")
    for k, (seg, fr) in enumerate(phones):
        f.write(f"w{k}\t{fr}\t{seg}\n")
