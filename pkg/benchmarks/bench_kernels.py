"""Benchmark the compiled string kernels against the pure-Python twin.

Generates a synthetic token-id corpus, checks that both backends agree on
it, then times document-frequency counting and n-gram matching.

    python3 benchmarks/bench_kernels.py --docs 4000 --tokens 80
"""

import argparse
import time

import numpy as np

from keyclass.kernels import _pure, pack_ngram

try:
    from keyclass.kernels import _ngrams
except ImportError:
    _ngrams = None


def make_corpus(rng, n_docs, tokens_per_doc, vocab):
    # zipf-ish draw so frequent ids dominate, as in real text
    weights = 1.0 / np.arange(1, vocab + 1)
    weights /= weights.sum()
    return [
        rng.choice(vocab, size=tokens_per_doc, p=weights).astype(np.int32)
        for _ in range(n_docs)
    ]


def make_patterns(rng, docs, count):
    """Sample n-grams that actually occur, plus a few that never will."""
    keys = []
    for _ in range(count - count // 10):
        doc = docs[rng.integers(len(docs))]
        n = int(rng.integers(1, 4))
        start = int(rng.integers(0, len(doc) - n + 1))
        keys.append(pack_ngram([int(t) for t in doc[start:start + n]]))
    misses = rng.integers(2**20 - 3, 2**20 - 1, size=count // 10)
    keys.extend(pack_ngram([int(t)]) for t in misses)
    return np.unique(np.asarray(keys, dtype=np.int64))


def best_time(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def check_agreement(docs, patterns, max_n):
    pk, pc = _pure.count_ngram_df(docs, max_n)
    ck, cc = _ngrams.count_ngram_df(docs, max_n)
    assert np.array_equal(pk, ck) and np.array_equal(pc, cc)
    pd, pp = _pure.match_ngrams(docs, patterns)
    cd, cp = _ngrams.match_ngrams(docs, patterns)
    assert np.array_equal(pd, cd) and np.array_equal(pp, cp)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--docs", type=int, default=4000)
    ap.add_argument("--tokens", type=int, default=80)
    ap.add_argument("--vocab", type=int, default=30000)
    ap.add_argument("--patterns", type=int, default=500)
    ap.add_argument("--max-n", type=int, default=3, choices=[1, 2, 3])
    ap.add_argument("--repeats", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    docs = make_corpus(rng, args.docs, args.tokens, args.vocab)
    patterns = make_patterns(rng, docs, args.patterns)
    print(
        f"corpus: {args.docs} docs x {args.tokens} tokens, "
        f"vocab {args.vocab}, max_n {args.max_n}, "
        f"{patterns.size} patterns, best of {args.repeats}"
    )

    if _ngrams is None:
        print("compiled backend not built; timing the fallback only")
    else:
        small = docs[: min(len(docs), 500)]
        check_agreement(small, patterns, args.max_n)
        print("backends agree on a 500-doc sample")

    jobs = [
        ("count_ngram_df", lambda mod: mod.count_ngram_df(docs, args.max_n)),
        ("match_ngrams", lambda mod: mod.match_ngrams(docs, patterns)),
    ]
    for name, call in jobs:
        pure_t = best_time(lambda: call(_pure), args.repeats)
        print(f"{name:16s} pure    {pure_t:8.3f} s")
        if _ngrams is not None:
            cy_t = best_time(lambda: call(_ngrams), args.repeats)
            print(f"{name:16s} cython  {cy_t:8.3f} s   {pure_t / cy_t:6.1f}x")


if __name__ == "__main__":
    main()
