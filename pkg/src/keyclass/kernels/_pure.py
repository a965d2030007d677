"""Pure-Python kernel backend.

Reference semantics for the Cython extension: same packed-key encoding,
same output ordering. Kept dependency-free beyond numpy so it always
imports.
"""

import numpy as np

NGRAM_SHIFT = 21
# ids are stored as id+1 in 21-bit slots; 0 marks an empty slot
MAX_TOKEN_ID = (1 << NGRAM_SHIFT) - 2
_SLOT_MASK = (1 << NGRAM_SHIFT) - 1


def pack_ngram(ids):
    """Pack a 1..3-token id sequence into one int64 key."""
    if not 1 <= len(ids) <= 3:
        raise ValueError("only 1..3-grams can be packed")
    key = 0
    for slot, tok in enumerate(ids):
        if not 0 <= tok <= MAX_TOKEN_ID:
            raise ValueError(f"token id {tok} out of packable range")
        key |= (tok + 1) << (slot * NGRAM_SHIFT)
    return key


def unpack_ngram(key):
    """Inverse of :func:`pack_ngram`."""
    ids = []
    while key:
        ids.append((key & _SLOT_MASK) - 1)
        key >>= NGRAM_SHIFT
    return tuple(ids)


def count_ngram_df(docs, max_n):
    """Document frequency of every distinct {1..max_n}-gram.

    Parameters
    ----------
    docs : sequence of int32 arrays
        One token-id sequence per document.
    max_n : int
        Longest n-gram length, 1..3.

    Returns
    -------
    (keys, counts) : int64 arrays, sorted by key
        Packed n-gram keys and the number of documents containing each at
        least once.
    """
    if not 1 <= max_n <= 3:
        raise ValueError("max_n must be in 1..3")
    df = {}
    for ids in docs:
        toks = [int(t) for t in ids]
        length = len(toks)
        seen = set()
        for start in range(length):
            key = 0
            top = min(max_n, length - start)
            for n in range(top):
                key |= (toks[start + n] + 1) << (n * NGRAM_SHIFT)
                seen.add(key)
        for key in seen:
            df[key] = df.get(key, 0) + 1
    keys = np.fromiter(df.keys(), dtype=np.int64, count=len(df))
    counts = np.fromiter(df.values(), dtype=np.int64, count=len(df))
    order = np.argsort(keys, kind="stable")
    return keys[order], counts[order]


def match_ngrams(docs, patterns):
    """Find which packed n-gram patterns occur in which documents.

    Parameters
    ----------
    docs : sequence of int32 arrays
        One token-id sequence per document.
    patterns : int64 array
        Packed n-gram keys to search for (need not be unique-free; each
        index is reported independently).

    Returns
    -------
    (doc_idx, pat_idx) : int64 arrays
        One pair per (document, pattern) hit, sorted by document then
        pattern index. A pattern matches when its token-id sequence occurs
        contiguously in the document.
    """
    lookup = {}
    max_len = 1
    for j, key in enumerate(np.asarray(patterns, dtype=np.int64)):
        lookup.setdefault(int(key), []).append(j)
        max_len = max(max_len, len(unpack_ngram(int(key))))
    doc_hits = []
    pat_hits = []
    for i, ids in enumerate(docs):
        toks = [int(t) for t in ids]
        length = len(toks)
        found = set()
        for start in range(length):
            key = 0
            top = min(max_len, length - start)
            for n in range(top):
                key |= (toks[start + n] + 1) << (n * NGRAM_SHIFT)
                if key in lookup:
                    found.update(lookup[key])
        for j in sorted(found):
            doc_hits.append(i)
            pat_hits.append(j)
    return (
        np.asarray(doc_hits, dtype=np.int64),
        np.asarray(pat_hits, dtype=np.int64),
    )
