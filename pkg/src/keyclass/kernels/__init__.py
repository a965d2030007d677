"""Hot string kernels with a compiled core and a pure-Python fallback.

Two operations dominate corpus-scale runs: counting document frequencies of
{1..3}-grams and locating keyword n-grams inside documents. Both are plain
loops over token-id sequences, so they ship as a Cython extension
(``_ngrams``) with a behaviorally identical pure-Python twin (``_pure``).
The backend is chosen once at import: the extension when it is built,
otherwise the fallback. Set ``KEYCLASS_PURE_PYTHON=1`` to force the
fallback (used by the parity tests and the benchmark).

Both backends speak packed n-gram keys: token ids are 21-bit (id+1, so an
empty slot is 0) and up to three of them are packed little-endian into one
int64. ``pack_ngram``/``unpack_ngram`` are the reference converters.
"""

import os

from keyclass.kernels._pure import (
    MAX_TOKEN_ID,
    NGRAM_SHIFT,
    pack_ngram,
    unpack_ngram,
)
from keyclass.kernels import _pure

BACKEND = "pure"
count_ngram_df = _pure.count_ngram_df
match_ngrams = _pure.match_ngrams

if not os.environ.get("KEYCLASS_PURE_PYTHON"):
    try:
        from keyclass.kernels import _ngrams

        BACKEND = "cython"
        count_ngram_df = _ngrams.count_ngram_df
        match_ngrams = _ngrams.match_ngrams
    except ImportError:
        pass

__all__ = [
    "BACKEND",
    "MAX_TOKEN_ID",
    "NGRAM_SHIFT",
    "count_ngram_df",
    "match_ngrams",
    "pack_ngram",
    "unpack_ngram",
]
