# cython: language_level=3, boundscheck=False, wraparound=False
# distutils: language = c++
"""Cython kernel backend: same packed-key encoding and output ordering as
the pure backend, with C++ hash containers doing the inner loops."""

import numpy as np

cimport numpy as cnp
from cython.operator cimport dereference as deref, preincrement as inc
from libc.stdint cimport int32_t, int64_t
from libcpp.algorithm cimport sort as cpp_sort
from libcpp.unordered_map cimport unordered_map
from libcpp.unordered_set cimport unordered_set
from libcpp.vector cimport vector

cnp.import_array()

cdef int NGRAM_SHIFT = 21


def count_ngram_df(docs, int max_n):
    """Document frequency of every distinct {1..max_n}-gram."""
    if not 1 <= max_n <= 3:
        raise ValueError("max_n must be in 1..3")
    cdef unordered_map[int64_t, int64_t] df
    cdef unordered_set[int64_t] seen
    cdef unordered_set[int64_t].iterator sit
    cdef unordered_map[int64_t, int64_t].iterator mit
    cdef const int32_t[::1] toks
    cdef Py_ssize_t start, length
    cdef int n, top
    cdef int64_t key
    for ids in docs:
        toks = np.ascontiguousarray(ids, dtype=np.int32)
        length = toks.shape[0]
        seen.clear()
        for start in range(length):
            key = 0
            top = min(max_n, <int> (length - start))
            for n in range(top):
                key |= (<int64_t> toks[start + n] + 1) << (n * NGRAM_SHIFT)
                seen.insert(key)
        sit = seen.begin()
        while sit != seen.end():
            df[deref(sit)] += 1
            inc(sit)
    keys_arr = np.empty(df.size(), dtype=np.int64)
    counts_arr = np.empty(df.size(), dtype=np.int64)
    cdef int64_t[::1] keys = keys_arr
    cdef int64_t[::1] counts = counts_arr
    cdef Py_ssize_t pos = 0
    mit = df.begin()
    while mit != df.end():
        keys[pos] = deref(mit).first
        counts[pos] = deref(mit).second
        pos += 1
        inc(mit)
    order = np.argsort(keys_arr, kind="stable")
    return keys_arr[order], counts_arr[order]


def match_ngrams(docs, patterns):
    """(doc_idx, pat_idx) pairs for every pattern occurrence, sorted."""
    cdef cnp.ndarray[int64_t, ndim=1] pats = np.ascontiguousarray(
        patterns, dtype=np.int64
    )
    cdef unordered_map[int64_t, vector[int64_t]] lookup
    cdef unordered_map[int64_t, vector[int64_t]].iterator lit
    cdef vector[int64_t]* vec
    cdef Py_ssize_t j, k, npat = pats.shape[0]
    cdef int max_len = 1, cur
    cdef int64_t key
    for j in range(npat):
        key = pats[j]
        lookup[key].push_back(j)
        cur = 0
        while key:
            cur += 1
            key >>= NGRAM_SHIFT
        if cur > max_len:
            max_len = cur
    cdef vector[int64_t] doc_hits
    cdef vector[int64_t] pat_hits
    cdef unordered_set[int64_t] found
    cdef vector[int64_t] hits
    cdef const int32_t[::1] toks
    cdef Py_ssize_t i = 0, start, length
    cdef int n, top
    for ids in docs:
        toks = np.ascontiguousarray(ids, dtype=np.int32)
        length = toks.shape[0]
        found.clear()
        for start in range(length):
            key = 0
            top = min(max_len, <int> (length - start))
            for n in range(top):
                key |= (<int64_t> toks[start + n] + 1) << (n * NGRAM_SHIFT)
                lit = lookup.find(key)
                if lit != lookup.end():
                    vec = &deref(lit).second
                    for k in range(<Py_ssize_t> vec.size()):
                        found.insert(deref(vec)[k])
        hits.assign(found.begin(), found.end())
        cpp_sort(hits.begin(), hits.end())
        for k in range(<Py_ssize_t> hits.size()):
            doc_hits.push_back(i)
            pat_hits.push_back(hits[k])
        i += 1
    out_docs = np.empty(doc_hits.size(), dtype=np.int64)
    out_pats = np.empty(pat_hits.size(), dtype=np.int64)
    cdef int64_t[::1] od = out_docs
    cdef int64_t[::1] op = out_pats
    for k in range(<Py_ssize_t> doc_hits.size()):
        od[k] = doc_hits[k]
        op[k] = pat_hits[k]
    return out_docs, out_pats
