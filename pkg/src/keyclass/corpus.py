"""Dataset ingestion, tokenization, n-gram mining, and TF-IDF truncation.

A corpus is an ordered, immutable list of documents loaded from a
one-document-per-line text file, optionally paired with a parallel label
file (evaluation only). Mining returns the {1..3}-grams whose document
frequency strictly exceeds a threshold, with n-grams made entirely of
stop words removed.
"""

import math
import re
from dataclasses import dataclass

import numpy as np

from keyclass import kernels
from keyclass.errors import LoadError
from keyclass.stopwords import ENGLISH_STOP_WORDS

_TOKEN_RE = re.compile(r"\w{2,}")


def tokenize(text):
    """Lowercased maximal runs of >=2 word characters; shorter runs and
    punctuation are dropped."""
    return _TOKEN_RE.findall(text.lower())


@dataclass(frozen=True)
class Document:
    """One text with an optional gold label set (never used for training)."""

    id: int
    text: str
    gold: frozenset | None = None


@dataclass(frozen=True)
class ClassSpec:
    index: int
    name: str
    description: str


class Corpus:
    """Ordered document collection; order is load order and stable."""

    def __init__(self, documents):
        self.documents = list(documents)
        ids = [d.id for d in self.documents]
        if len(set(ids)) != len(ids):
            raise LoadError("duplicate document ids in corpus")
        self._tokens = None

    @property
    def n(self):
        return len(self.documents)

    def __len__(self):
        return len(self.documents)

    def __iter__(self):
        return iter(self.documents)

    @property
    def texts(self):
        return [d.text for d in self.documents]

    def tokens(self):
        """Per-document token lists, computed once and cached."""
        if self._tokens is None:
            self._tokens = [tokenize(d.text) for d in self.documents]
        return self._tokens

    @property
    def has_gold(self):
        return all(d.gold is not None for d in self.documents)

    @property
    def gold_sets(self):
        if not self.has_gold:
            raise LoadError("corpus has no gold labels")
        return [d.gold for d in self.documents]


def intern_tokens(token_lists):
    """Map token lists to int32 id arrays plus the id->token table.

    Ids are assigned in first-seen order, so the mapping is deterministic
    for a fixed corpus order (and mining itself is order-free).
    """
    table = {}
    id_arrays = []
    for toks in token_lists:
        ids = np.empty(len(toks), dtype=np.int32)
        for k, tok in enumerate(toks):
            tok_id = table.get(tok)
            if tok_id is None:
                tok_id = len(table)
                if tok_id > kernels.MAX_TOKEN_ID:
                    raise LoadError(
                        "corpus has more distinct tokens than the n-gram "
                        f"kernels support ({kernels.MAX_TOKEN_ID + 1})"
                    )
                table[tok] = tok_id
            ids[k] = tok_id
        id_arrays.append(ids)
    vocab = [None] * len(table)
    for tok, tok_id in table.items():
        vocab[tok_id] = tok
    return id_arrays, vocab, table


@dataclass(frozen=True)
class NgramVocabulary:
    """Mined n-grams with their document frequencies, most frequent first."""

    entries: tuple

    @property
    def ngrams(self):
        return [ngram for ngram, _ in self.entries]

    def __len__(self):
        return len(self.entries)


def mine_ngrams(corpus, min_df=0.001, max_n=3):
    """All {1..max_n}-grams with document frequency strictly > min_df.

    Document frequency is the fraction of documents containing the n-gram
    at least once. N-grams in which every token is a stop word are
    removed. Sorted by descending frequency, ties by lexicographic n-gram.
    """
    if not 0 <= min_df < 1:
        raise ValueError("min_df must be in [0, 1)")
    if not 1 <= max_n <= 3:
        raise ValueError("max_n must be in 1..3")
    if corpus.n == 0:
        return NgramVocabulary(entries=())
    id_arrays, vocab, _ = intern_tokens(corpus.tokens())
    keys, counts = kernels.count_ngram_df(id_arrays, max_n)
    n = corpus.n
    entries = []
    for key, count in zip(keys.tolist(), counts.tolist()):
        if count / n <= min_df:
            continue
        toks = [vocab[i] for i in kernels.unpack_ngram(key)]
        if all(t in ENGLISH_STOP_WORDS for t in toks):
            continue
        entries.append((" ".join(toks), count))
    entries.sort(key=lambda e: (-e[1], e[0]))
    return NgramVocabulary(
        entries=tuple((ngram, count / n) for ngram, count in entries)
    )


def tfidf_truncate(corpus, keep):
    """Keep only each document's `keep` highest-TF-IDF token occurrences.

    tf is the raw count in the document; idf = ln((1+n)/(1+df)) + 1 with df
    the number of documents containing the token. Original token order is
    preserved; score ties go to the earlier position. Documents with at
    most `keep` tokens pass through unchanged, text included.
    """
    if keep < 1:
        raise ValueError("keep must be >= 1")
    token_lists = corpus.tokens()
    n = corpus.n
    df = {}
    for toks in token_lists:
        for tok in set(toks):
            df[tok] = df.get(tok, 0) + 1
    docs = []
    for doc, toks in zip(corpus.documents, token_lists):
        if len(toks) <= keep:
            docs.append(doc)
            continue
        tf = {}
        for tok in toks:
            tf[tok] = tf.get(tok, 0) + 1
        score = [
            tf[tok] * (math.log((1 + n) / (1 + df[tok])) + 1) for tok in toks
        ]
        top = sorted(range(len(toks)), key=lambda p: (-score[p], p))[:keep]
        text = " ".join(toks[p] for p in sorted(top))
        docs.append(Document(id=doc.id, text=text, gold=doc.gold))
    return Corpus(docs)


def _read_lines(path):
    with open(path, "r", encoding="utf-8") as fh:
        return fh.read().splitlines()


def _parse_label_line(line, lineno, num_classes):
    line = line.strip()
    if not line:
        return frozenset()
    labels = []
    for part in line.split(","):
        try:
            value = int(part)
        except ValueError:
            raise LoadError(
                f"label file line {lineno}: {part!r} is not an integer"
            ) from None
        if value < 0 or (num_classes is not None and value >= num_classes):
            raise LoadError(
                f"label file line {lineno}: class {value} out of range"
            )
        labels.append(value)
    return frozenset(labels)


def load_labels(path, num_classes=None):
    """One label set per line: a single integer or comma-separated integers."""
    return [
        _parse_label_line(line, i + 1, num_classes)
        for i, line in enumerate(_read_lines(path))
    ]


def load_corpus(path, labels_path=None, num_classes=None):
    """Load a one-document-per-line corpus, optionally with gold labels."""
    lines = _read_lines(path)
    gold = None
    if labels_path is not None:
        gold = load_labels(labels_path, num_classes)
        if len(gold) != len(lines):
            raise LoadError(
                f"label file has {len(gold)} lines but corpus has {len(lines)}"
            )
    return Corpus(
        Document(id=i, text=text, gold=gold[i] if gold else None)
        for i, text in enumerate(lines)
    )


def load_class_specs(path):
    """Class description file: one class per line, 'index<TAB>name<TAB>description'."""
    specs = []
    for i, line in enumerate(_read_lines(path)):
        if not line.strip():
            continue
        parts = line.split("\t", 2)
        if len(parts) != 3:
            raise LoadError(
                f"description file line {i + 1}: expected "
                "'index<TAB>name<TAB>description'"
            )
        idx_str, name, description = parts
        try:
            index = int(idx_str)
        except ValueError:
            raise LoadError(
                f"description file line {i + 1}: bad class index {idx_str!r}"
            ) from None
        if not description.strip():
            raise LoadError(f"description file line {i + 1}: empty description")
        specs.append(ClassSpec(index=index, name=name, description=description))
    specs.sort(key=lambda s: s.index)
    if [s.index for s in specs] != list(range(len(specs))):
        raise LoadError("class indices must be contiguous from 0")
    if not specs:
        raise LoadError("description file defines no classes")
    return specs


def save_vocabulary(vocab, path):
    with open(path, "w", encoding="utf-8") as fh:
        for ngram, frac in vocab.entries:
            fh.write(f"{ngram}\t{frac!r}\n")


def load_vocabulary(path):
    entries = []
    for i, line in enumerate(_read_lines(path)):
        if not line:
            continue
        try:
            ngram, frac = line.split("\t")
            entries.append((ngram, float(frac)))
        except ValueError:
            raise LoadError(f"vocabulary file line {i + 1}: bad entry") from None
    return NgramVocabulary(entries=tuple(entries))
