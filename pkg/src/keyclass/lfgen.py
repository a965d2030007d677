"""Keyword labeling functions and the vote matrix.

Each mined keyword becomes one labeling function that votes a single fixed
class (the description closest in cosine similarity) whenever the keyword
occurs in a document, and abstains otherwise. Keyword matching is
token-boundary: the keyword's token sequence must appear contiguously in
the document's token sequence, so "good" does not fire on "goodness".
"""

import csv
import warnings

import numpy as np

from keyclass import kernels
from keyclass.corpus import intern_tokens, tokenize
from keyclass.errors import LoadError

ABSTAIN = -1


class LabelingFunction:
    """A (keyword, target class, similarity) vote-or-abstain rule."""

    __slots__ = ("keyword", "target_class", "similarity")

    def __init__(self, keyword, target_class, similarity):
        if not keyword:
            raise ValueError("labeling function keyword must be non-empty")
        if not -1.0 <= similarity <= 1.0:
            raise ValueError("similarity must be in [-1, 1]")
        self.keyword = keyword
        self.target_class = int(target_class)
        self.similarity = float(similarity)

    def __eq__(self, other):
        return (
            isinstance(other, LabelingFunction)
            and self.keyword == other.keyword
            and self.target_class == other.target_class
            and self.similarity == other.similarity
        )

    def __repr__(self):
        return (
            f"LabelingFunction({self.keyword!r}, class={self.target_class}, "
            f"sim={self.similarity:.4f})"
        )


class VoteMatrix:
    """n x m labeling-function votes; -1 marks an abstention.

    Column purity is structural: column j only ever contains ABSTAIN or
    lf_targets[j].
    """

    def __init__(self, votes, lf_targets):
        votes = np.asarray(votes, dtype=np.int32)
        lf_targets = np.asarray(lf_targets, dtype=np.int32)
        if votes.ndim != 2 or lf_targets.ndim != 1:
            raise ValueError("votes must be n x m, lf_targets length m")
        if votes.shape[1] != lf_targets.shape[0] or lf_targets.shape[0] < 1:
            raise ValueError("lf_targets length must equal vote columns (>= 1)")
        ok = (votes == ABSTAIN) | (votes == lf_targets[None, :])
        if not np.all(ok):
            bad = np.argwhere(~ok)[0]
            raise ValueError(
                f"column purity violated at votes[{bad[0]}, {bad[1]}]"
            )
        self.votes = votes
        self.lf_targets = lf_targets

    @property
    def num_docs(self):
        return self.votes.shape[0]

    @property
    def num_lfs(self):
        return self.votes.shape[1]

    def voted(self):
        """Boolean n x m matrix: vote cast (True) vs abstain (False)."""
        return self.votes != ABSTAIN


def assign_keywords(vocab, classes, provider):
    """Assign each mined keyword to the class with the most similar
    description; ties break toward the lower class index.

    Keywords or descriptions that embed to the zero vector are dropped
    with a warning (cosine is undefined for them).
    """
    if not classes:
        raise ValueError("assign_keywords requires at least one class")
    desc = provider.embed_batch([c.description for c in classes]).values
    desc_norms = np.linalg.norm(desc, axis=1)
    valid = []
    for spec, norm in zip(classes, desc_norms):
        if norm == 0.0:
            warnings.warn(
                f"description for class {spec.index} ({spec.name!r}) embeds "
                "to zero; excluded from keyword assignment"
            )
        else:
            valid.append(spec.index)
    if not valid:
        warnings.warn("all class descriptions embed to zero; no LFs generated")
        return []
    desc_unit = desc[valid] / desc_norms[valid][:, None]

    keywords = vocab.ngrams
    if not keywords:
        return []
    kw = provider.embed_batch(keywords).values
    kw_norms = np.linalg.norm(kw, axis=1)
    lfs = []
    dropped = 0
    sims = np.clip(
        np.divide(
            kw @ desc_unit.T,
            kw_norms[:, None],
            out=np.zeros((len(keywords), len(valid))),
            where=kw_norms[:, None] > 0,
        ),
        -1.0,
        1.0,
    )
    for i, keyword in enumerate(keywords):
        if kw_norms[i] == 0.0:
            dropped += 1
            continue
        best = int(np.argmax(sims[i]))
        lfs.append(
            LabelingFunction(
                keyword=keyword,
                target_class=valid[best],
                similarity=float(sims[i, best]),
            )
        )
    if dropped:
        warnings.warn(
            f"{dropped} keyword(s) embed to zero; dropped from LF generation"
        )
    return lfs


def topk_per_class(lfs, k):
    """Keep the k most similar LFs per class (ties by lexicographic
    keyword); classes with fewer than k keep all. Output is ordered by
    (class, descending similarity)."""
    if k < 1:
        raise ValueError("k must be >= 1")
    by_class = {}
    for lf in lfs:
        by_class.setdefault(lf.target_class, []).append(lf)
    out = []
    for cls in sorted(by_class):
        group = sorted(by_class[cls], key=lambda lf: (-lf.similarity, lf.keyword))
        out.extend(group[:k])
    return out


def apply_lfs(corpus, lfs):
    """Build the vote matrix: votes[i][j] is LF j's class iff its keyword
    occurs as a contiguous token subsequence of document i, else ABSTAIN."""
    if not lfs:
        raise ValueError("apply_lfs requires at least one labeling function")
    targets = np.asarray([lf.target_class for lf in lfs], dtype=np.int32)
    votes = np.full((corpus.n, len(lfs)), ABSTAIN, dtype=np.int32)

    id_arrays, _, table = intern_tokens(corpus.tokens())
    packable = []
    packable_idx = []
    long_patterns = []
    for j, lf in enumerate(lfs):
        toks = lf.keyword.split(" ")
        ids = [table.get(t) for t in toks]
        if any(i is None for i in ids):
            continue  # keyword token absent from corpus: column stays abstain
        if len(ids) <= 3:
            packable.append(kernels.pack_ngram(ids))
            packable_idx.append(j)
        else:
            long_patterns.append((j, ids))

    if packable:
        doc_idx, pat_idx = kernels.match_ngrams(
            id_arrays, np.asarray(packable, dtype=np.int64)
        )
        cols = np.asarray(packable_idx, dtype=np.int64)[pat_idx]
        votes[doc_idx, cols] = targets[cols]
    for j, ids in long_patterns:
        needle = np.asarray(ids, dtype=np.int32)
        width = len(ids)
        for i, doc_ids in enumerate(id_arrays):
            for start in range(len(doc_ids) - width + 1):
                if np.array_equal(doc_ids[start : start + width], needle):
                    votes[i, j] = targets[j]
                    break
    return VoteMatrix(votes=votes, lf_targets=targets)


def export_lfs(lfs, path):
    """Review CSV: 'keyword,target_class,similarity' with a header row."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["keyword", "target_class", "similarity"])
        for lf in lfs:
            writer.writerow([lf.keyword, lf.target_class, repr(lf.similarity)])


def import_lfs(path, num_classes):
    """Read a (possibly expert-edited) review CSV back into LFs.

    Unedited files round-trip losslessly; edited target classes override;
    deleted rows are gone. Unknown class indices and duplicate keywords
    are errors naming the offending row.
    """
    lfs = []
    seen = set()
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["keyword", "target_class", "similarity"]:
            raise LoadError(f"{path}: missing review CSV header")
        for row_num, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise LoadError(f"{path} row {row_num}: expected 3 columns")
            keyword, cls_str, sim_str = row
            if not keyword:
                raise LoadError(f"{path} row {row_num}: empty keyword")
            try:
                cls = int(cls_str)
                sim = float(sim_str)
            except ValueError:
                raise LoadError(
                    f"{path} row {row_num}: bad class or similarity"
                ) from None
            if not 0 <= cls < num_classes:
                raise LoadError(
                    f"{path} row {row_num}: class {cls} out of range "
                    f"[0, {num_classes})"
                )
            if keyword in seen:
                raise LoadError(f"{path} row {row_num}: duplicate keyword "
                                f"{keyword!r}")
            seen.add(keyword)
            lfs.append(LabelingFunction(keyword, cls, sim))
    return lfs


def tokenized_keyword_occurs(keyword, text):
    """Brute-force reference check used by tests: does the keyword's token
    sequence occur contiguously in the text's token sequence?"""
    needle = keyword.split(" ")
    hay = tokenize(text)
    width = len(needle)
    return any(
        hay[s : s + width] == needle for s in range(len(hay) - width + 1)
    )


def save_votes(vm, path):
    """Sparse triplet file: header 'n,m', an lf_targets line, then one
    'doc_index,lf_index,class' line per non-abstain vote."""
    rows, cols = np.nonzero(vm.votes != ABSTAIN)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{vm.num_docs},{vm.num_lfs}\n")
        fh.write(",".join(str(t) for t in vm.lf_targets.tolist()) + "\n")
        for i, j in zip(rows.tolist(), cols.tolist()):
            fh.write(f"{i},{j},{vm.votes[i, j]}\n")


def load_votes(path):
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if len(lines) < 2:
        raise LoadError(f"{path}: missing vote matrix header")
    try:
        n, m = (int(x) for x in lines[0].split(","))
        targets = np.asarray([int(x) for x in lines[1].split(",")], np.int32)
    except ValueError:
        raise LoadError(f"{path}: malformed header") from None
    if targets.shape[0] != m:
        raise LoadError(f"{path}: lf_targets length != m")
    votes = np.full((n, m), ABSTAIN, dtype=np.int32)
    for lineno, line in enumerate(lines[2:], start=3):
        if not line:
            continue
        try:
            i, j, cls = (int(x) for x in line.split(","))
        except ValueError:
            raise LoadError(f"{path} line {lineno}: bad triplet") from None
        if not (0 <= i < n and 0 <= j < m):
            raise LoadError(f"{path} line {lineno}: index out of range")
        votes[i, j] = cls
    try:
        return VoteMatrix(votes=votes, lf_targets=targets)
    except ValueError as exc:
        raise LoadError(f"{path}: {exc}") from None
