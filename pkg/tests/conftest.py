"""Shared corpus/vote generators and the acceptance summary hook."""

import os

import numpy as np
import pytest

from keyclass import corpus as corpus_mod
from keyclass.lfgen import VoteMatrix

SIGNAL_VOCAB = (
    tuple(f"aurora{i:02d}" for i in range(20)),
    tuple(f"basalt{i:02d}" for i in range(20)),
)
NOISE_VOCAB = tuple(f"filler{i:03d}" for i in range(150))


def planted_texts(seed=20260817, n=2000, signal_per_doc=3, noise_per_doc=7):
    """2-class corpus: each doc draws class-specific signal plus noise."""
    rng = np.random.default_rng(seed)
    texts = []
    labels = []
    for _ in range(n):
        y = int(rng.integers(0, 2))
        toks = list(rng.choice(SIGNAL_VOCAB[y], size=signal_per_doc, replace=False))
        toks += list(rng.choice(NOISE_VOCAB, size=noise_per_doc, replace=False))
        rng.shuffle(toks)
        texts.append(" ".join(toks))
        labels.append(y)
    return texts, labels


def write_planted_files(root, seed=20260817, n=2000):
    """corpus/labels/descriptions files; returns their paths."""
    texts, labels = planted_texts(seed=seed, n=n)
    corpus_path = os.path.join(root, "corpus.txt")
    labels_path = os.path.join(root, "labels.txt")
    desc_path = os.path.join(root, "classes.tsv")
    with open(corpus_path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(texts) + "\n")
    with open(labels_path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(str(y) for y in labels) + "\n")
    with open(desc_path, "w", encoding="utf-8") as fh:
        fh.write("0\taurora\t" + " ".join(SIGNAL_VOCAB[0]) + "\n")
        fh.write("1\tbasalt\t" + " ".join(SIGNAL_VOCAB[1]) + "\n")
    return corpus_path, labels_path, desc_path


def planted_corpus(seed=20260817, n=2000):
    texts, labels = planted_texts(seed=seed, n=n)
    docs = [
        corpus_mod.Document(id=i, text=t, gold=frozenset({y}))
        for i, (t, y) in enumerate(zip(texts, labels))
    ]
    return corpus_mod.Corpus(docs), np.array(labels)


def synthetic_votes(accuracies, targets, n, seed):
    """Votes where LF j fires with prob a_j when its target matches the
    latent label and 1-a_j otherwise (coverage 0.5 for balanced labels)."""
    rng = np.random.default_rng(seed)
    accuracies = np.asarray(accuracies, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.int32)
    num_classes = int(targets.max()) + 1
    y = rng.integers(0, num_classes, n)
    votes = np.full((n, len(targets)), -1, dtype=np.int32)
    for j, (a, k) in enumerate(zip(accuracies, targets)):
        p_fire = np.where(y == k, a, 1.0 - a)
        votes[rng.random(n) < p_fire, j] = k
    return VoteMatrix(votes, targets), y


ACCEPTANCE_RESULTS = []


def record_criterion(name, passed):
    ACCEPTANCE_RESULTS.append((name, passed))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, passed in ACCEPTANCE_RESULTS:
        word = "SKIP" if passed == "skip" else ("PASS" if passed else "FAIL")
        terminalreporter.write_line(f"{name}: {word}")


@pytest.fixture(scope="session")
def small_planted():
    """600-doc planted corpus shared by the cheaper integration tests."""
    return planted_corpus(seed=11, n=600)
