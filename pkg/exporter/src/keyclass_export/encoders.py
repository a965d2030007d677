"""Encoders behind model tags.

"hash768" is a dependency-free signed feature hasher that runs fully
offline and reproduces the classifier package's built-in hash provider,
so exported files are drop-in replacements for its online hashing. Any
other tag is handed to sentence-transformers, which resolves local or
downloadable pretrained models (e.g. a general-purpose paraphrase encoder
or a clinical-domain one).
"""

import hashlib
import re

import numpy as np

from keyclass_export.errors import ExportError

HASH_TAG = "hash768"
_TOKEN_RE = re.compile(r"\w{2,}")


class HashingEncoder:
    """Keyed 64-bit BLAKE2b feature hashing with L2 normalization."""

    def __init__(self, dims=768, seed=0):
        self.dims = dims
        self._key = (seed & 0xFFFFFFFFFFFFFFFF).to_bytes(8, "little")

    def encode(self, lines):
        out = np.zeros((len(lines), self.dims))
        for i, text in enumerate(lines):
            for token in _TOKEN_RE.findall(text.lower()):
                digest = hashlib.blake2b(
                    token.encode("utf-8"), digest_size=8, key=self._key
                ).digest()
                h = int.from_bytes(digest, "little")
                out[i, h % self.dims] += 1.0 if h >> 63 else -1.0
        norms = np.linalg.norm(out, axis=1, keepdims=True)
        return out / np.where(norms > 0.0, norms, 1.0)


class NeuralEncoder:
    """Thin wrapper over a sentence-transformers model, CPU inference."""

    def __init__(self, tag, deterministic=True):
        try:
            import torch
            from sentence_transformers import SentenceTransformer
        except ImportError as exc:
            raise ExportError(
                f"model '{tag}' needs the sentence-transformers package; "
                f"only '{HASH_TAG}' runs without it"
            ) from exc
        if deterministic:
            torch.manual_seed(0)
            torch.use_deterministic_algorithms(True)
        try:
            self._model = SentenceTransformer(tag, device="cpu")
        except Exception as exc:
            raise ExportError(f"could not load model '{tag}': {exc}") from exc
        self.dims = int(self._model.get_sentence_embedding_dimension())

    def encode(self, lines):
        vecs = self._model.encode(
            list(lines),
            batch_size=len(lines),
            convert_to_numpy=True,
            show_progress_bar=False,
        )
        return np.asarray(vecs, dtype=np.float64)


def load_encoder(tag, deterministic=True):
    if tag == HASH_TAG:
        return HashingEncoder()
    return NeuralEncoder(tag, deterministic=deterministic)
