"""Embedding providers and cosine similarity.

Two providers implement the same duck-typed interface (``dims`` plus
``embed_batch(texts) -> EmbeddingMatrix``): a deterministic feature-hashing
embedder that needs no external weights, and a reader for embedding files
produced offline by a real sentence encoder. Row i of a matrix always
corresponds to input string i.
"""

import hashlib
import struct
from dataclasses import dataclass

import numpy as np

from keyclass.corpus import tokenize
from keyclass.errors import FormatError, LoadError, ZeroVectorError

MAGIC = b"KEYCEMB1"
_HEADER = struct.Struct("<8sIIQQ")
_VERSION = 1
_DTYPE_F32 = 1


@dataclass(frozen=True)
class EmbeddingMatrix:
    """Row-aligned embeddings for a list of input strings."""

    values: np.ndarray
    provider_tag: str

    def __post_init__(self):
        if self.values.ndim != 2:
            raise ValueError("embedding matrix must be 2-d")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("embedding matrix contains non-finite values")

    @property
    def rows(self):
        return self.values.shape[0]

    @property
    def dims(self):
        return self.values.shape[1]


class HashEmbeddingProvider:
    """Signed feature-hashing embedder.

    Each token is hashed with a keyed 64-bit BLAKE2b; the hash picks a
    bucket (mod dims) and a sign (high bit), token occurrences accumulate,
    and nonzero sums are L2-normalized. Deterministic across platforms and
    processes for a fixed (dims, seed).
    """

    provider_tag = "hash-v1"

    def __init__(self, dims=768, seed=0):
        if dims < 2:
            raise ValueError("dims must be >= 2")
        self.dims = dims
        self.seed = seed
        self._key = (seed & 0xFFFFFFFFFFFFFFFF).to_bytes(8, "little")
        self._token_cache = {}

    def _token_slot(self, token):
        slot = self._token_cache.get(token)
        if slot is None:
            digest = hashlib.blake2b(
                token.encode("utf-8"), digest_size=8, key=self._key
            ).digest()
            h = int.from_bytes(digest, "little")
            sign = 1.0 if h >> 63 else -1.0
            slot = (h % self.dims, sign)
            self._token_cache[token] = slot
        return slot

    def embed_one(self, text):
        vec = np.zeros(self.dims)
        for token in tokenize(text):
            bucket, sign = self._token_slot(token)
            vec[bucket] += sign
        norm = np.linalg.norm(vec)
        if norm > 0:
            vec /= norm
        return vec

    def embed_batch(self, texts):
        values = np.zeros((len(texts), self.dims))
        for i, text in enumerate(texts):
            values[i] = self.embed_one(text)
        return EmbeddingMatrix(values=values, provider_tag=self.provider_tag)


class FileEmbeddingProvider:
    """Serves precomputed embeddings, keyed by the exact input string.

    Pairs the rows of an embedding file with the lines of the text file it
    encodes. Duplicate strings keep their first row (a deterministic
    encoder gives them identical rows anyway).
    """

    def __init__(self, strings, matrix, provider_tag=None):
        if len(strings) != matrix.rows:
            raise LoadError(
                f"{len(strings)} strings but {matrix.rows} embedding rows"
            )
        self.dims = matrix.dims
        self.provider_tag = provider_tag or matrix.provider_tag
        self._rows = {}
        for s, row in zip(strings, matrix.values):
            self._rows.setdefault(s, row)

    @classmethod
    def from_files(cls, text_path, embedding_path):
        with open(text_path, "r", encoding="utf-8") as fh:
            strings = fh.read().splitlines()
        matrix = load_embeddings(embedding_path)
        return cls(strings, matrix)

    def embed_batch(self, texts):
        rows = np.empty((len(texts), self.dims))
        for i, text in enumerate(texts):
            row = self._rows.get(text)
            if row is None:
                raise LoadError(
                    f"no precomputed embedding for string {text[:60]!r}"
                )
            rows[i] = row
        return EmbeddingMatrix(values=rows, provider_tag=self.provider_tag)


def cosine(u, v):
    """u.v / (|u||v|), clamped into [-1, 1]; errors on zero-norm input."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise ValueError("cosine requires equal-dimension vectors")
    nu = np.linalg.norm(u)
    nv = np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        raise ZeroVectorError("cosine similarity undefined for zero vectors")
    return float(np.clip(np.dot(u, v) / (nu * nv), -1.0, 1.0))


def write_embeddings(values, path):
    """Write a matrix in the binary embedding file format (float32)."""
    values = np.ascontiguousarray(values, dtype="<f4")
    if values.ndim != 2:
        raise ValueError("embedding payload must be 2-d")
    with open(path, "wb") as fh:
        fh.write(
            _HEADER.pack(
                MAGIC, _VERSION, _DTYPE_F32, values.shape[0], values.shape[1]
            )
        )
        fh.write(values.tobytes())


def load_embeddings(path):
    """Read the binary embedding file format; byte-exact with the writer."""
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < _HEADER.size:
        raise FormatError(f"{path}: truncated header ({len(data)} bytes)")
    magic, version, dtype, rows, dims = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    if version != _VERSION:
        raise FormatError(f"{path}: unsupported version {version}")
    if dtype != _DTYPE_F32:
        raise FormatError(f"{path}: unsupported dtype code {dtype}")
    expected = _HEADER.size + rows * dims * 4
    if len(data) != expected:
        raise FormatError(
            f"{path}: payload length {len(data) - _HEADER.size} does not "
            f"match header ({rows} rows x {dims} dims)"
        )
    values = np.frombuffer(data, dtype="<f4", offset=_HEADER.size)
    values = values.reshape(rows, dims).copy()
    if not np.all(np.isfinite(values)):
        raise FormatError(f"{path}: payload contains non-finite values")
    return EmbeddingMatrix(values=values, provider_tag="file")
