"""Batch export: read lines, encode, write binary + sidecar + manifest.

Every output embedding file P is accompanied by P.txt (one encoded string
per row, the classifier's file-provider convention) and P.manifest.json
recording what produced it.
"""

import csv
import hashlib
import io
import json
import os
from dataclasses import asdict, dataclass

import numpy as np

from keyclass_export.encoders import load_encoder
from keyclass_export.errors import ExportError
from keyclass_export.format import write_embeddings

_LF_HEADER = "keyword,target_class,similarity"


@dataclass(frozen=True)
class ExportManifest:
    model: str
    input_sha256: str
    rows: int
    dims: int
    output: str

    def to_json(self):
        return json.dumps(asdict(self), indent=2, sort_keys=True) + "\n"


def _read_lines(path):
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise ExportError(f"{path}: nothing to encode")
    return lines


def _sha256(path):
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()


def _atomic_write_text(path, text):
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _export_lines(lines, input_sha, model, out_path, batch_size, deterministic):
    if batch_size < 1:
        raise ExportError(f"batch size must be >= 1, got {batch_size}")
    encoder = load_encoder(model, deterministic=deterministic)
    matrix = np.vstack(
        [
            encoder.encode(lines[i : i + batch_size])
            for i in range(0, len(lines), batch_size)
        ]
    )
    dims = getattr(encoder, "dims", matrix.shape[1])
    if matrix.shape != (len(lines), dims):
        raise ExportError(
            f"encoder returned shape {matrix.shape}, "
            f"expected {(len(lines), dims)}"
        )
    write_embeddings(matrix, out_path)
    _atomic_write_text(f"{out_path}.txt", "\n".join(lines) + "\n")
    manifest = ExportManifest(
        model=model,
        input_sha256=input_sha,
        rows=len(lines),
        dims=int(matrix.shape[1]),
        output=str(out_path),
    )
    _atomic_write_text(f"{out_path}.manifest.json", manifest.to_json())
    return manifest


def export(input_path, model, out_path, batch_size=64, deterministic=True):
    """Encode each line of input_path; one embedding row per line."""
    lines = _read_lines(input_path)
    return _export_lines(
        lines, _sha256(input_path), model, out_path, batch_size, deterministic
    )


def _keyword_column(lines):
    """Keyword list from a vocabulary TSV or an LF CSV, first seen wins."""
    if lines[0].strip() == _LF_HEADER:
        rows = csv.reader(io.StringIO("\n".join(lines[1:])))
        words = [row[0] for row in rows if row]
    else:
        words = [line.split("\t")[0] for line in lines if line.strip()]
    seen = set()
    out = []
    for word in words:
        if word not in seen:
            seen.add(word)
            out.append(word)
    return out


def export_keywords(input_path, model, out_path, batch_size=64,
                    deterministic=True):
    """Encode the keyword column of a vocabulary or LF file."""
    lines = _read_lines(input_path)
    keywords = _keyword_column(lines)
    if not keywords:
        raise ExportError(f"{input_path}: nothing to encode")
    return _export_lines(
        keywords, _sha256(input_path), model, out_path, batch_size,
        deterministic,
    )
