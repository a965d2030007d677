"""KEYCEMB1 binary embedding writer.

Layout: an "<8sIIQQ" header (magic, version, dtype code, rows, dims)
followed by the row-major little-endian float32 payload. Files are
written to a temp path and renamed so readers never see a partial file.
"""

import os
import struct

import numpy as np

from keyclass_export.errors import ExportError

MAGIC = b"KEYCEMB1"
VERSION = 1
DTYPE_F32 = 1
_HEADER = struct.Struct("<8sIIQQ")


def write_embeddings(values, path):
    arr = np.ascontiguousarray(values, dtype="<f4")
    if arr.ndim != 2:
        raise ExportError("embedding payload must be 2-d")
    if not np.all(np.isfinite(arr)):
        raise ExportError("non-finite embedding values")
    tmp = f"{path}.tmp"
    with open(tmp, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, DTYPE_F32, *arr.shape))
        fh.write(arr.tobytes())
    os.replace(tmp, path)
