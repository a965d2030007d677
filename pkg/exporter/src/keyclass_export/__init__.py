"""Batch text-embedding exporter for the keyclass pipeline.

Encodes line-oriented text files with a sentence encoder and writes the
KEYCEMB1 binary format plus the string sidecar and a JSON manifest. The
classifier package never imports this one; the two meet only at the file
format.
"""

from keyclass_export.errors import ExportError
from keyclass_export.export import ExportManifest, export, export_keywords

__all__ = ["ExportError", "ExportManifest", "export", "export_keywords"]
