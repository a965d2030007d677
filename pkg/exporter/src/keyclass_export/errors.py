class ExportError(Exception):
    """Any failure while encoding or writing an embedding file."""
