"""Command-line entry point."""

import argparse
import sys

from keyclass_export.errors import ExportError
from keyclass_export.export import export, export_keywords


def build_parser():
    parser = argparse.ArgumentParser(
        prog="keyclass-export",
        description="Batch-encode text into KEYCEMB1 embedding files",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    specs = (
        ("export", "one embedding row per input line"),
        ("export-keywords", "encode the keyword column of a vocabulary/LF file"),
    )
    for name, help_text in specs:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--input", required=True)
        p.add_argument("--model", required=True,
                       help="'hash768' (offline) or a sentence-transformers tag")
        p.add_argument("--out", required=True)
        p.add_argument("--batch-size", type=int, default=64)
        p.add_argument("--deterministic",
                       action=argparse.BooleanOptionalAction, default=True)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    fn = export if args.command == "export" else export_keywords
    try:
        manifest = fn(
            args.input,
            args.model,
            args.out,
            batch_size=args.batch_size,
            deterministic=args.deterministic,
        )
    except (ExportError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"{manifest.rows} rows x {manifest.dims} dims -> {manifest.output}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
