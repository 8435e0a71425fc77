"""Invocation: plots <kind> --in <csv> --out <png/svg> [--json <report>]."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .render import KINDS, FigureSpec, SchemaMismatch, render


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="plots",
        description="Render figures from rayleighlab CSV/JSON outputs",
    )
    parser.add_argument("kind", choices=KINDS)
    parser.add_argument("--in", dest="csv_path", required=True,
                        help="input CSV table")
    parser.add_argument("--out", dest="out_path", required=True,
                        help="output image (.png or .svg)")
    parser.add_argument("--json", dest="json_path", default=None,
                        help="run report JSON (default: sibling of the CSV)")
    parser.add_argument("--title", default=None)
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 1

    spec = FigureSpec(
        csv_path=Path(args.csv_path),
        kind=args.kind,
        out_path=Path(args.out_path),
        json_path=Path(args.json_path) if args.json_path else None,
        title=args.title,
    )
    try:
        result = render(spec)
    except SchemaMismatch as exc:
        print(f"schema mismatch: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {result.out_path} ({result.kind}, {result.n_rows} rows)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
