"""Render one figure from one mq CSV artifact.

Exit codes: 0 success, 2 validation error (missing columns, empty table,
bad coordinate), 64 usage error.
"""

from __future__ import annotations

import argparse
import sys
from typing import NoReturn, Sequence

from .csvio import SchemaError
from .figures import KINDS, FigureSpec, render

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_USAGE = 64


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> NoReturn:
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(EXIT_USAGE)


def build_parser() -> _Parser:
    parser = _Parser(prog="mq-plots", description=__doc__)
    parser.add_argument("--kind", required=True, choices=KINDS)
    parser.add_argument("--in", dest="source", required=True, help="input CSV from the mq CLI")
    parser.add_argument("--out", required=True, help="output image (.svg, .png, or .pdf)")
    parser.add_argument("--coordinate", default="rank_error",
                        help="gap-hist only: which histogram coordinate to draw")
    parser.add_argument("--title", default=None)
    parser.add_argument("--dpi", type=int, default=150)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    spec = FigureSpec(
        kind=args.kind,
        source=args.source,
        out=args.out,
        coordinate=args.coordinate,
        title=args.title,
        dpi=args.dpi,
    )
    try:
        render(spec)
    except SchemaError as exc:
        sys.stderr.write(f"mq-plots: {exc}\n")
        return EXIT_VALIDATION
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
