"""Command line entry point: crd-figures render --family ID --in CSV --out PATH."""

from __future__ import annotations

import argparse
import sys

from .figures import FAMILIES, FigureRequest, render
from .io import SchemaError


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="crd-figures",
        description="Regenerate publication figures from experiment CSV artifacts.")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("render", help="render one figure family")
    p.add_argument("--family", required=True, choices=FAMILIES)
    p.add_argument("--in", dest="inputs", action="append", required=True,
                   metavar="CSV", help="input CSV (repeatable)")
    p.add_argument("--out", required=True, help="output SVG path")
    p.add_argument("--png", action="store_true",
                   help="also write a PNG next to the SVG")
    p.add_argument("--title", default="", help="override the figure title")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        request = FigureRequest(family=args.family, inputs=args.inputs,
                                output=args.out, png=args.png, title=args.title)
        out = render(request)
    except SchemaError as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return 2
    print(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
