"""figures <kind> --in <csv...> --out <path> [--opt key=value]"""

from __future__ import annotations

import argparse
import sys

from .render import FigureSpec, render_to_file
from .schema import KINDS, FigureInputError


def build_parser():
    parser = argparse.ArgumentParser(prog="figures", description=__doc__)
    parser.add_argument("kind", choices=KINDS)
    parser.add_argument("--in", dest="inputs", nargs="+", required=True, help="input CSV file(s)")
    parser.add_argument("--out", required=True, help="output image path (.png/.svg/.pdf)")
    parser.add_argument(
        "--opt",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="styling option, e.g. window=25",
    )
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    options = {}
    for item in args.opt:
        if "=" not in item:
            print(f"error: bad option '{item}'", file=sys.stderr)
            return 2
        key, value = item.split("=", 1)
        options[key] = value
    try:
        spec = FigureSpec(kind=args.kind, inputs=args.inputs, output=args.out, options=options)
        for path in render_to_file(spec):
            print(path)
        return 0
    except FigureInputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
