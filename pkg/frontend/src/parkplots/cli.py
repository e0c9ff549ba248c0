"""Command line entry: parkplots render <figure-id> <results-dir> [-o out.png]."""

import argparse
import sys

from . import __version__
from .figures import FIGURES
from .render import render
from .schema import SchemaError


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="parkplots",
        description="Regenerate figures from parksim result directories.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    r = sub.add_parser("render", help="render one figure id from a results dir")
    r.add_argument("figure_id")
    r.add_argument("results_dir")
    r.add_argument("-o", "--out", help="output image path (default: in results dir)")

    sub.add_parser("list-figures", help="print the known figure ids")
    return parser


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    if args.command == "list-figures":
        for fid, spec in sorted(FIGURES.items()):
            print(f"{fid}: {spec.description}")
        return 0
    try:
        png, sidecar = render(args.figure_id, args.results_dir, args.out)
    except SchemaError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    print(png)
    print(sidecar)
    return 0


if __name__ == "__main__":
    sys.exit(main())
