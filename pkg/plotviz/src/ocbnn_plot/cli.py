"""Command line driver: ocbnn-plot regression|classification --spec PATH."""
from __future__ import annotations

import argparse
import sys

from .figures import FigureSpec, render_classification, render_regression


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ocbnn-plot",
        description="Render predictive-grid CSVs and constraint files into figures.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("regression", "classification"):
        p = sub.add_parser(name)
        p.add_argument("--spec", required=True, help="figure-spec JSON path")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        spec = FigureSpec.from_json_file(args.spec)
        render = render_regression if args.command == "regression" else render_classification
        result = render(spec)
        print(result.path)
        return 0
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
