"""Standalone figure renderer: ``figkit FIGURE CSV OUT [--log-epsilon]``."""

from __future__ import annotations

import argparse
import sys

from .render import FIGURE_IDS, FigureError, FigureSpec, render


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="figkit", description=__doc__)
    parser.add_argument("figure", choices=FIGURE_IDS, help="figure id")
    parser.add_argument("csv", help="input CSV path (harness or theory schema)")
    parser.add_argument("out", help="output image path")
    parser.add_argument(
        "--log-epsilon",
        action="store_true",
        help="log-scale the divergence axis (fig6 only)",
    )
    args = parser.parse_args(argv)
    spec = FigureSpec(
        figure_id=args.figure,
        csv_path=args.csv,
        output_path=args.out,
        log_epsilon=args.log_epsilon,
    )
    try:
        result = render(spec)
    except FigureError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {args.out} ({len(result['series'])} series, {result['bands']} bands)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
