"""Script entry: figrender --bundle DIR --kind KIND --out IMAGE."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .render import KINDS, FigureError, FigureSpec, render


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="figrender",
        description="Render overlay figures (predicted dashed, simulated solid) "
                    "from an experiment bundle.")
    parser.add_argument("--bundle", required=True, help="bundle directory")
    parser.add_argument("--kind", required=True, choices=KINDS)
    parser.add_argument("--out", required=True, help="output image (.png or .svg)")
    parser.add_argument("--dpi", type=int, default=150)
    args = parser.parse_args(argv)
    try:
        out = render(FigureSpec(bundle=Path(args.bundle), kind=args.kind,
                                out=Path(args.out), dpi=args.dpi))
    except FigureError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"figure written to {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
