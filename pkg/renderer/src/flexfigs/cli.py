"""Command line: render <kind> --in <csv...> --out <png> [--dpi N] [--cmap NAME]."""

from __future__ import annotations

import argparse
import sys

from .render import KINDS, RenderJob, SchemaError, render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="render", description="Render flexflip CSV artifacts into figures"
    )
    parser.add_argument("kind", choices=KINDS, help="figure kind")
    parser.add_argument("--in", dest="inputs", nargs="+", required=True,
                        help="input CSV file(s); overlays take the field CSV first")
    parser.add_argument("--out", required=True, help="output image path (PNG)")
    parser.add_argument("--dpi", type=int, default=150)
    parser.add_argument("--cmap", default="viridis")
    parser.add_argument("--vmin", type=float, default=None, help="fixed color-scale minimum")
    parser.add_argument("--vmax", type=float, default=None, help="fixed color-scale maximum")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    job = RenderJob(
        kind=args.kind, inputs=args.inputs, output=args.out,
        dpi=args.dpi, cmap=args.cmap, vmin=args.vmin, vmax=args.vmax,
    )
    try:
        out = render(job)
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
