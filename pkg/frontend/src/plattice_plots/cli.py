"""Command line front end: ``plattice-plot ber|noise|predict``."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import __version__, io, render


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="plattice-plot",
        description="Render figures from plattice simulator CSV files",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, desc in (
        ("ber", "BER vs SNR curves (log BER axis)"),
        ("noise", "effective-noise decomposition vs SNR"),
        ("predict", "analytic error-probability predictors vs SNR"),
    ):
        p = sub.add_parser(name, help=desc)
        p.add_argument("--in", dest="csv_in", type=Path, required=True, help="input CSV")
        p.add_argument("--out", type=Path, required=True, help="output image (png or svg)")
        if name == "ber":
            p.add_argument("--detectors", help="comma list of detector series to draw")
    return parser


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        if args.command == "ber":
            detectors = None
            if args.detectors:
                detectors = [t.strip() for t in args.detectors.split(",") if t.strip()]
            render.plot_ber(args.csv_in, args.out, detectors)
        elif args.command == "noise":
            render.plot_noise(args.csv_in, args.out)
        else:
            render.plot_predict(args.csv_in, args.out)
    except (io.CsvFormatError, render.RenderError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
