"""Command line entry points for rendering evaluation exports.

``panels`` turns matching reference/reduced/error field files into one
three-panel image per group; ``summary`` prints a markdown table across
report CSVs. Read-only: exports are never modified.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .exports import ExportError
from .panels import render_panels
from .summary import render_summary


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sweeprom-figures",
        description="render figures and tables from solver evaluation exports",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_panels = sub.add_parser("panels", help="three-panel heatmaps per group")
    p_panels.add_argument("--fom", type=Path, required=True)
    p_panels.add_argument("--rom", type=Path, required=True)
    p_panels.add_argument("--error", type=Path, required=True)
    p_panels.add_argument("--output", type=Path, required=True,
                          help="image path; the group index is appended")
    p_panels.add_argument("--group", type=int, action="append", default=None,
                          help="render only this group (repeatable)")
    p_panels.add_argument("--vmin", type=float, default=None,
                          help="flux color-scale lower bound")
    p_panels.add_argument("--vmax", type=float, default=None,
                          help="flux color-scale upper bound")

    p_summary = sub.add_parser("summary", help="markdown table across reports")
    p_summary.add_argument("reports", type=Path, nargs="+")
    p_summary.add_argument("--output", type=Path, default=None,
                           help="write the table here instead of stdout")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "panels":
            stats = render_panels(args.fom, args.rom, args.error, args.output,
                                  groups=args.group, vmin=args.vmin, vmax=args.vmax)
            for s in stats:
                print(f"wrote {s.path}")
        else:
            table = render_summary(args.reports)
            if args.output is not None:
                args.output.write_text(table)
                print(f"wrote {args.output}")
            else:
                print(table, end="")
        return 0
    except (ExportError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
