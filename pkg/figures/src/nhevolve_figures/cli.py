"""``nhevolve-figures render --in <dir> --out <dir> [--panel <kind>]``.

Exit codes: 0 success, 1 usage errors, 2 input errors (missing or garbled
artifacts).
"""

from __future__ import annotations

import argparse
import sys

from .io import InputError
from .panels import PANEL_KINDS, render_all


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def build_parser() -> _Parser:
    parser = _Parser(prog="nhevolve-figures",
                     description="Render figure panels from preset artifacts")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("render", help="render a preset's panel set")
    p.add_argument("--in", dest="in_dir", required=True,
                   help="preset artifact directory (holds report.json)")
    p.add_argument("--out", dest="out_dir", required=True,
                   help="directory for the rendered panels")
    p.add_argument("--panel", choices=PANEL_KINDS,
                   help="render only panels of this kind")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        manifest = render_all(args.in_dir, args.out_dir,
                              panel_filter=args.panel)
    except InputError as exc:
        print(f"nhevolve-figures: input error: {exc}", file=sys.stderr)
        return 2
    for entry in manifest:
        print(f"({entry['panel']}) {entry['kind']}: {entry['file']} "
              f"[{entry['curves']} curve(s)]")
    print(f"{len(manifest)} panel(s) written to {args.out_dir}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
