"""`ddslit-figures render --spec spec.json [--out dir/]`."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .render import render
from .spec import SchemaError, load_spec


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="ddslit-figures")
    sub = parser.add_subparsers(dest="cmd", required=True)
    sp = sub.add_parser("render", help="render one figure spec")
    sp.add_argument("--spec", required=True, help="path to a spec JSON")
    sp.add_argument("--out", default=None,
                    help="output directory (default: next to the spec)")
    args = parser.parse_args(argv)
    try:
        spec = load_spec(args.spec)
        if args.out:
            out_dir = Path(args.out)
            out_dir.mkdir(parents=True, exist_ok=True)
            spec = type(spec)(**{**spec.__dict__,
                                 "out": str(Path(args.out) / Path(spec.out).name),
                                 "base_dir": spec.base_dir})
        path = render(spec)
    except (SchemaError, FileNotFoundError, ValueError) as exc:
        print(f"figure error: {exc}", file=sys.stderr)
        return 2
    print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
