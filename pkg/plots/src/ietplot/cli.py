"""`ietplot --spec spec.json`: render one figure spec (or a list)."""
from __future__ import annotations

import argparse
import json
import sys

from .render import FigureSpec, SpecError, render


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="ietplot", description=__doc__)
    parser.add_argument("--spec", required=True,
                        help="figure spec JSON (an object or a list of them)")
    args = parser.parse_args(argv)
    try:
        with open(args.spec) as fh:
            data = json.load(fh)
    except FileNotFoundError:
        print(f"error: no such spec file: {args.spec}", file=sys.stderr)
        return 1
    except json.JSONDecodeError as exc:
        print(f"error: malformed spec JSON: {exc}", file=sys.stderr)
        return 1
    specs = data if isinstance(data, list) else [data]
    try:
        for obj in specs:
            out = render(FigureSpec.from_dict(obj))
            print(out)
    except SpecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
