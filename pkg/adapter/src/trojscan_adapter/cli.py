"""Entry point: trojscan-adapter --model spec.py (--stdio | --tcp PORT)."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .model import load_model_spec
from .server import serve_stdio, serve_tcp


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="trojscan-adapter", description=__doc__)
    parser.add_argument("--model", required=True, type=Path,
                        help="Python file defining build_model() -> WrappedModel")
    transport = parser.add_mutually_exclusive_group(required=True)
    transport.add_argument("--stdio", action="store_true", help="serve on stdin/stdout")
    transport.add_argument("--tcp", type=int, metavar="PORT", help="serve on a TCP port")
    args = parser.parse_args(argv)

    try:
        model = load_model_spec(args.model)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    if args.stdio:
        serve_stdio(model)
    else:
        serve_tcp(model, args.tcp)
    return 0


if __name__ == "__main__":
    sys.exit(main())
