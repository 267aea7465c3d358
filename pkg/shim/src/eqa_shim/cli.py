"""Command line interface:

    eqa-shim --port 8080 --mode stub [--fixtures DIR]
    eqa-shim --port 8080 --mode live [--models cfg.json]
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .server import ShimError, serve
from .stub import StubBackend

ENV_FIXTURES = "EQA_SHIM_FIXTURES"
DEFAULT_FIXTURES = "fixtures/oracle-protocol"


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="eqa-shim",
        description="Reference server for the EQA oracle wire protocol.")
    parser.add_argument("--port", type=int, default=8080)
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--mode", choices=("stub", "live"), default="stub")
    parser.add_argument("--fixtures", default=None,
                        help="conformance fixture directory (stub mode)")
    parser.add_argument("--models", default=None,
                        help="model config JSON (live mode)")
    args = parser.parse_args(argv)

    try:
        if args.mode == "stub":
            fixtures = args.fixtures or os.environ.get(ENV_FIXTURES,
                                                       DEFAULT_FIXTURES)
            backend = StubBackend(fixtures)
            print(f"stub mode: {len(backend)} fixture pairs from {fixtures}",
                  file=sys.stderr, flush=True)
        else:
            from .live import LiveBackend, LiveStartupError
            models = None
            if args.models:
                models = json.loads(Path(args.models).read_text(encoding="utf-8"))
            try:
                backend = LiveBackend(models)
            except LiveStartupError as e:
                print(f"error: {e}", file=sys.stderr)
                return 2
        serve(backend, port=args.port, host=args.host)
    except (ShimError, FileNotFoundError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
