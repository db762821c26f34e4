"""Adapter CLI: stylo-adapter --in DIR --out DIR --model NAME."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .config import AdapterConfig
from .convert import parse_raw


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="stylo-adapter",
        description="Convert raw UTF-8 .txt files to CoNLL-U.",
    )
    parser.add_argument("--in", dest="input_dir", required=True, type=Path,
                        help="directory of .txt files")
    parser.add_argument("--out", dest="output_dir", required=True, type=Path,
                        help="directory for .conllu output (must differ from --in)")
    parser.add_argument("--model", default="builtin",
                        help="'builtin' or 'spacy:<model-name>' (default: builtin)")
    parser.add_argument("--batch-size", type=int, default=32)
    parser.add_argument("-v", "--verbose", action="store_true")
    args = parser.parse_args(argv)

    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(message)s",
    )
    try:
        config = AdapterConfig(args.input_dir, args.output_dir,
                               model=args.model, batch_size=args.batch_size)
        summary = parse_raw(config)
    except (ValueError, FileNotFoundError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"converted {len(summary.converted)} file(s), "
          f"{len(summary.failed)} failed")
    for name in summary.failed:
        print(f"  failed: {name}", file=sys.stderr)
    return 0 if summary.ok else 1


if __name__ == "__main__":
    sys.exit(main())
