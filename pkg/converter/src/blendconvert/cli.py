"""Command-line entry point: checkpoint in, manifest/blob pair out."""

from __future__ import annotations

import argparse
import sys

from .arch import ARCHITECTURES
from .convert import ConvertError, convert, render_report


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="blendconvert",
        description="Convert a Torch VGG-style checkpoint into an engine model (manifest + blob).",
    )
    parser.add_argument("--checkpoint", required=True, help="path to the .pth state dict")
    parser.add_argument(
        "--arch",
        required=True,
        choices=sorted(ARCHITECTURES),
        help="architecture table describing the checkpoint",
    )
    parser.add_argument("--output", required=True, help="manifest path to write (blob lands beside it)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        report = convert(args.checkpoint, args.arch, args.output)
    except ConvertError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(render_report(report))
    return 0


if __name__ == "__main__":
    sys.exit(main())
