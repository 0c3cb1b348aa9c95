"""`extract` command-line entry point."""

from __future__ import annotations

import argparse
import re
import sys

from .backbones import BACKBONES, BackboneUnavailableError
from .extract import ExtractJob, extract


def parse_size(text: str) -> tuple[int, int]:
    m = re.fullmatch(r"(\d+)x(\d+)", text.strip())
    if not m:
        raise argparse.ArgumentTypeError(f"--size must look like 64x64, got {text!r}")
    return int(m.group(1)), int(m.group(2))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="extract",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
        description="Extract a C×H×W feature grid from an image with a vision "
        "backbone (or the offline stub) and write CMPT/PGM files.",
    )
    parser.add_argument("--image", required=True, help="input image (anything Pillow reads)")
    parser.add_argument("--mask", default=None, help="optional mask image")
    parser.add_argument("--out-feat", required=True, help="output CMPT feature file")
    parser.add_argument("--out-mask", default=None,
                        help="output PGM mask path (a soft .cmpt twin is written beside it)")
    parser.add_argument("--size", required=True, type=parse_size,
                        help="feature resolution as <H>x<W>")
    parser.add_argument("--backbone", default="stub", choices=sorted(BACKBONES),
                        help="feature backbone")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    job = ExtractJob(
        image=args.image,
        mask=args.mask,
        out_feat=args.out_feat,
        out_mask=args.out_mask,
        feat_h=args.size[0],
        feat_w=args.size[1],
        backbone=args.backbone,
    )
    try:
        extract(job)
    except BackboneUnavailableError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
