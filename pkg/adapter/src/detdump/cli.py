"""detdump command line: bridge a frozen detector checkpoint to the
feature-dump interchange format."""

from __future__ import annotations

import argparse
import json
import logging
import sys

from .dump import CAPTURE_DEFAULT, CAPTURE_PRE_NORM, AdapterConfig, dump_features
from .errors import AdapterError


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="detdump",
        description="Capture per-query decoder features, class confidences, "
                    "and boxes from a frozen detector checkpoint.",
    )
    subs = parser.add_subparsers(dest="command", required=True)
    p = subs.add_parser("dump", help="run images and write a feature dump")
    p.add_argument("--checkpoint", required=True, help="TorchScript archive")
    p.add_argument("--images", required=True, help="directory of image files")
    p.add_argument("--out", required=True, help="output dump path (JSON lines)")
    p.add_argument("--device", default="cpu")
    p.add_argument("--queries", type=int, default=None,
                   help="expected query count Q; mismatch is an error")
    p.add_argument("--classes", type=int, default=None,
                   help="expected class count C; mismatch is an error")
    p.add_argument("--capture", choices=(CAPTURE_DEFAULT, CAPTURE_PRE_NORM),
                   default=CAPTURE_DEFAULT,
                   help="which decoder tensor to record (pre-norm needs "
                        "checkpoint support)")
    p.add_argument("--image-size", type=int, default=800)
    p.add_argument("--max-size", type=int, default=1333)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    args = build_parser().parse_args(argv)
    cfg = AdapterConfig(
        checkpoint=args.checkpoint,
        image_dir=args.images,
        out_path=args.out,
        device=args.device,
        queries=args.queries,
        classes=args.classes,
        capture=args.capture,
        image_size=args.image_size,
        max_size=args.max_size,
    )
    try:
        meta = dump_features(cfg)
    except (AdapterError, OSError) as exc:
        print(json.dumps({"error": type(exc).__name__, "detail": str(exc)}),
              file=sys.stderr)
        return 1
    print(f"dumped {meta['image_count']} images -> {cfg.out_path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
