"""embed-export command line: one subcommand-free exporter."""

from __future__ import annotations

import argparse
import sys
from typing import Sequence

from .jobs import MODALITIES, POOLINGS, ExportError, ExportJob, export


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="embed-export",
        description="Encode texts or images into the biaslens embedding format")
    parser.add_argument("--model", required=True,
                        help="encoder model id, or 'dummy' for the hash encoder")
    parser.add_argument("--inputs", required=True,
                        help="JSONL manifest: id plus text or image path per line")
    parser.add_argument("--modality", choices=MODALITIES, required=True)
    parser.add_argument("--pool", choices=POOLINGS, default="mean",
                        help="'none' keeps per-token vectors (multi-vector file)")
    parser.add_argument("--out", required=True, help="output embedding file")
    parser.add_argument("--sidecar", help="sidecar path (default <out>.meta.jsonl)")
    parser.add_argument("--dim", type=int, default=32, help="dummy encoder dimension")
    parser.add_argument("--batch-size", type=int, default=32)
    parser.add_argument("--no-normalize", action="store_true")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    job = ExportJob(
        model=args.model,
        inputs=args.inputs,
        modality=args.modality,
        out=args.out,
        pooling=args.pool,
        normalize=not args.no_normalize,
        batch_size=args.batch_size,
        dim=args.dim,
        sidecar=args.sidecar,
    )
    try:
        out, sidecar = export(job)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ExportError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {out} and {sidecar}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
