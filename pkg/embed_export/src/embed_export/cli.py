"""Command line for the exporter: corpus in, NCTV file out."""

from __future__ import annotations

import argparse
import sys

from .corpus_reader import CorpusError
from .exporter import POOLINGS, ExportError, ExportManifest, export


def build_argparser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="embed-export",
        description="Export per-token contextual vectors to the NCTV format.",
    )
    parser.add_argument("--corpus", required=True, help="corpus file (record format)")
    parser.add_argument("--model", required=True,
                        help="pretrained model id or local path (e.g. xlm-roberta-base)")
    parser.add_argument("--out", required=True, help="output NCTV path")
    parser.add_argument("--layer", type=int, default=-1, help="hidden-state layer (default: last)")
    parser.add_argument("--pooling", choices=POOLINGS, default="mean-subtokens")
    parser.add_argument("--no-context", action="store_true",
                        help="export one sentence per compound, context dropped")
    parser.add_argument("--device", default="cpu")
    return parser


def main(argv=None) -> int:
    args = build_argparser().parse_args(argv)
    manifest = ExportManifest(
        corpus_path=args.corpus,
        model_id=args.model,
        output_path=args.out,
        layer=args.layer,
        pooling=args.pooling,
        context=not args.no_context,
        device=args.device,
    )
    try:
        summary = export(manifest)
    except (ExportError, CorpusError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    print(
        f"wrote {summary['sentences']} sentences / {summary['tokens']} tokens "
        f"(dim {summary['dim']}) to {args.out}"
    )
    return 0


if __name__ == "__main__":
    sys.exit(main())
