"""CLI: extract model embeddings into an EMB1 file.

    extract --model <name> --modality {text|graph} --manifest in.jsonl --out file.emb
"""

from __future__ import annotations

import argparse
import json
import sys

from .errors import ExtractError
from .jobs import ExtractionJob
from .structure_extract import extract_structure_embeddings
from .text_extract import extract_text_embeddings


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="modal-align-extract")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("extract", help="run a model and write an EMB1 file")
    p.add_argument("--model", required=True, help="model identifier or local path")
    p.add_argument("--modality", required=True, choices=("text", "graph"))
    p.add_argument("--manifest", required=True, help="JSONL: id + text or path")
    p.add_argument("--out", required=True, help="output .emb path")
    p.add_argument("--structure-dir", help="directory of <id>.npy feature files")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    job = ExtractionJob(
        model=args.model,
        modality=args.modality,
        manifest_path=args.manifest,
        out_path=args.out,
    )
    try:
        if args.modality == "text":
            summary = extract_text_embeddings(job)
        else:
            summary = extract_structure_embeddings(job, structure_dir=args.structure_dir)
    except ExtractError as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}),
              file=sys.stderr)
        return 1
    print(json.dumps(summary))
    return 0


if __name__ == "__main__":
    sys.exit(main())
