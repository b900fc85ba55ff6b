"""CLI for the embedding extractor."""

from __future__ import annotations

import argparse
import sys

from .corpus import ExtractionInputError
from .extract import ExtractionJob, extract_sentence_embeddings, extract_word_embeddings
from .models import DEFAULT_SENTENCE_MODEL


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="capemb-extract",
        description="Run an embedding model over a corpus and write a CAPEMB file",
    )
    parser.add_argument("--input", required=True, help="corpus file (JSON or CSV)")
    parser.add_argument("--input-format", choices=["csv", "json"], help="override format inference")
    parser.add_argument("--candidates", help="candidate captions to embed as cand:<item_id>")
    parser.add_argument(
        "--model",
        default=DEFAULT_SENTENCE_MODEL,
        help="hash:<dim>, word2vec:<path>, or a sentence-transformers model name",
    )
    parser.add_argument("--kind", choices=["word", "sentence"], required=True)
    parser.add_argument("--out", required=True, help="output CAPEMB path (.capembb for binary)")
    parser.add_argument("--batch-size", type=int, default=32)
    parser.add_argument("--binary", action="store_true", help="write the binary variant")
    parser.add_argument("--dim", type=int, help="require this output dimension")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    job = ExtractionJob(
        input_path=args.input,
        model_id=args.model,
        kind=args.kind,
        output_path=args.out,
        batch_size=args.batch_size,
        binary=True if args.binary else None,
        expected_dim=args.dim,
        candidates_path=args.candidates,
        input_format=args.input_format,
    )
    try:
        if args.kind == "sentence":
            path = extract_sentence_embeddings(job)
        else:
            path = extract_word_embeddings(job)
    except (ExtractionInputError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(path)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
