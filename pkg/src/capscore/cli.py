"""Command-line frontend: thin argument parsing over the runner.

Exit codes: 0 success (warnings allowed), 1 input/validation error,
2 internal numerical failure.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from .errors import CapscoreError, NumericalError
from .runner import RunConfig, render_report, run_evaluate_metrics, run_pairwise, run_score

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_NUMERICAL = 2


def _default_threads() -> int:
    env = os.environ.get("CAPSCORE_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return os.cpu_count() or 1


def _add_common(parser: argparse.ArgumentParser, with_candidates: bool) -> None:
    parser.add_argument("--corpus", required=True, help="corpus file (JSON or CSV)")
    parser.add_argument("--corpus-format", choices=["csv", "json"], help="override format inference")
    if with_candidates:
        parser.add_argument("--candidates", required=True, help="candidate captions (CSV or JSON map)")
    parser.add_argument("--word-emb", help="CAPEMB word-embedding file (enables wmd)")
    parser.add_argument("--sent-emb", help="CAPEMB sentence-embedding file (enables sbert)")
    parser.add_argument("--metrics", help="comma-separated metric list (default: all available)")
    parser.add_argument("--synonyms", help="synonym table for METEOR")
    parser.add_argument("--stopwords", help="stopword list for WMD")
    parser.add_argument("--cider-scale", choices=["on", "off"], default="on", help="×10 CIDEr scaling")
    parser.add_argument("--cider-df", help="precomputed document-frequency file for CIDEr")
    parser.add_argument("--bleu-smoothing", choices=["none", "add-one"], default="none")
    parser.add_argument("--sbert-agg", choices=["mean", "max"], default="mean")
    parser.add_argument("--threads", type=int, default=None, help="worker threads (env CAPSCORE_THREADS)")
    parser.add_argument("--out", help="output path (default: stdout)")
    parser.add_argument("--format", choices=["json", "csv"], default="json", dest="out_format")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="capscore", description="Caption similarity metrics")
    sub = parser.add_subparsers(dest="command", required=True)

    score = sub.add_parser("score", help="corpus-level candidate-vs-reference scores")
    _add_common(score, with_candidates=True)
    score.add_argument("--per-item", action="store_true", help="include per-item breakdown")

    pairwise = sub.add_parser("pairwise", help="score all caption pairs")
    _add_common(pairwise, with_candidates=False)
    pairwise.add_argument("--normalized", action="store_true", help="include min-max normalized scores")

    evaluate = sub.add_parser("evaluate-metrics", help="discriminability protocol and ranking")
    _add_common(evaluate, with_candidates=False)

    serve = sub.add_parser("serve", help="run the HTTP service")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)
    return parser


def _config_from_args(args: argparse.Namespace) -> RunConfig:
    return RunConfig(
        corpus=args.corpus,
        corpus_format=args.corpus_format,
        candidates=getattr(args, "candidates", None),
        word_emb=args.word_emb,
        sent_emb=args.sent_emb,
        metrics=[m.strip() for m in args.metrics.split(",") if m.strip()] if args.metrics else [],
        synonyms=args.synonyms,
        stopwords=args.stopwords,
        cider_scale=args.cider_scale == "on",
        cider_df=args.cider_df,
        bleu_smoothing=args.bleu_smoothing,
        sbert_agg=args.sbert_agg,
        threads=args.threads if args.threads else _default_threads(),
        per_item=getattr(args, "per_item", False),
        include_normalized=getattr(args, "normalized", False),
        out=args.out,
        out_format=args.out_format,
    )


def _emit(report: dict, cfg: RunConfig) -> None:
    rendered = render_report(report, cfg.out_format)
    if cfg.out:
        Path(cfg.out).write_text(rendered, encoding="utf-8")
    else:
        sys.stdout.write(rendered)
    for warning in report.get("warnings", []):
        print(f"warning: {warning}", file=sys.stderr)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "serve":
        import uvicorn

        from .service import app

        uvicorn.run(app, host=args.host, port=args.port)
        return EXIT_OK
    cfg = _config_from_args(args)
    runners = {
        "score": run_score,
        "pairwise": run_pairwise,
        "evaluate-metrics": run_evaluate_metrics,
    }
    try:
        report = runners[args.command](cfg)
    except NumericalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except CapscoreError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    _emit(report, cfg)
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
