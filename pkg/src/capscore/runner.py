"""Shared orchestration for the CLI and the HTTP service.

Loads inputs, validates metric requirements up front, runs the selected
metrics, and renders deterministic reports: float values are rounded to six
decimals, JSON keys are sorted, and iteration orders are fixed, so identical
inputs give byte-identical outputs no matter the thread count.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from .cider import build_df, cider, load_df_tables
from .discriminability import (
    DiscriminabilityReport,
    PairScoreMatrix,
    aggregate,
    normalize_scores,
    pairwise_scores,
    rank_metrics,
)
from .embeddings import EmbeddingStore, load_embeddings, sbert_sc
from .errors import (
    AllTokensOOV,
    DegenerateRange,
    EmptyBucket,
    InputError,
)
from .handles import (
    BleuPair,
    CiderPair,
    MeteorPair,
    RougeLPair,
    SentenceCosinePair,
    WmdPair,
    sentence_key,
)
from .ingestion import CandidateSet, CorpusFile, load_candidates, load_corpus, validate_candidates
from .overlap import BleuStats, SynonymTable, bleu_from_stats, bleu_stats, meteor, rouge_l
from .wmd import word_movers_distance

__all__ = [
    "RunConfig",
    "MetricSetup",
    "make_setup",
    "prepare",
    "run_score",
    "run_pairwise",
    "run_evaluate_metrics",
    "score_corpus",
    "pairwise_corpus",
    "evaluate_corpus",
    "render_report",
]

METRIC_ORDER = ["bleu-1", "bleu-2", "bleu-3", "bleu-4", "rouge-l", "meteor", "cider", "sbert", "wmd"]
TABLE_COLUMNS = {  # Table-style CSV headers per metric
    "bleu-1": "BLEU_1",
    "bleu-2": "BLEU_2",
    "bleu-3": "BLEU_3",
    "bleu-4": "BLEU_4",
    "rouge-l": "ROUGE",
    "meteor": "METEOR",
    "cider": "CIDER",
    "sbert": "SBERT_sc",
    "wmd": "WMD",
}
EMBEDDING_REQUIREMENTS = {"sbert": "sentence embeddings", "wmd": "word embeddings"}


@dataclass
class RunConfig:
    """Everything a run needs; paths are resolved lazily by the loaders."""

    corpus: str = ""
    corpus_format: str | None = None
    candidates: str | None = None
    word_emb: str | None = None
    sent_emb: str | None = None
    metrics: list[str] = field(default_factory=list)
    synonyms: str | None = None
    stopwords: str | None = None
    cider_scale: bool = True
    cider_df: str | None = None
    bleu_smoothing: str = "none"
    sbert_agg: str = "mean"
    threads: int = 1
    per_item: bool = False
    include_normalized: bool = False
    out: str | None = None
    out_format: str = "json"

    def echo(self) -> dict:
        # thread count deliberately not echoed: reports must be byte-identical
        # for any worker count
        return {
            "corpus": self.corpus,
            "corpus_format": self.corpus_format,
            "candidates": self.candidates,
            "word_emb": self.word_emb,
            "sent_emb": self.sent_emb,
            "metrics": list(self.metrics),
            "synonyms": self.synonyms,
            "stopwords": self.stopwords,
            "cider_scale": self.cider_scale,
            "cider_df": self.cider_df,
            "bleu_smoothing": self.bleu_smoothing,
            "sbert_agg": self.sbert_agg,
        }


@dataclass
class MetricSetup:
    """Validated, loaded inputs shared by the three commands."""

    corpus: CorpusFile
    candidates: CandidateSet | None
    metrics: list[str]
    synonyms: SynonymTable
    stopwords: frozenset[str]
    word_store: EmbeddingStore | None
    sentence_store: EmbeddingStore | None
    config: RunConfig


def _load_stopwords(path: str | None) -> frozenset[str]:
    if not path:
        return frozenset()
    words = set()
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.split("#", 1)[0].strip().lower()
        if line:
            words.update(line.split())
    return frozenset(words)


def _select_metrics(requested: list[str], have_sentences: bool, have_words: bool) -> list[str]:
    if requested:
        unknown = [m for m in requested if m not in METRIC_ORDER]
        if unknown:
            raise InputError(f"unknown metric(s): {', '.join(unknown)}")
        return [m for m in METRIC_ORDER if m in requested]
    selected = [m for m in METRIC_ORDER if m not in EMBEDDING_REQUIREMENTS]
    if have_sentences:
        selected.append("sbert")
    if have_words:
        selected.append("wmd")
    return selected


def make_setup(
    corpus: CorpusFile,
    cfg: RunConfig,
    candidates: CandidateSet | None = None,
    need_candidates: bool = False,
    word_store: EmbeddingStore | None = None,
    sentence_store: EmbeddingStore | None = None,
    synonyms: SynonymTable | None = None,
    stopwords: frozenset[str] = frozenset(),
) -> MetricSetup:
    """Validate already-loaded inputs into a setup; fail before any scoring."""
    if need_candidates:
        if candidates is None:
            raise InputError("this command requires candidate captions")
        uncovered = validate_candidates(candidates, corpus)
        if uncovered:
            raise InputError(f"no candidate caption for item(s): {', '.join(uncovered)}")
    metrics = _select_metrics(cfg.metrics, sentence_store is not None, word_store is not None)
    if "wmd" in metrics:
        if word_store is None:
            raise InputError("metric 'wmd' requires word embeddings")
        if word_store.kind != "word":
            raise InputError(f"expected word embeddings, found {word_store.kind}")
    if "sbert" in metrics:
        if sentence_store is None:
            raise InputError("metric 'sbert' requires sentence embeddings")
        if sentence_store.kind != "sentence":
            raise InputError(f"expected sentence embeddings, found {sentence_store.kind}")
        _check_sentence_keys(sentence_store, corpus, candidates)
    return MetricSetup(
        corpus=corpus,
        candidates=candidates,
        metrics=metrics,
        synonyms=synonyms or SynonymTable.empty(),
        stopwords=stopwords,
        word_store=word_store,
        sentence_store=sentence_store,
        config=cfg,
    )


def prepare(cfg: RunConfig, need_candidates: bool) -> MetricSetup:
    """Load inputs from the configured paths and validate them."""
    corpus = load_corpus(cfg.corpus, cfg.corpus_format)
    candidates = None
    if need_candidates:
        if not cfg.candidates:
            raise InputError("this command requires --candidates")
        candidates = load_candidates(cfg.candidates)
    word_store = load_embeddings(cfg.word_emb) if cfg.word_emb else None
    sentence_store = load_embeddings(cfg.sent_emb) if cfg.sent_emb else None
    synonyms = SynonymTable.load(cfg.synonyms) if cfg.synonyms else SynonymTable.empty()
    stopwords = _load_stopwords(cfg.stopwords)
    return make_setup(
        corpus,
        cfg,
        candidates=candidates,
        need_candidates=need_candidates,
        word_store=word_store,
        sentence_store=sentence_store,
        synonyms=synonyms,
        stopwords=stopwords,
    )


def _check_sentence_keys(store: EmbeddingStore, corpus: CorpusFile, candidates: CandidateSet | None) -> None:
    missing = []
    for item in corpus.items:
        for idx in range(len(item.captions)):
            key = f"{item.item_id}#{idx}"
            if key not in store:
                missing.append(key)
        if candidates is not None and item.item_id in candidates.entries:
            key = f"cand:{item.item_id}"
            if key not in store:
                missing.append(key)
    if missing:
        shown = ", ".join(missing[:5]) + ("..." if len(missing) > 5 else "")
        raise InputError(f"sentence embeddings missing {len(missing)} key(s): {shown}")


def _cider_tables(setup: MetricSetup):
    if setup.config.cider_df:
        return load_df_tables(setup.config.cider_df)
    return build_df(setup.corpus.items)


def _round(value: float | None, places: int = 6) -> float | None:
    if value is None:
        return None
    return round(value, places)


# --- score ---------------------------------------------------------------------------

def run_score(cfg: RunConfig) -> dict:
    """Corpus-level candidate-vs-references scores (one number per metric)."""
    setup = prepare(cfg, need_candidates=True)
    return score_corpus(setup)


def score_corpus(setup: MetricSetup) -> dict:
    cfg = setup.config
    metrics = setup.metrics
    warnings: list[str] = []
    bleu_orders = sorted(int(m.split("-")[1]) for m in metrics if m.startswith("bleu-"))
    max_order = max(bleu_orders, default=0)
    pooled = BleuStats.zeros(max_order) if max_order else None
    tables = _cider_tables(setup) if "cider" in metrics else None
    per_item: dict[str, dict[str, float | None]] = {}
    item_values: dict[str, list[float]] = {m: [] for m in metrics}

    for item in setup.corpus.items:
        candidate = setup.candidates.entries[item.item_id]
        references = list(item.captions)
        row: dict[str, float | None] = {}
        if max_order:
            stats = bleu_stats(candidate, references, max_order)
            pooled += stats
            sentence_scores = bleu_from_stats(stats, cfg.bleu_smoothing)
            for order in bleu_orders:
                row[f"bleu-{order}"] = sentence_scores[order - 1]
        if "rouge-l" in metrics:
            value = rouge_l(candidate, references)
            row["rouge-l"] = value
            item_values["rouge-l"].append(value)
        if "meteor" in metrics:
            value = meteor(candidate, references, setup.synonyms)
            row["meteor"] = value
            item_values["meteor"].append(value)
        if "cider" in metrics:
            score = cider(candidate, references, tables)
            value = score.scaled if cfg.cider_scale else score.raw
            row["cider"] = value
            item_values["cider"].append(value)
        if "sbert" in metrics:
            cand_emb = setup.sentence_store[f"cand:{item.item_id}"]
            ref_embs = [setup.sentence_store[f"{item.item_id}#{i}"] for i in range(len(references))]
            value = sbert_sc(cand_emb, ref_embs, cfg.sbert_agg)
            row["sbert"] = value
            item_values["sbert"].append(value)
        if "wmd" in metrics:
            distances = []
            for ref in references:
                try:
                    distances.append(
                        word_movers_distance(candidate, ref, setup.word_store, setup.stopwords)
                    )
                except AllTokensOOV:
                    continue
            if distances:
                value = math.fsum(distances) / len(distances)
                row["wmd"] = value
                item_values["wmd"].append(value)
            else:
                row["wmd"] = None
                warnings.append(f"wmd: item {item.item_id!r} fully out of vocabulary; excluded")
        per_item[item.item_id] = row

    corpus_scores: dict[str, float | None] = {}
    for metric in metrics:
        if metric.startswith("bleu-"):
            order = int(metric.split("-")[1])
            corpus_scores[metric] = bleu_from_stats(pooled, cfg.bleu_smoothing)[order - 1]
        else:
            values = item_values[metric]
            corpus_scores[metric] = math.fsum(values) / len(values) if values else None

    report = {
        "command": "score",
        "config": cfg.echo(),
        "counts": {"items": len(setup.corpus.items)},
        "metrics": {m: _round(v) for m, v in corpus_scores.items()},
        "warnings": sorted(warnings),
    }
    if cfg.per_item:
        report["per_item"] = {
            item_id: {m: _round(v) for m, v in row.items()} for item_id, row in per_item.items()
        }
    return report


# --- pairwise ------------------------------------------------------------------------

def _build_handle(metric: str, setup: MetricSetup):
    if metric.startswith("bleu-"):
        return BleuPair(order=int(metric.split("-")[1]), smoothing=setup.config.bleu_smoothing)
    if metric == "rouge-l":
        return RougeLPair()
    if metric == "meteor":
        return MeteorPair(setup.synonyms)
    if metric == "cider":
        return CiderPair(_cider_tables(setup))
    if metric == "sbert":
        return SentenceCosinePair(setup.sentence_store)
    if metric == "wmd":
        return WmdPair(setup.word_store, setup.stopwords)
    raise InputError(f"unknown metric {metric!r}")


def run_pairwise(cfg: RunConfig) -> dict:
    """Raw (and optionally normalized) score for every unordered caption pair."""
    setup = prepare(cfg, need_candidates=False)
    return pairwise_corpus(setup)


def pairwise_corpus(setup: MetricSetup) -> dict:
    cfg = setup.config
    warnings: list[str] = []
    per_metric: dict[str, dict] = {}
    for metric in setup.metrics:
        handle = _build_handle(metric, setup)
        matrix = pairwise_scores(setup.corpus.items, handle, threads=cfg.threads)
        normalized = None
        if cfg.include_normalized:
            try:
                normalized = normalize_scores(matrix, handle.orientation)
            except DegenerateRange as exc:
                warnings.append(f"{metric}: {exc}; raw scores only")
        rows = []
        for key in sorted(matrix.scores):
            (id_a, idx_a), (id_b, idx_b) = key
            entry = {
                "item_a": id_a,
                "caption_a": idx_a,
                "item_b": id_b,
                "caption_b": idx_b,
                "score": _round(matrix.scores[key]),
            }
            if normalized is not None:
                entry["normalized"] = _round(normalized.scores[key])
            rows.append(entry)
        per_metric[metric] = {"pairs": rows, "count": len(rows)}
    return {
        "command": "pairwise",
        "config": cfg.echo(),
        "metrics": per_metric,
        "warnings": sorted(warnings),
    }


# --- evaluate-metrics ------------------------------------------------------------------

def run_evaluate_metrics(cfg: RunConfig) -> dict:
    """Full discriminability protocol, ranked by normalized separation."""
    setup = prepare(cfg, need_candidates=False)
    return evaluate_corpus(setup)


def _report_payload(report: DiscriminabilityReport) -> dict:
    return {
        "AS": _round(report.avg_similar),
        "ADs": _round(report.avg_distinct),
        "ADf": _round(report.avg_different),
        "separation": _round(report.separation),
    }


def evaluate_corpus(setup: MetricSetup) -> dict:
    cfg = setup.config
    warnings: list[str] = []
    ranked_inputs: list[DiscriminabilityReport] = []
    entries: dict[str, dict] = {}
    for metric in setup.metrics:
        handle = _build_handle(metric, setup)
        matrix = pairwise_scores(setup.corpus.items, handle, threads=cfg.threads)
        entry: dict = {"metric": metric, "orientation": handle.orientation}
        try:
            raw_report = aggregate(matrix, setup.corpus.items)
            entry["raw"] = _report_payload(raw_report)
            entry["pair_counts"] = raw_report.pair_counts
            entry["missing"] = raw_report.missing_counts
            normalized_report = aggregate(normalize_scores(matrix, handle.orientation), setup.corpus.items)
            entry["normalized"] = _report_payload(normalized_report)
            ranked_inputs.append(
                DiscriminabilityReport(
                    metric_name=metric,
                    avg_similar=normalized_report.avg_similar,
                    avg_distinct=normalized_report.avg_distinct,
                    avg_different=normalized_report.avg_different,
                    separation=normalized_report.separation,
                    pair_counts=normalized_report.pair_counts,
                    missing_counts=normalized_report.missing_counts,
                )
            )
        except (DegenerateRange, EmptyBucket) as exc:
            reason = f"{type(exc).__name__}: {exc}"
            entry["error"] = reason
            warnings.append(f"{metric}: {reason}")
        entries[metric] = entry

    ranked = [r.metric_name for r in rank_metrics(ranked_inputs)]
    ordered = ranked + [m for m in setup.metrics if m not in ranked]
    return {
        "command": "evaluate-metrics",
        "config": cfg.echo(),
        "ranking": ranked,
        "metrics": [entries[m] for m in ordered],
        "warnings": sorted(warnings),
    }


# --- rendering -------------------------------------------------------------------------

def render_report(report: dict, out_format: str = "json") -> str:
    if out_format == "json":
        return json.dumps(report, indent=2, sort_keys=True, allow_nan=False) + "\n"
    if out_format == "csv":
        return _render_csv(report)
    raise InputError(f"unknown output format {out_format!r}")


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.6f}"
    return str(value)


def _render_csv(report: dict) -> str:
    command = report.get("command")
    lines: list[str] = []
    if command == "score":
        metrics = report["metrics"]
        columns = [m for m in METRIC_ORDER if m in metrics]
        lines.append(",".join(TABLE_COLUMNS[m] for m in columns))
        lines.append(",".join(_fmt(metrics[m]) for m in columns))
    elif command == "evaluate-metrics":
        lines.append("Metric,AS,ADs,ADf,AS-ADf")
        for entry in report["metrics"]:
            if "error" in entry:
                lines.append(f"{entry['metric']},error,,,")
                continue
            norm = entry["normalized"]
            lines.append(
                ",".join(
                    [entry["metric"], _fmt(norm["AS"]), _fmt(norm["ADs"]), _fmt(norm["ADf"]), _fmt(norm["separation"])]
                )
            )
    elif command == "pairwise":
        include_normalized = any(
            "normalized" in row for data in report["metrics"].values() for row in data["pairs"]
        )
        header = "metric,item_a,caption_a,item_b,caption_b,score"
        lines.append(header + (",normalized" if include_normalized else ""))
        for metric in sorted(report["metrics"]):
            for row in report["metrics"][metric]["pairs"]:
                fields = [
                    metric,
                    row["item_a"],
                    str(row["caption_a"]),
                    row["item_b"],
                    str(row["caption_b"]),
                    _fmt(row["score"]),
                ]
                if include_normalized:
                    fields.append(_fmt(row.get("normalized")))
                lines.append(",".join(fields))
    else:
        raise InputError(f"cannot render command {command!r} as CSV")
    return "\n".join(lines) + "\n"
