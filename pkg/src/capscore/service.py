"""HTTP service exposing the scoring commands over inline payloads.

Corpora, candidates, and embeddings travel in the request body, so the
service stays stateless and useable by many clients at once; responses carry
the same report documents the CLI writes.
"""

from __future__ import annotations

from fastapi import FastAPI
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from .embeddings import EmbeddingStore
from .errors import CapscoreError, NumericalError
from .ingestion import CandidateSet, CorpusFile, CorpusItem
from .overlap import SynonymTable
from .runner import (
    RunConfig,
    evaluate_corpus,
    make_setup,
    pairwise_corpus,
    score_corpus,
)
from .text import normalize_and_tokenize

app = FastAPI(title="capscore", description="Caption similarity metrics service")


class CorpusItemModel(BaseModel):
    item_id: str
    captions: list[str] = Field(min_length=1)
    tags: list[str] = []


class EmbeddingsModel(BaseModel):
    kind: str = Field(pattern="^(word|sentence)$")
    dim: int = Field(gt=0)
    entries: dict[str, list[float]]


class MetricOptionsModel(BaseModel):
    metrics: list[str] = []
    synonyms: list[list[str]] = []
    stopwords: list[str] = []
    cider_scale: bool = True
    bleu_smoothing: str = Field(default="none", pattern="^(none|add-one)$")
    sbert_agg: str = Field(default="mean", pattern="^(mean|max)$")
    threads: int = Field(default=1, ge=1, le=64)


class ScoreRequest(BaseModel):
    corpus: list[CorpusItemModel] = Field(min_length=1)
    candidates: dict[str, str]
    word_embeddings: EmbeddingsModel | None = None
    sentence_embeddings: EmbeddingsModel | None = None
    options: MetricOptionsModel = MetricOptionsModel()
    per_item: bool = False


class PairwiseRequest(BaseModel):
    corpus: list[CorpusItemModel] = Field(min_length=1)
    word_embeddings: EmbeddingsModel | None = None
    sentence_embeddings: EmbeddingsModel | None = None
    options: MetricOptionsModel = MetricOptionsModel()
    normalized: bool = False


class EvaluateRequest(BaseModel):
    corpus: list[CorpusItemModel] = Field(min_length=1)
    word_embeddings: EmbeddingsModel | None = None
    sentence_embeddings: EmbeddingsModel | None = None
    options: MetricOptionsModel = MetricOptionsModel()


class ReportResponse(BaseModel):
    report: dict


class HealthResponse(BaseModel):
    status: str


def _build_corpus(models: list[CorpusItemModel]) -> CorpusFile:
    items = []
    seen = set()
    for model in models:
        if model.item_id in seen:
            raise CapscoreError(f"duplicate item_id {model.item_id!r}")
        seen.add(model.item_id)
        captions = tuple(normalize_and_tokenize(raw) for raw in model.captions)
        tags = frozenset(t.strip().lower() for t in model.tags if t.strip())
        items.append(CorpusItem(item_id=model.item_id, captions=captions, tags=tags))
    return CorpusFile(items=items, source_format="json")


def _build_store(model: EmbeddingsModel | None) -> EmbeddingStore | None:
    if model is None:
        return None
    store = EmbeddingStore(dim=model.dim, kind=model.kind)
    for key, values in model.entries.items():
        store.add(key, values)
    return store


def _build_config(options: MetricOptionsModel, per_item: bool = False, normalized: bool = False) -> RunConfig:
    return RunConfig(
        metrics=list(options.metrics),
        cider_scale=options.cider_scale,
        bleu_smoothing=options.bleu_smoothing,
        sbert_agg=options.sbert_agg,
        threads=options.threads,
        per_item=per_item,
        include_normalized=normalized,
    )


def _build_setup(request, cfg: RunConfig, need_candidates: bool):
    candidates = None
    if need_candidates:
        candidates = CandidateSet(
            entries={k: normalize_and_tokenize(v) for k, v in request.candidates.items()}
        )
    return make_setup(
        _build_corpus(request.corpus),
        cfg,
        candidates=candidates,
        need_candidates=need_candidates,
        word_store=_build_store(request.word_embeddings),
        sentence_store=_build_store(request.sentence_embeddings),
        synonyms=SynonymTable(request.options.synonyms),
        stopwords=frozenset(w.strip().lower() for w in request.options.stopwords),
    )


@app.exception_handler(CapscoreError)
async def capscore_error_handler(_, exc: CapscoreError):
    status = 500 if isinstance(exc, NumericalError) else 400
    return JSONResponse(status_code=status, content={"detail": str(exc)})


@app.get("/healthz", response_model=HealthResponse)
def healthz() -> HealthResponse:
    return HealthResponse(status="ok")


@app.post("/score", response_model=ReportResponse)
def score(request: ScoreRequest) -> ReportResponse:
    cfg = _build_config(request.options, per_item=request.per_item)
    setup = _build_setup(request, cfg, need_candidates=True)
    return ReportResponse(report=score_corpus(setup))


@app.post("/pairwise", response_model=ReportResponse)
def pairwise(request: PairwiseRequest) -> ReportResponse:
    cfg = _build_config(request.options, normalized=request.normalized)
    setup = _build_setup(request, cfg, need_candidates=False)
    return ReportResponse(report=pairwise_corpus(setup))


@app.post("/evaluate-metrics", response_model=ReportResponse)
def evaluate_metrics(request: EvaluateRequest) -> ReportResponse:
    cfg = _build_config(request.options)
    setup = _build_setup(request, cfg, need_candidates=False)
    return ReportResponse(report=evaluate_corpus(setup))
