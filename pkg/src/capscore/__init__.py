"""Caption similarity metrics and metric-discriminability evaluation."""

from .cider import DocumentFrequencyTable, build_df, cider, tfidf_vector
from .discriminability import (
    CaptionRef,
    DiscriminabilityReport,
    PairScoreMatrix,
    aggregate,
    normalize_scores,
    pairwise_scores,
    rank_metrics,
)
from .embeddings import (
    EmbeddingStore,
    TokenDistribution,
    cosine_similarity,
    cross_entropy,
    load_embeddings,
    sbert_sc,
    sentence_loss,
    write_embeddings,
)
from .ingestion import (
    CandidateSet,
    CorpusFile,
    CorpusItem,
    load_candidates,
    load_corpus,
    save_corpus,
)
from .overlap import SynonymTable, bleu, meteor, rouge_l
from .text import Caption, NGramVector, extract_ngrams, normalize_and_tokenize, stem
from .wmd import build_problem, relaxed_lower_bound, solve_exact, word_movers_distance

__all__ = [
    "Caption",
    "NGramVector",
    "extract_ngrams",
    "normalize_and_tokenize",
    "stem",
    "SynonymTable",
    "bleu",
    "rouge_l",
    "meteor",
    "DocumentFrequencyTable",
    "build_df",
    "tfidf_vector",
    "cider",
    "EmbeddingStore",
    "TokenDistribution",
    "cosine_similarity",
    "sbert_sc",
    "sentence_loss",
    "cross_entropy",
    "load_embeddings",
    "write_embeddings",
    "build_problem",
    "solve_exact",
    "relaxed_lower_bound",
    "word_movers_distance",
    "CaptionRef",
    "PairScoreMatrix",
    "DiscriminabilityReport",
    "pairwise_scores",
    "normalize_scores",
    "aggregate",
    "rank_metrics",
    "CorpusItem",
    "CorpusFile",
    "CandidateSet",
    "load_corpus",
    "save_corpus",
    "load_candidates",
]
