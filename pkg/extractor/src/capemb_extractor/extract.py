"""Extraction jobs: corpus in, CAPEMB file out."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .capemb import write_capemb
from .corpus import ExtractionInputError, load_candidates, load_corpus, tokenize
from .models import build_model


@dataclass
class ExtractionJob:
    """One extraction run.

    ``expected_dim`` pins the output dimension; a model emitting anything
    else is an error. ``candidates`` adds ``cand:<item_id>`` entries to
    sentence extractions.
    """

    input_path: str
    model_id: str
    kind: str  # word | sentence
    output_path: str
    batch_size: int = 32
    binary: bool | None = None
    expected_dim: int | None = None
    candidates_path: str | None = None
    input_format: str | None = None


def _check_dim(job: ExtractionJob, dim: int) -> None:
    if job.expected_dim is not None and dim != job.expected_dim:
        raise ExtractionInputError(
            f"declared dimension {job.expected_dim} but model emits {dim}"
        )


def extract_sentence_embeddings(job: ExtractionJob) -> Path:
    """One embedding per caption, keyed ``<item_id>#<caption_index>``.

    Candidate captions (when given) are keyed ``cand:<item_id>``.
    """
    if job.kind != "sentence":
        raise ExtractionInputError(f"sentence extraction got kind {job.kind!r}")
    corpus = load_corpus(job.input_path, job.input_format)
    keys: list[str] = []
    texts: list[str] = []
    for entry in corpus:
        for idx, caption in enumerate(entry.captions):
            keys.append(f"{entry.item_id}#{idx}")
            texts.append(caption)
    if job.candidates_path:
        for item_id, caption in sorted(load_candidates(job.candidates_path).items()):
            keys.append(f"cand:{item_id}")
            texts.append(caption)
    model = build_model(job.model_id, "sentence")
    vectors = model.encode_sentences(texts, job.batch_size)
    if vectors.shape != (len(texts), vectors.shape[1]):
        raise ExtractionInputError("model returned a malformed embedding matrix")
    dim = int(vectors.shape[1])
    _check_dim(job, dim)
    entries = list(zip(keys, vectors))
    write_capemb(entries, "sentence", dim, job.output_path, job.binary)
    return Path(job.output_path)


def extract_word_embeddings(job: ExtractionJob) -> Path:
    """One embedding per unique in-vocabulary token across the corpus.

    Out-of-vocabulary tokens go to a ``<output>.oov.txt`` sidecar; an empty
    vocabulary after filtering is an error.
    """
    if job.kind != "word":
        raise ExtractionInputError(f"word extraction got kind {job.kind!r}")
    corpus = load_corpus(job.input_path, job.input_format)
    vocabulary = sorted({t for entry in corpus for caption in entry.captions for t in tokenize(caption)})
    if job.candidates_path:
        for caption in load_candidates(job.candidates_path).values():
            vocabulary.extend(t for t in tokenize(caption) if t not in vocabulary)
        vocabulary = sorted(set(vocabulary))
    if not vocabulary:
        raise ExtractionInputError("corpus has no tokens to embed")
    model = build_model(job.model_id, "word")
    found, oov = model.encode_words(vocabulary)
    if not found:
        raise ExtractionInputError("every corpus token is out of the model vocabulary")
    dim = int(next(iter(found.values())).shape[0])
    _check_dim(job, dim)
    entries = [(token, found[token]) for token in sorted(found)]
    write_capemb(entries, "word", dim, job.output_path, job.binary)
    sidecar = Path(str(job.output_path) + ".oov.txt")
    sidecar.write_text("\n".join(oov) + ("\n" if oov else ""), encoding="utf-8")
    return Path(job.output_path)
