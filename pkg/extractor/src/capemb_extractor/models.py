"""Embedding backends.

Three model-id schemes:

- ``hash:<dim>``      deterministic feature-hashing encoder; needs no model
                      files, so tests and smoke runs are reproducible anywhere.
- ``word2vec:<path>`` word vectors from a text file (``token v1 .. vn`` lines,
                      optional ``count dim`` header). Word kind only.
- anything else       a sentence-transformers model name; the documented
                      default is ``sentence-transformers/paraphrase-MiniLM-L6-v2``
                      (384-dim, 6-layer). Sentence kind only; requires the
                      optional ``models`` dependency and a fetchable model.

All backends are deterministic in inference mode: the same input text always
produces the same vector.
"""

from __future__ import annotations

import hashlib
from pathlib import Path

import numpy as np

from .corpus import ExtractionInputError, tokenize

DEFAULT_SENTENCE_MODEL = "sentence-transformers/paraphrase-MiniLM-L6-v2"


class HashEncoder:
    """Stable pseudo-random unit vectors from token digests, mean-pooled."""

    def __init__(self, dim: int):
        if dim <= 0:
            raise ExtractionInputError(f"hash encoder dimension must be positive, got {dim}")
        self.dim = dim

    def _token_vector(self, token: str) -> np.ndarray:
        digest = hashlib.blake2b(token.encode("utf-8"), digest_size=8).digest()
        rng = np.random.default_rng(int.from_bytes(digest, "little"))
        vec = rng.standard_normal(self.dim)
        return vec / np.linalg.norm(vec)

    def encode_words(self, tokens: list[str]) -> tuple[dict[str, np.ndarray], list[str]]:
        return {t: self._token_vector(t).astype(np.float32) for t in tokens}, []

    def encode_sentences(self, texts: list[str], batch_size: int) -> np.ndarray:
        out = np.zeros((len(texts), self.dim), dtype=np.float32)
        for i, text in enumerate(texts):
            tokens = tokenize(text)
            if not tokens:
                raise ExtractionInputError(f"caption normalizes to no tokens: {text!r}")
            pooled = np.mean([self._token_vector(t) for t in tokens], axis=0)
            norm = np.linalg.norm(pooled)
            if norm == 0.0:
                pooled = self._token_vector(" ".join(tokens))
                norm = np.linalg.norm(pooled)
            out[i] = (pooled / norm).astype(np.float32)
        return out


class Word2VecFile:
    """Word vectors read once from a word2vec-style text file."""

    def __init__(self, path: str | Path):
        self.vectors: dict[str, np.ndarray] = {}
        self.dim = 0
        lines = Path(path).read_text(encoding="utf-8").splitlines()
        start = 0
        if lines and len(lines[0].split()) == 2 and all(f.isdigit() for f in lines[0].split()):
            self.dim = int(lines[0].split()[1])
            start = 1
        for line_num, line in enumerate(lines[start:], start=start + 1):
            if not line.strip():
                continue
            fields = line.split()
            token, values = fields[0], fields[1:]
            if self.dim == 0:
                self.dim = len(values)
            if len(values) != self.dim:
                raise ExtractionInputError(
                    f"{path} line {line_num}: {len(values)} values, expected {self.dim}"
                )
            try:
                self.vectors[token] = np.array([float(v) for v in values], dtype=np.float32)
            except ValueError as exc:
                raise ExtractionInputError(f"{path} line {line_num}: bad float") from exc
        if not self.vectors:
            raise ExtractionInputError(f"{path}: no vectors found")

    def encode_words(self, tokens: list[str]) -> tuple[dict[str, np.ndarray], list[str]]:
        found = {t: self.vectors[t] for t in tokens if t in self.vectors}
        oov = [t for t in tokens if t not in self.vectors]
        return found, oov


class SentenceTransformerEncoder:
    """Wrapper around a sentence-transformers model (inference mode)."""

    def __init__(self, name: str):
        try:
            from sentence_transformers import SentenceTransformer
        except ImportError as exc:
            raise ExtractionInputError(
                "sentence-transformers is not installed; install the 'models' extra "
                "or use a hash:<dim> model"
            ) from exc
        try:
            self.model = SentenceTransformer(name)
        except Exception as exc:
            raise ExtractionInputError(f"could not load model {name!r}: {exc}") from exc
        self.dim = int(self.model.get_sentence_embedding_dimension())

    def encode_sentences(self, texts: list[str], batch_size: int) -> np.ndarray:
        out = self.model.encode(
            texts,
            batch_size=batch_size,
            convert_to_numpy=True,
            show_progress_bar=False,
        )
        return np.asarray(out, dtype=np.float32)


def build_model(model_id: str, kind: str):
    if model_id.startswith("hash:"):
        try:
            dim = int(model_id.split(":", 1)[1])
        except ValueError:
            raise ExtractionInputError(f"bad hash model id {model_id!r}, want hash:<dim>") from None
        return HashEncoder(dim)
    if model_id.startswith("word2vec:"):
        if kind != "word":
            raise ExtractionInputError("word2vec models only produce word embeddings")
        return Word2VecFile(model_id.split(":", 1)[1])
    if kind != "sentence":
        raise ExtractionInputError(
            f"model {model_id!r} is a sentence encoder; use hash:<dim> or word2vec:<path> for words"
        )
    return SentenceTransformerEncoder(model_id)
