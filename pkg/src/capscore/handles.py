"""Concrete pair-metric adapters for the discriminability protocol.

Overlap metrics and CIDEr treat one caption as the candidate, so the
protocol averages both directions; the embedding cosine and WMD are
inherently symmetric. WMD pairs where either side is fully out of
vocabulary come back as missing (None).
"""

from __future__ import annotations

from typing import Sequence

from .cider import DocumentFrequencyTable, cider
from .discriminability import CaptionRef
from .embeddings import EmbeddingStore, cosine_similarity
from .errors import AllTokensOOV, InputError
from .overlap import SynonymTable, bleu, meteor, rouge_l
from .wmd import word_movers_distance

__all__ = [
    "BleuPair",
    "RougeLPair",
    "MeteorPair",
    "CiderPair",
    "SentenceCosinePair",
    "WmdPair",
    "sentence_key",
]


def sentence_key(ref: CaptionRef) -> str:
    return f"{ref.item_id}#{ref.caption_index}"


class BleuPair:
    orientation = "higher"
    symmetric = False

    def __init__(self, order: int, smoothing: str = "none"):
        self.order = order
        self.smoothing = smoothing
        self.name = f"bleu-{order}"

    def score_pair(self, x: CaptionRef, y: CaptionRef) -> float:
        return bleu(x.caption, [y.caption], max_n=self.order, smoothing=self.smoothing)[-1]


class RougeLPair:
    name = "rouge-l"
    orientation = "higher"
    symmetric = False

    def score_pair(self, x: CaptionRef, y: CaptionRef) -> float:
        return rouge_l(x.caption, [y.caption])


class MeteorPair:
    name = "meteor"
    orientation = "higher"
    symmetric = False

    def __init__(self, synonyms: SynonymTable | None = None):
        self.synonyms = synonyms or SynonymTable.empty()

    def score_pair(self, x: CaptionRef, y: CaptionRef) -> float:
        return meteor(x.caption, [y.caption], self.synonyms)


class CiderPair:
    name = "cider"
    orientation = "higher"
    symmetric = False

    def __init__(self, tables: Sequence[DocumentFrequencyTable]):
        self.tables = tables

    def score_pair(self, x: CaptionRef, y: CaptionRef) -> float:
        return cider(x.caption, [y.caption], self.tables).raw


class SentenceCosinePair:
    """Cosine between stored sentence embeddings, keyed item_id#index."""

    name = "sbert"
    orientation = "higher"
    symmetric = True

    def __init__(self, store: EmbeddingStore):
        self.store = store

    def score_pair(self, x: CaptionRef, y: CaptionRef) -> float:
        ex = self.store.get(sentence_key(x))
        ey = self.store.get(sentence_key(y))
        if ex is None or ey is None:
            missing = sentence_key(x) if ex is None else sentence_key(y)
            raise InputError(f"sentence embedding missing for caption {missing!r}")
        return cosine_similarity(ex, ey)


class WmdPair:
    name = "wmd"
    orientation = "lower"
    symmetric = True

    def __init__(self, store: EmbeddingStore, stopwords: frozenset[str] = frozenset()):
        self.store = store
        self.stopwords = stopwords

    def score_pair(self, x: CaptionRef, y: CaptionRef) -> float | None:
        try:
            return word_movers_distance(x.caption, y.caption, self.store, self.stopwords)
        except AllTokensOOV:
            return None
