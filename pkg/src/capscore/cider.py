"""CIDEr: TF-IDF weighted n-gram cosine similarity, averaged over n = 1..4.

Document frequencies count corpus items (audio clips), not individual
captions: an n-gram appearing in three captions of the same item still
contributes one document. The plain variant averages per-order cosines over
references; the optional CIDEr-D variant adds count clipping and a Gaussian
length penalty.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .errors import EmptyCorpus, FormatError, MissingDFOrder, NoReferences
from .text import Caption, NGramVector, extract_ngrams

__all__ = [
    "DocumentFrequencyTable",
    "CiderScore",
    "build_df",
    "tfidf_vector",
    "cider",
    "save_df_tables",
    "load_df_tables",
]

CIDER_MAX_N = 4
CIDER_SCALE = 10.0
CIDER_D_SIGMA = 6.0


@dataclass
class DocumentFrequencyTable:
    """Per-order map from n-gram to the number of corpus items containing it."""

    order: int
    df: dict[tuple[str, ...], int]
    num_items: int


def build_df(corpus: Sequence, max_n: int = CIDER_MAX_N) -> list[DocumentFrequencyTable]:
    """Document-frequency tables for orders 1..max_n.

    corpus holds one entry per item: either an object with a ``captions``
    attribute or a plain caption list. An n-gram's df increments once per
    item no matter how many of the item's captions contain it.
    """
    if not corpus:
        raise EmptyCorpus("cannot build document frequencies from an empty corpus")
    if max_n < 1:
        raise ValueError(f"max_n must be >= 1, got {max_n}")
    reference_sets = [getattr(entry, "captions", entry) for entry in corpus]
    tables = [DocumentFrequencyTable(order=n, df={}, num_items=len(reference_sets)) for n in range(1, max_n + 1)]
    for captions in reference_sets:
        for n, table in enumerate(tables, start=1):
            seen: set[tuple[str, ...]] = set()
            for caption in captions:
                seen.update(extract_ngrams(caption, n).weights)
            for gram in seen:
                table.df[gram] = table.df.get(gram, 0) + 1
    return tables


def tfidf_vector(caption: Caption, n: int, table: DocumentFrequencyTable) -> NGramVector:
    """TF-IDF vector: (count / total n-grams) * ln(num_items / max(df, 1)).

    N-grams never seen in the corpus get df = 1, i.e. maximum IDF.
    """
    if table.order != n:
        raise MissingDFOrder(f"document-frequency table has order {table.order}, need {n}")
    counts = extract_ngrams(caption, n)
    total = counts.total_weight()
    if total == 0:
        return NGramVector(order=n, weights={})
    weights = {}
    for gram, count in counts.weights.items():
        idf = math.log(table.num_items / max(table.df.get(gram, 1), 1))
        weight = (count / total) * idf
        if weight != 0.0:
            weights[gram] = weight
    return NGramVector(order=n, weights=weights)


def _cosine(a: NGramVector, b: NGramVector) -> float:
    na, nb = a.norm(), b.norm()
    if na == 0.0 or nb == 0.0:
        return 0.0
    small, large = (a.weights, b.weights) if len(a.weights) <= len(b.weights) else (b.weights, a.weights)
    dot = sum(w * large.get(g, 0.0) for g, w in small.items())
    return dot / (na * nb)


def _clipped_cosine(cand: NGramVector, ref: NGramVector) -> float:
    # CIDEr-D numerator: min(cand weight, ref weight) . ref weight
    na, nb = cand.norm(), ref.norm()
    if na == 0.0 or nb == 0.0:
        return 0.0
    dot = sum(min(w, ref.weights.get(g, 0.0)) * ref.weights.get(g, 0.0) for g, w in cand.weights.items())
    return dot / (na * nb)


@dataclass
class CiderScore:
    """Raw mean-over-orders cosine plus the conventionally scaled value."""

    raw: float
    scaled: float
    per_order: list[float]


def cider(
    candidate: Caption,
    references: Sequence[Caption],
    tables: Sequence[DocumentFrequencyTable],
    max_n: int = CIDER_MAX_N,
    d_variant: bool = False,
) -> CiderScore:
    """CIDEr score of a candidate against references.

    Per order: cosine between candidate and each reference TF-IDF vector,
    averaged over references; the final raw score averages orders 1..max_n.
    d_variant enables CIDEr-D count clipping and length penalty.
    """
    if not references:
        raise NoReferences("CIDEr requires at least one reference")
    by_order = {t.order: t for t in tables}
    missing = [n for n in range(1, max_n + 1) if n not in by_order]
    if missing:
        raise MissingDFOrder(f"document-frequency tables missing orders {missing}")
    per_order = []
    for n in range(1, max_n + 1):
        table = by_order[n]
        cand_vec = tfidf_vector(candidate, n, table)
        sims = []
        for ref in references:
            ref_vec = tfidf_vector(ref, n, table)
            if d_variant:
                sim = _clipped_cosine(cand_vec, ref_vec)
                delta = len(candidate) - len(ref)
                sim *= math.exp(-(delta**2) / (2 * CIDER_D_SIGMA**2))
            else:
                sim = _cosine(cand_vec, ref_vec)
            sims.append(sim)
        per_order.append(sum(sims) / len(sims))
    raw = sum(per_order) / len(per_order)
    return CiderScore(raw=raw, scaled=CIDER_SCALE * raw, per_order=per_order)


# --- document-frequency persistence -------------------------------------------

def save_df_tables(tables: Sequence[DocumentFrequencyTable], path: str | Path) -> None:
    """Write DF tables as JSON; n-gram keys are space-joined token tuples."""
    payload = {
        "num_items": tables[0].num_items if tables else 0,
        "tables": [
            {"order": t.order, "df": {" ".join(g): c for g, c in sorted(t.df.items())}}
            for t in tables
        ],
    }
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True), encoding="utf-8")


def load_df_tables(path: str | Path) -> list[DocumentFrequencyTable]:
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
        num_items = int(payload["num_items"])
        tables = []
        for entry in payload["tables"]:
            df = {tuple(k.split(" ")): int(v) for k, v in entry["df"].items()}
            tables.append(DocumentFrequencyTable(order=int(entry["order"]), df=df, num_items=num_items))
    except (KeyError, TypeError, ValueError, json.JSONDecodeError) as exc:
        raise FormatError(f"malformed document-frequency file {path}: {exc}") from exc
    for table in tables:
        for gram, count in table.df.items():
            if not 1 <= count <= num_items:
                raise FormatError(
                    f"df({' '.join(gram)}) = {count} outside [1, {num_items}] in {path}"
                )
    return tables
