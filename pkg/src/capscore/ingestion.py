"""Corpus and candidate-caption loading.

Two corpus encodings: a native JSON list of ``{item_id, captions, tags}``
objects (canonical interchange) and a CSV with header
``item_id,caption_index,caption[,tags]`` where tags are ``;``-separated.
Candidates are one caption per item, as CSV ``item_id,caption`` or a JSON
object map. Audio itself is never read.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import (
    DuplicateCandidate,
    DuplicateItem,
    EmptyCaption,
    ParseError,
    UnknownItem,
)
from .text import Caption, normalize_and_tokenize

__all__ = [
    "CorpusItem",
    "CorpusFile",
    "CandidateSet",
    "load_corpus",
    "save_corpus",
    "load_candidates",
    "validate_candidates",
]


@dataclass(frozen=True)
class CorpusItem:
    """One audio item: its id, reference captions, and audio tags."""

    item_id: str
    captions: tuple[Caption, ...]
    tags: frozenset[str] = frozenset()


@dataclass
class CorpusFile:
    items: list[CorpusItem]
    source_format: str

    def by_id(self) -> dict[str, CorpusItem]:
        return {item.item_id: item for item in self.items}


@dataclass
class CandidateSet:
    """Exactly one candidate caption per item id."""

    entries: dict[str, Caption] = field(default_factory=dict)


def _normalize_tags(raw_tags) -> frozenset[str]:
    return frozenset(t.strip().lower() for t in raw_tags if t and t.strip())


def _tokenize_or_fail(raw: str, context: str) -> Caption:
    try:
        return normalize_and_tokenize(raw)
    except EmptyCaption as exc:
        raise EmptyCaption(f"{context}: {exc}") from exc


def load_corpus(path: str | Path, source_format: str | None = None) -> CorpusFile:
    """Load a captioned corpus; format inferred from the extension if omitted."""
    path = Path(path)
    if source_format is None:
        source_format = "csv" if path.suffix.lower() == ".csv" else "json"
    if source_format == "csv":
        return _load_corpus_csv(path)
    if source_format == "json":
        return _load_corpus_json(path)
    raise ParseError(f"unknown corpus format {source_format!r}")


def _load_corpus_csv(path: Path) -> CorpusFile:
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: empty CSV file") from None
        if [h.strip() for h in header[:3]] != ["item_id", "caption_index", "caption"]:
            raise ParseError(f"{path}: expected header item_id,caption_index,caption[,tags]")
        has_tags = len(header) >= 4 and header[3].strip() == "tags"
        rows_by_item: dict[str, list[tuple[int, Caption]]] = {}
        tags_by_item: dict[str, frozenset[str]] = {}
        order: list[str] = []
        for row_num, row in enumerate(reader, start=2):
            if not row or all(not f.strip() for f in row):
                continue
            if len(row) < 3:
                raise ParseError(f"{path} row {row_num}: expected at least 3 fields, got {len(row)}")
            item_id = row[0].strip()
            if not item_id:
                raise ParseError(f"{path} row {row_num}: empty item_id")
            try:
                caption_index = int(row[1])
            except ValueError:
                raise ParseError(f"{path} row {row_num}: caption_index {row[1]!r} is not an integer") from None
            caption = _tokenize_or_fail(row[2], f"{path} row {row_num}")
            tags = _normalize_tags(row[3].split(";")) if has_tags and len(row) > 3 else frozenset()
            if item_id not in rows_by_item:
                rows_by_item[item_id] = []
                tags_by_item[item_id] = tags
                order.append(item_id)
            elif tags_by_item[item_id] != tags:
                raise DuplicateItem(
                    f"{path} row {row_num}: item {item_id!r} repeats with conflicting tags"
                )
            if any(ci == caption_index for ci, _ in rows_by_item[item_id]):
                raise ParseError(
                    f"{path} row {row_num}: duplicate caption_index {caption_index} for item {item_id!r}"
                )
            rows_by_item[item_id].append((caption_index, caption))
    items = [
        CorpusItem(
            item_id=item_id,
            captions=tuple(c for _, c in sorted(rows_by_item[item_id], key=lambda t: t[0])),
            tags=tags_by_item[item_id],
        )
        for item_id in order
    ]
    return CorpusFile(items=items, source_format="csv")


def _load_corpus_json(path: Path) -> CorpusFile:
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(payload, list):
        raise ParseError(f"{path}: expected a top-level JSON list of items")
    items = []
    seen: set[str] = set()
    for pos, entry in enumerate(payload):
        if not isinstance(entry, dict) or "item_id" not in entry or "captions" not in entry:
            raise ParseError(f"{path} item {pos}: expected an object with item_id and captions")
        item_id = str(entry["item_id"])
        if item_id in seen:
            raise DuplicateItem(f"{path}: duplicate item_id {item_id!r}")
        seen.add(item_id)
        raw_captions = entry["captions"]
        if not isinstance(raw_captions, list) or not raw_captions:
            raise ParseError(f"{path} item {item_id!r}: captions must be a non-empty list")
        captions = tuple(
            _tokenize_or_fail(str(raw), f"{path} item {item_id!r} caption {ci}")
            for ci, raw in enumerate(raw_captions)
        )
        tags = _normalize_tags(str(t) for t in entry.get("tags", []))
        items.append(CorpusItem(item_id=item_id, captions=captions, tags=tags))
    return CorpusFile(items=items, source_format="json")


def save_corpus(corpus: CorpusFile, path: str | Path) -> None:
    """Write the canonical JSON encoding (raw caption strings, sorted tags)."""
    payload = [
        {
            "item_id": item.item_id,
            "captions": [c.raw for c in item.captions],
            "tags": sorted(item.tags),
        }
        for item in corpus.items
    ]
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def load_candidates(path: str | Path) -> CandidateSet:
    """Load one candidate caption per item id (CSV ``item_id,caption`` or JSON map)."""
    path = Path(path)
    entries: dict[str, Caption] = {}
    if path.suffix.lower() == ".csv":
        with path.open(newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            try:
                header = next(reader)
            except StopIteration:
                raise ParseError(f"{path}: empty CSV file") from None
            if [h.strip() for h in header[:2]] != ["item_id", "caption"]:
                raise ParseError(f"{path}: expected header item_id,caption")
            for row_num, row in enumerate(reader, start=2):
                if not row or all(not f.strip() for f in row):
                    continue
                if len(row) < 2:
                    raise ParseError(f"{path} row {row_num}: expected 2 fields")
                item_id = row[0].strip()
                if item_id in entries:
                    raise DuplicateCandidate(f"{path} row {row_num}: second candidate for {item_id!r}")
                entries[item_id] = _tokenize_or_fail(row[1], f"{path} row {row_num}")
    else:
        try:
            payload = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ParseError(f"{path}: invalid JSON: {exc}") from exc
        if not isinstance(payload, dict):
            raise ParseError(f"{path}: expected a JSON object mapping item_id to caption")
        for item_id, raw in payload.items():
            entries[str(item_id)] = _tokenize_or_fail(str(raw), f"{path} item {item_id!r}")
    return CandidateSet(entries=entries)


def validate_candidates(candidates: CandidateSet, corpus: CorpusFile) -> list[str]:
    """Cross-check candidates against a corpus.

    Raises UnknownItem for candidates naming absent items; returns the ids of
    corpus items that have no candidate (callers decide whether that matters).
    """
    known = {item.item_id for item in corpus.items}
    for item_id in candidates.entries:
        if item_id not in known:
            raise UnknownItem(f"candidate for unknown item {item_id!r}")
    return sorted(known - set(candidates.entries))
