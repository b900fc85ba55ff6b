"""Minimal readers for the corpus and candidate file formats.

The extractor only needs item ids, caption strings, and the tokenization
rule shared with the scoring side: lowercase, punctuation as a token
boundary, intra-word apostrophes and hyphens kept.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path


class ExtractionInputError(Exception):
    """Bad input file or job configuration."""


def tokenize(raw: str) -> list[str]:
    cleaned = "".join(ch if ch.isalnum() or ch in "'-" else " " for ch in raw.lower())
    return [t for t in (chunk.strip("'-") for chunk in cleaned.split()) if t]


@dataclass
class CorpusEntry:
    item_id: str
    captions: list[str]


def load_corpus(path: str | Path, source_format: str | None = None) -> list[CorpusEntry]:
    path = Path(path)
    if source_format is None:
        source_format = "csv" if path.suffix.lower() == ".csv" else "json"
    if source_format == "json":
        return _load_json(path)
    if source_format == "csv":
        return _load_csv(path)
    raise ExtractionInputError(f"unknown corpus format {source_format!r}")


def _load_json(path: Path) -> list[CorpusEntry]:
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ExtractionInputError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(payload, list):
        raise ExtractionInputError(f"{path}: expected a JSON list of items")
    entries = []
    for pos, item in enumerate(payload):
        if not isinstance(item, dict) or "item_id" not in item or "captions" not in item:
            raise ExtractionInputError(f"{path} item {pos}: need item_id and captions")
        captions = [str(c) for c in item["captions"]]
        if not captions:
            raise ExtractionInputError(f"{path} item {item['item_id']!r}: no captions")
        entries.append(CorpusEntry(item_id=str(item["item_id"]), captions=captions))
    return entries


def _load_csv(path: Path) -> list[CorpusEntry]:
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ExtractionInputError(f"{path}: empty CSV") from None
        if [h.strip() for h in header[:3]] != ["item_id", "caption_index", "caption"]:
            raise ExtractionInputError(f"{path}: expected header item_id,caption_index,caption[,tags]")
        rows: dict[str, list[tuple[int, str]]] = {}
        order: list[str] = []
        for row_num, row in enumerate(reader, start=2):
            if not row or all(not f.strip() for f in row):
                continue
            if len(row) < 3:
                raise ExtractionInputError(f"{path} row {row_num}: expected 3+ fields")
            item_id = row[0].strip()
            try:
                idx = int(row[1])
            except ValueError:
                raise ExtractionInputError(f"{path} row {row_num}: bad caption_index") from None
            if item_id not in rows:
                rows[item_id] = []
                order.append(item_id)
            rows[item_id].append((idx, row[2]))
    return [
        CorpusEntry(item_id=item_id, captions=[c for _, c in sorted(rows[item_id])])
        for item_id in order
    ]


def load_candidates(path: str | Path) -> dict[str, str]:
    path = Path(path)
    if path.suffix.lower() == ".csv":
        entries: dict[str, str] = {}
        with path.open(newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            try:
                header = next(reader)
            except StopIteration:
                raise ExtractionInputError(f"{path}: empty CSV") from None
            if [h.strip() for h in header[:2]] != ["item_id", "caption"]:
                raise ExtractionInputError(f"{path}: expected header item_id,caption")
            for row in reader:
                if len(row) >= 2 and row[0].strip():
                    entries[row[0].strip()] = row[1]
        return entries
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ExtractionInputError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(payload, dict):
        raise ExtractionInputError(f"{path}: expected a JSON object map")
    return {str(k): str(v) for k, v in payload.items()}
