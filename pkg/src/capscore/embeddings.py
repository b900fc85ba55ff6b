"""Embedding storage and embedding-based scores.

Vectors arrive through CAPEMB files written offline (see the extractor
package); nothing here runs a neural network. Sentence cosine gives the
SBERT_sc metric, its complement is the sentence loss, and the token-level
cross-entropy evaluator handles one-hot/predicted distribution pairs.

CAPEMB text format:
    CAPEMB 1 <kind:word|sentence> <dim> <count>
    <key>\\t<v1> <v2> ... <v_dim>        (one line per entry)
Binary variant (``.capembb`` extension): same header line, then per entry a
key line followed by dim little-endian float32 values.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    DimensionMismatch,
    DuplicateKey,
    FormatError,
    NoReferences,
    ZeroNormVector,
)

__all__ = [
    "EmbeddingStore",
    "TokenDistribution",
    "cosine_similarity",
    "sbert_sc",
    "sentence_loss",
    "sentence_loss_total",
    "cross_entropy",
    "cross_entropy_total",
    "load_embeddings",
    "write_embeddings",
]

BINARY_SUFFIX = ".capembb"
_MAGIC = "CAPEMB"
_VERSION = "1"
_KINDS = ("word", "sentence")


class EmbeddingStore:
    """Keyed collection of fixed-dimension float32 vectors."""

    def __init__(self, dim: int, kind: str, entries: Mapping[str, np.ndarray] | None = None):
        if dim <= 0:
            raise ValueError(f"embedding dimension must be positive, got {dim}")
        if kind not in _KINDS:
            raise ValueError(f"embedding kind must be one of {_KINDS}, got {kind!r}")
        self.dim = dim
        self.kind = kind
        self._entries: dict[str, np.ndarray] = {}
        for key, values in (entries or {}).items():
            self.add(key, values)

    def add(self, key: str, values: Sequence[float] | np.ndarray) -> None:
        if key in self._entries:
            raise DuplicateKey(f"duplicate embedding key {key!r}")
        vec = np.asarray(values, dtype=np.float32)
        if vec.shape != (self.dim,):
            raise DimensionMismatch(
                f"embedding {key!r} has {vec.size} values, store dimension is {self.dim}"
            )
        if not np.all(np.isfinite(vec)):
            raise FormatError(f"embedding {key!r} contains non-finite values")
        if float(np.linalg.norm(vec)) == 0.0:
            raise ZeroNormVector(f"embedding {key!r} has zero norm")
        vec.flags.writeable = False
        self._entries[key] = vec

    def __contains__(self, key: str) -> bool:
        return key in self._entries

    def __getitem__(self, key: str) -> np.ndarray:
        return self._entries[key]

    def get(self, key: str) -> np.ndarray | None:
        return self._entries.get(key)

    def keys(self) -> Iterable[str]:
        return self._entries.keys()

    def __len__(self) -> int:
        return len(self._entries)


def _as_vector(v: Sequence[float] | np.ndarray) -> np.ndarray:
    arr = np.asarray(v, dtype=np.float64)
    if arr.ndim != 1:
        raise DimensionMismatch(f"expected a 1-d vector, got shape {arr.shape}")
    return arr


def cosine_similarity(a: Sequence[float] | np.ndarray, b: Sequence[float] | np.ndarray) -> float:
    """Cosine of the angle between two vectors, clamped to [-1, 1]."""
    va, vb = _as_vector(a), _as_vector(b)
    if va.shape != vb.shape:
        raise DimensionMismatch(f"vector dimensions differ: {va.size} vs {vb.size}")
    na = float(np.linalg.norm(va))
    nb = float(np.linalg.norm(vb))
    if na == 0.0 or nb == 0.0:
        raise ZeroNormVector("cosine similarity undefined for zero-norm vectors")
    raw = min(1.0, max(-1.0, float(va @ vb) / (na * nb)))
    # round-trip through the loss complement (<= 1 ulp change) so that
    # cosine + (1 - cosine) sums to exactly 1.0 in floating point
    return 1.0 - (1.0 - raw)


def sbert_sc(
    candidate: Sequence[float] | np.ndarray,
    references: Sequence[Sequence[float] | np.ndarray],
    aggregate: str = "mean",
) -> float:
    """Sentence-embedding cosine score against one or more references.

    aggregate="mean" (default) averages per-reference cosines; "max" keeps
    the best one.
    """
    if len(references) == 0:
        raise NoReferences("sbert_sc requires at least one reference embedding")
    if aggregate not in ("mean", "max"):
        raise ValueError(f"unknown aggregation {aggregate!r}")
    sims = [cosine_similarity(candidate, ref) for ref in references]
    return max(sims) if aggregate == "max" else math.fsum(sims) / len(sims)


def sentence_loss(t: Sequence[float] | np.ndarray, u: Sequence[float] | np.ndarray) -> float:
    """One minus the cosine similarity; 0 for parallel, 2 for antipodal vectors."""
    return 1.0 - cosine_similarity(t, u)


def sentence_loss_total(pairs: Iterable[tuple[Sequence[float], Sequence[float]]]) -> float:
    """Sum of sentence losses over a batch of (generated, reference) pairs."""
    return math.fsum(sentence_loss(t, u) for t, u in pairs)


@dataclass(frozen=True)
class TokenDistribution:
    """Probability distribution over token ids."""

    probs: dict[int, float]

    def __post_init__(self):
        if any(p < 0.0 for p in self.probs.values()):
            raise ValueError("token probabilities must be non-negative")
        total = math.fsum(self.probs.values())
        if abs(total - 1.0) > 1e-6:
            raise ValueError(f"token probabilities sum to {total}, expected 1")

    @classmethod
    def one_hot(cls, token_id: int) -> "TokenDistribution":
        return cls({token_id: 1.0})


def cross_entropy(p: TokenDistribution, q: TokenDistribution) -> float:
    """-sum p(i) ln q(i); +inf when p puts mass where q has none."""
    total = 0.0
    for token_id, p_i in p.probs.items():
        if p_i == 0.0:
            continue
        q_i = q.probs.get(token_id, 0.0)
        if q_i == 0.0:
            return math.inf
        total += p_i * math.log(q_i)
    return -total if total != 0.0 else 0.0


def cross_entropy_total(pairs: Iterable[tuple[TokenDistribution, TokenDistribution]]) -> float:
    """Summed cross-entropy over a batch; infinite if any pair is infinite."""
    return math.fsum(cross_entropy(p, q) for p, q in pairs)


# --- CAPEMB file I/O -----------------------------------------------------------

def _parse_header(line: str, path: Path) -> tuple[str, int, int]:
    parts = line.strip().split()
    if len(parts) != 5 or parts[0] != _MAGIC or parts[1] != _VERSION:
        raise FormatError(f"{path}: bad CAPEMB header {line.strip()!r}")
    kind = parts[2]
    if kind not in _KINDS:
        raise FormatError(f"{path}: unknown embedding kind {kind!r}")
    try:
        dim, count = int(parts[3]), int(parts[4])
    except ValueError as exc:
        raise FormatError(f"{path}: non-integer dim/count in header") from exc
    if dim <= 0 or count < 0:
        raise FormatError(f"{path}: invalid dim {dim} or count {count}")
    return kind, dim, count


def load_embeddings(path: str | Path) -> EmbeddingStore:
    """Read a CAPEMB file (text, or binary when the extension is .capembb)."""
    path = Path(path)
    if path.suffix == BINARY_SUFFIX:
        return _load_binary(path)
    return _load_text(path)


def _load_text(path: Path) -> EmbeddingStore:
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines:
        raise FormatError(f"{path}: empty file")
    kind, dim, count = _parse_header(lines[0], path)
    rows = [line for line in lines[1:] if line.strip()]
    if len(rows) != count:
        raise FormatError(f"{path}: header declares {count} entries, found {len(rows)}")
    store = EmbeddingStore(dim=dim, kind=kind)
    for row in rows:
        if "\t" not in row:
            raise FormatError(f"{path}: missing tab separator in row {row[:40]!r}")
        key, _, rest = row.partition("\t")
        fields = rest.split()
        if len(fields) != dim:
            raise DimensionMismatch(
                f"{path}: entry {key!r} has {len(fields)} values, expected {dim}"
            )
        try:
            values = [float(f) for f in fields]
        except ValueError as exc:
            raise FormatError(f"{path}: non-numeric value in entry {key!r}") from exc
        store.add(key, values)
    return store


def _load_binary(path: Path) -> EmbeddingStore:
    data = path.read_bytes()
    newline = data.find(b"\n")
    if newline < 0:
        raise FormatError(f"{path}: missing header line")
    try:
        header = data[:newline].decode("utf-8")
    except UnicodeDecodeError as exc:
        raise FormatError(f"{path}: undecodable header") from exc
    kind, dim, count = _parse_header(header, path)
    store = EmbeddingStore(dim=dim, kind=kind)
    offset = newline + 1
    row_bytes = 4 * dim
    for _ in range(count):
        key_end = data.find(b"\n", offset)
        if key_end < 0:
            raise FormatError(f"{path}: truncated key record")
        try:
            key = data[offset:key_end].decode("utf-8")
        except UnicodeDecodeError as exc:
            raise FormatError(f"{path}: undecodable key") from exc
        offset = key_end + 1
        if offset + row_bytes > len(data):
            raise FormatError(f"{path}: truncated vector for key {key!r}")
        values = struct.unpack(f"<{dim}f", data[offset : offset + row_bytes])
        offset += row_bytes
        store.add(key, values)
    if offset != len(data):
        raise FormatError(f"{path}: {len(data) - offset} trailing bytes after last entry")
    return store


def write_embeddings(store: EmbeddingStore, path: str | Path) -> None:
    """Write a store in CAPEMB format; binary when the extension is .capembb."""
    path = Path(path)
    header = f"{_MAGIC} {_VERSION} {store.kind} {store.dim} {len(store)}\n"
    if path.suffix == BINARY_SUFFIX:
        blob = bytearray(header.encode("utf-8"))
        for key in store.keys():
            blob += key.encode("utf-8") + b"\n"
            blob += struct.pack(f"<{store.dim}f", *store[key].tolist())
        path.write_bytes(bytes(blob))
        return
    with path.open("w", encoding="utf-8") as fh:
        fh.write(header)
        for key in store.keys():
            rendered = " ".join(f"{float(v):.9g}" for v in store[key])
            fh.write(f"{key}\t{rendered}\n")
