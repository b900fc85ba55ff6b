"""Exact-overlap metric family: BLEU, ROUGE-L, and METEOR.

BLEU reports orders 1..max_n from clipped modified precisions with a brevity
penalty. ROUGE-L is the LCS F-measure maximized over references. METEOR
aligns unigrams in staged passes (exact, stem, synonym) and penalizes
fragmented alignments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .errors import NoReferences
from .text import Caption, extract_ngrams, stem

__all__ = [
    "SynonymTable",
    "MatchPair",
    "MatchAlignment",
    "bleu",
    "bleu_stats",
    "bleu_from_stats",
    "BleuStats",
    "lcs_length",
    "rouge_l",
    "align",
    "meteor",
]

ROUGE_BETA = 1.2
METEOR_FMEAN_WEIGHT = 9.0  # Fmean = 10PR / (R + 9P)
METEOR_PENALTY_WEIGHT = 0.5
METEOR_PENALTY_POWER = 3.0
EXACT_ALIGN_TOKEN_LIMIT = 25


class SynonymTable:
    """Groups of interchangeable tokens, loaded from a plain-text table.

    File format: one group per line, tokens separated by spaces; ``#`` starts
    a comment; blank lines ignored. A token may appear in several groups.
    """

    def __init__(self, groups: Iterable[Iterable[str]] = ()):
        self.groups: tuple[frozenset[str], ...] = tuple(
            frozenset(g) for g in groups if frozenset(g)
        )
        self._membership: dict[str, set[int]] = {}
        for gi, group in enumerate(self.groups):
            for token in group:
                self._membership.setdefault(token, set()).add(gi)

    def related(self, a: str, b: str) -> bool:
        """True when some group contains both tokens."""
        ga = self._membership.get(a)
        if not ga:
            return False
        gb = self._membership.get(b)
        return bool(gb) and not ga.isdisjoint(gb)

    @classmethod
    def empty(cls) -> "SynonymTable":
        return cls()

    @classmethod
    def load(cls, path: str | Path) -> "SynonymTable":
        groups = []
        for line in Path(path).read_text(encoding="utf-8").splitlines():
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            groups.append(line.lower().split())
        return cls(groups)

    def __len__(self) -> int:
        return len(self.groups)


# --- BLEU --------------------------------------------------------------------

@dataclass
class BleuStats:
    """Sufficient statistics for BLEU; addable across a corpus."""

    clipped: list[int]
    totals: list[int]
    candidate_len: int
    reference_len: int

    def __iadd__(self, other: "BleuStats") -> "BleuStats":
        self.clipped = [a + b for a, b in zip(self.clipped, other.clipped)]
        self.totals = [a + b for a, b in zip(self.totals, other.totals)]
        self.candidate_len += other.candidate_len
        self.reference_len += other.reference_len
        return self

    @classmethod
    def zeros(cls, max_n: int) -> "BleuStats":
        return cls([0] * max_n, [0] * max_n, 0, 0)


def _closest_reference_len(candidate_len: int, references: Sequence[Caption]) -> int:
    # ties between equally close reference lengths go to the shorter one
    return min((len(r) for r in references), key=lambda rl: (abs(rl - candidate_len), rl))


def bleu_stats(candidate: Caption, references: Sequence[Caption], max_n: int = 4) -> BleuStats:
    """Clipped n-gram match counts and lengths for one candidate."""
    if not references:
        raise NoReferences("BLEU requires at least one reference")
    if max_n < 1:
        raise ValueError(f"max_n must be >= 1, got {max_n}")
    stats = BleuStats.zeros(max_n)
    stats.candidate_len = len(candidate)
    stats.reference_len = _closest_reference_len(len(candidate), references)
    for n in range(1, max_n + 1):
        cand_counts = extract_ngrams(candidate, n).weights
        if not cand_counts:
            continue
        ref_maxima: dict[tuple[str, ...], float] = {}
        for ref in references:
            for gram, count in extract_ngrams(ref, n).weights.items():
                if count > ref_maxima.get(gram, 0.0):
                    ref_maxima[gram] = count
        clipped = sum(min(c, ref_maxima.get(g, 0.0)) for g, c in cand_counts.items())
        stats.clipped[n - 1] = int(clipped)
        stats.totals[n - 1] = int(sum(cand_counts.values()))
    return stats


def bleu_from_stats(stats: BleuStats, smoothing: str = "none") -> list[float]:
    """BLEU-1..max_n from (possibly pooled) statistics.

    smoothing="none" leaves raw precisions (a zero precision zeroes the
    score); "add-one" applies add-one smoothing to orders >= 2.
    """
    if smoothing not in ("none", "add-one"):
        raise ValueError(f"unknown BLEU smoothing: {smoothing!r}")
    precisions = []
    for n, (clipped, total) in enumerate(zip(stats.clipped, stats.totals), start=1):
        if smoothing == "add-one" and n >= 2:
            clipped, total = clipped + 1, total + 1
        precisions.append(clipped / total if total > 0 else 0.0)
    c, r = stats.candidate_len, stats.reference_len
    bp = math.exp(min(0.0, 1.0 - r / c)) if c > 0 else 0.0
    scores = []
    for k in range(1, len(precisions) + 1):
        head = precisions[:k]
        if any(p == 0.0 for p in head):
            scores.append(0.0)
        else:
            scores.append(bp * math.exp(sum(math.log(p) for p in head) / k))
    return scores


def bleu(
    candidate: Caption,
    references: Sequence[Caption],
    max_n: int = 4,
    smoothing: str = "none",
) -> list[float]:
    """Sentence-level BLEU-1..max_n."""
    return bleu_from_stats(bleu_stats(candidate, references, max_n), smoothing)


# --- ROUGE-L -----------------------------------------------------------------

def lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    """Longest common subsequence length by dynamic programming."""
    if not a or not b:
        return 0
    prev = [0] * (len(b) + 1)
    for x in a:
        curr = [0]
        for j, y in enumerate(b, start=1):
            curr.append(prev[j - 1] + 1 if x == y else max(prev[j], curr[j - 1]))
        prev = curr
    return prev[-1]


def rouge_l(candidate: Caption, references: Sequence[Caption], beta: float = ROUGE_BETA) -> float:
    """ROUGE-L F-measure, maximum over references."""
    if not references:
        raise NoReferences("ROUGE-L requires at least one reference")
    best = 0.0
    for ref in references:
        lcs = lcs_length(candidate.tokens, ref.tokens)
        if lcs == 0:
            continue
        precision = lcs / len(candidate)
        recall = lcs / len(ref)
        denom = recall + beta * beta * precision
        f = (1 + beta * beta) * precision * recall / denom
        best = max(best, f)
    return best


# --- METEOR ------------------------------------------------------------------

@dataclass(frozen=True)
class MatchPair:
    cand: int
    ref: int
    stage: str  # exact | stem | synonym


@dataclass(frozen=True)
class MatchAlignment:
    """One-to-one unigram alignment between a candidate and one reference."""

    pairs: tuple[MatchPair, ...]

    def chunk_count(self) -> int:
        ordered = sorted(self.pairs, key=lambda p: p.cand)
        chunks = 0
        prev = None
        for p in ordered:
            if prev is None or p.cand != prev.cand + 1 or p.ref != prev.ref + 1:
                chunks += 1
            prev = p
        return chunks


def _chunk_count(index_pairs: Sequence[tuple[int, int]]) -> int:
    ordered = sorted(index_pairs)
    chunks = 0
    prev = None
    for c, r in ordered:
        if prev is None or c != prev[0] + 1 or r != prev[1] + 1:
            chunks += 1
        prev = (c, r)
    return chunks


def _stage_eligible(
    cand_tokens: Sequence[str],
    ref_tokens: Sequence[str],
    stage: str,
    syn: SynonymTable,
    free_cand: Sequence[int],
    free_ref: Sequence[int],
) -> dict[int, list[int]]:
    if stage == "exact":
        match = lambda a, b: a == b
    elif stage == "stem":
        match = lambda a, b: stem(a) == stem(b)
    else:
        match = lambda a, b: syn.related(a, b)
    eligible = {}
    for ci in free_cand:
        refs = [ri for ri in free_ref if match(cand_tokens[ci], ref_tokens[ri])]
        if refs:
            eligible[ci] = refs
    return eligible


def _search_stage(
    eligible: dict[int, list[int]],
    fixed: list[tuple[int, int]],
    node_budget: int = 500_000,
) -> list[tuple[int, int]]:
    """Maximum-cardinality matching for one stage, ties broken by fewest
    chunks of the cumulative alignment, then by smallest pair list.

    Exhaustive branch-and-bound; falls back to the greedy heuristic if the
    node budget is exhausted.
    """
    cands = sorted(eligible)
    best: dict[str, object] = {"matches": -1, "chunks": math.inf, "pairs": None}
    nodes = 0

    def dfs(idx: int, chosen: list[tuple[int, int]], used_ref: set[int]) -> bool:
        nonlocal nodes
        nodes += 1
        if nodes > node_budget:
            return False
        remaining = len(cands) - idx
        free_refs = {r for ci in cands[idx:] for r in eligible[ci] if r not in used_ref}
        upper = len(chosen) + min(remaining, len(free_refs))
        if upper < best["matches"]:
            return True
        if upper == best["matches"]:
            # each future pair can lower the chunk count by at most one
            chunk_floor = _chunk_count(fixed + chosen) - (upper - len(chosen))
            if chunk_floor > best["chunks"]:
                return True
        if idx == len(cands):
            matches = len(chosen)
            chunks = _chunk_count(fixed + chosen)
            key = (-matches, chunks, tuple(chosen))
            best_key = (-best["matches"], best["chunks"], best["pairs"] or ())
            if key < best_key:
                best.update(matches=matches, chunks=chunks, pairs=tuple(chosen))
            return True
        ci = cands[idx]
        for ri in eligible[ci]:
            if ri in used_ref:
                continue
            used_ref.add(ri)
            chosen.append((ci, ri))
            ok = dfs(idx + 1, chosen, used_ref)
            chosen.pop()
            used_ref.remove(ri)
            if not ok:
                return False
        return dfs(idx + 1, chosen, used_ref)

    completed = dfs(0, [], set())
    if completed and best["pairs"] is not None:
        return list(best["pairs"])  # type: ignore[arg-type]
    return _greedy_stage(eligible)


def _greedy_stage(eligible: dict[int, list[int]]) -> list[tuple[int, int]]:
    """Left-to-right matching, preferring the reference that extends a run."""
    chosen: list[tuple[int, int]] = []
    used_ref: set[int] = set()
    prev: tuple[int, int] | None = None
    for ci in sorted(eligible):
        options = [ri for ri in eligible[ci] if ri not in used_ref]
        if not options:
            continue
        ri = None
        if prev is not None and ci == prev[0] + 1 and prev[1] + 1 in options:
            ri = prev[1] + 1
        else:
            ri = options[0]
        chosen.append((ci, ri))
        used_ref.add(ri)
        prev = (ci, ri)
    return chosen


def align(candidate: Caption, reference: Caption, syn: SynonymTable | None = None) -> MatchAlignment:
    """Staged one-to-one alignment: exact matches first, then stems, then synonyms."""
    syn = syn or SynonymTable.empty()
    cand_tokens, ref_tokens = candidate.tokens, reference.tokens
    exact_search = max(len(cand_tokens), len(ref_tokens)) <= EXACT_ALIGN_TOKEN_LIMIT
    pairs: list[MatchPair] = []
    fixed: list[tuple[int, int]] = []
    used_cand: set[int] = set()
    used_ref: set[int] = set()
    for stage in ("exact", "stem", "synonym"):
        free_cand = [i for i in range(len(cand_tokens)) if i not in used_cand]
        free_ref = [i for i in range(len(ref_tokens)) if i not in used_ref]
        eligible = _stage_eligible(cand_tokens, ref_tokens, stage, syn, free_cand, free_ref)
        if not eligible:
            continue
        if exact_search:
            stage_pairs = _search_stage(eligible, fixed)
        else:
            stage_pairs = _greedy_stage(eligible)
        for ci, ri in stage_pairs:
            pairs.append(MatchPair(ci, ri, stage))
            fixed.append((ci, ri))
            used_cand.add(ci)
            used_ref.add(ri)
    return MatchAlignment(pairs=tuple(sorted(pairs, key=lambda p: p.cand)))


def meteor(
    candidate: Caption,
    references: Sequence[Caption],
    syn: SynonymTable | None = None,
) -> float:
    """METEOR score, maximum over references.

    Fmean = 10PR/(R + 9P) over aligned unigrams; fragmentation penalty
    0.5 * (chunks/matches)^3; zero when nothing aligns.
    """
    if not references:
        raise NoReferences("METEOR requires at least one reference")
    best = 0.0
    for ref in references:
        alignment = align(candidate, ref, syn)
        m = len(alignment.pairs)
        if m == 0:
            continue
        precision = m / len(candidate)
        recall = m / len(ref)
        fmean = 10.0 * precision * recall / (recall + METEOR_FMEAN_WEIGHT * precision)
        chunks = alignment.chunk_count()
        penalty = METEOR_PENALTY_WEIGHT * (chunks / m) ** METEOR_PENALTY_POWER
        best = max(best, fmean * (1.0 - penalty))
    return best
