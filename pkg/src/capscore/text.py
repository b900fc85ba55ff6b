"""Text normalization, tokenization, stemming, and n-gram extraction.

Every metric in the package consumes captions through this module, so the
rules here are deliberately simple and deterministic: lowercase, punctuation
becomes a token boundary (intra-word apostrophes and hyphens survive), and
stemming is the classic Porter rule set.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from functools import lru_cache

from .errors import EmptyCaption

__all__ = ["Caption", "NGramVector", "normalize_and_tokenize", "extract_ngrams", "stem"]


@dataclass(frozen=True)
class Caption:
    """A raw caption string plus its normalized token sequence."""

    raw: str
    tokens: tuple[str, ...]

    def __len__(self) -> int:
        return len(self.tokens)


@dataclass
class NGramVector:
    """Sparse map from n-grams (token tuples) to non-negative weights."""

    order: int
    weights: dict[tuple[str, ...], float] = field(default_factory=dict)

    def total_weight(self) -> float:
        return sum(self.weights.values())

    def norm(self) -> float:
        return sum(w * w for w in self.weights.values()) ** 0.5


def _keep(ch: str) -> bool:
    return ch.isalnum() or ch in "'-"


def normalize_and_tokenize(raw: str) -> Caption:
    """Lowercase, break on whitespace and punctuation, and strip token edges.

    Apostrophes and hyphens are kept inside words ("don't", "so-called") but
    stripped from token edges. Raises EmptyCaption if nothing survives.
    """
    lowered = raw.lower()
    cleaned = "".join(ch if _keep(ch) else " " for ch in lowered)
    tokens = tuple(t for t in (chunk.strip("'-") for chunk in cleaned.split()) if t)
    if not tokens:
        raise EmptyCaption(f"caption normalizes to no tokens: {raw!r}")
    return Caption(raw=raw, tokens=tokens)


def extract_ngrams(caption: Caption, n: int) -> NGramVector:
    """Count vector of all contiguous n-grams; empty when the caption is shorter than n."""
    if n < 1:
        raise ValueError(f"n-gram order must be >= 1, got {n}")
    tokens = caption.tokens
    counts = Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))
    return NGramVector(order=n, weights={g: float(c) for g, c in counts.items()})


# --- Porter stemmer ----------------------------------------------------------
#
# Classic rule set (steps 1a-5b) with the two standard departures of the
# reference implementation (bli->ble, logi->log). Words of length <= 2 are
# returned unchanged.

_VOWELS = "aeiou"


class _Porter:
    def __init__(self, word: str):
        self.b = word
        self.k = len(word) - 1
        self.j = 0

    def cons(self, i: int) -> bool:
        ch = self.b[i]
        if ch in _VOWELS:
            return False
        if ch == "y":
            return True if i == 0 else not self.cons(i - 1)
        return True

    def m(self) -> int:
        # number of VC sequences in b[0..j]
        n = 0
        i = 0
        while True:
            if i > self.j:
                return n
            if not self.cons(i):
                break
            i += 1
        i += 1
        while True:
            while True:
                if i > self.j:
                    return n
                if self.cons(i):
                    break
                i += 1
            i += 1
            n += 1
            while True:
                if i > self.j:
                    return n
                if not self.cons(i):
                    break
                i += 1
            i += 1

    def vowel_in_stem(self) -> bool:
        return any(not self.cons(i) for i in range(self.j + 1))

    def doublec(self, j: int) -> bool:
        return j >= 1 and self.b[j] == self.b[j - 1] and self.cons(j)

    def cvc(self, i: int) -> bool:
        if i < 2 or not self.cons(i) or self.cons(i - 1) or not self.cons(i - 2):
            return False
        return self.b[i] not in "wxy"

    def ends(self, s: str) -> bool:
        if not self.b.endswith(s, 0, self.k + 1):
            return False
        if len(s) > self.k + 1:
            return False
        self.j = self.k - len(s)
        return True

    def setto(self, s: str) -> None:
        self.b = self.b[: self.j + 1] + s
        self.k = self.j + len(s)

    def r(self, s: str) -> None:
        if self.m() > 0:
            self.setto(s)

    def step1ab(self) -> None:
        if self.b[self.k] == "s":
            if self.ends("sses"):
                self.k -= 2
            elif self.ends("ies"):
                self.setto("i")
            elif self.b[self.k - 1] != "s":
                self.k -= 1
        if self.ends("eed"):
            if self.m() > 0:
                self.k -= 1
        elif (self.ends("ed") or self.ends("ing")) and self.vowel_in_stem():
            self.k = self.j
            self.b = self.b[: self.k + 1]
            if self.ends("at"):
                self.setto("ate")
            elif self.ends("bl"):
                self.setto("ble")
            elif self.ends("iz"):
                self.setto("ize")
            elif self.doublec(self.k):
                if self.b[self.k] not in "lsz":
                    self.k -= 1
            else:
                self.j = self.k
                if self.m() == 1 and self.cvc(self.k):
                    self.setto("e")
        self.b = self.b[: self.k + 1]

    def step1c(self) -> None:
        if self.ends("y") and self.vowel_in_stem():
            self.b = self.b[: self.k] + "i"

    def step2(self) -> None:
        pairs = {
            "a": (("ational", "ate"), ("tional", "tion")),
            "c": (("enci", "ence"), ("anci", "ance")),
            "e": (("izer", "ize"),),
            "l": (("bli", "ble"), ("alli", "al"), ("entli", "ent"), ("eli", "e"), ("ousli", "ous")),
            "o": (("ization", "ize"), ("ation", "ate"), ("ator", "ate")),
            "s": (("alism", "al"), ("iveness", "ive"), ("fulness", "ful"), ("ousness", "ous")),
            "t": (("aliti", "al"), ("iviti", "ive"), ("biliti", "ble")),
            "g": (("logi", "log"),),
        }
        for suffix, repl in pairs.get(self.b[self.k - 1], ()):
            if self.ends(suffix):
                self.r(repl)
                return

    def step3(self) -> None:
        pairs = {
            "e": (("icate", "ic"), ("ative", ""), ("alize", "al")),
            "i": (("iciti", "ic"),),
            "l": (("ical", "ic"), ("ful", "")),
            "s": (("ness", ""),),
        }
        for suffix, repl in pairs.get(self.b[self.k], ()):
            if self.ends(suffix):
                self.r(repl)
                return

    def step4(self) -> None:
        ch = self.b[self.k - 1]
        if ch == "a":
            if not self.ends("al"):
                return
        elif ch == "c":
            if not (self.ends("ance") or self.ends("ence")):
                return
        elif ch == "e":
            if not self.ends("er"):
                return
        elif ch == "i":
            if not self.ends("ic"):
                return
        elif ch == "l":
            if not (self.ends("able") or self.ends("ible")):
                return
        elif ch == "n":
            if not (self.ends("ant") or self.ends("ement") or self.ends("ment") or self.ends("ent")):
                return
        elif ch == "o":
            if self.ends("ion") and self.j >= 0 and self.b[self.j] in "st":
                pass
            elif not self.ends("ou"):
                return
        elif ch == "s":
            if not self.ends("ism"):
                return
        elif ch == "t":
            if not (self.ends("ate") or self.ends("iti")):
                return
        elif ch == "u":
            if not self.ends("ous"):
                return
        elif ch == "v":
            if not self.ends("ive"):
                return
        elif ch == "z":
            if not self.ends("ize"):
                return
        else:
            return
        if self.m() > 1:
            self.k = self.j
            self.b = self.b[: self.k + 1]

    def step5(self) -> None:
        self.j = self.k
        if self.b[self.k] == "e":
            a = self.m()
            if a > 1 or (a == 1 and not self.cvc(self.k - 1)):
                self.k -= 1
                self.b = self.b[: self.k + 1]
        self.j = self.k
        if self.b[self.k] == "l" and self.doublec(self.k) and self.m() > 1:
            self.k -= 1
            self.b = self.b[: self.k + 1]

    def run(self) -> str:
        if self.k <= 1:
            return self.b
        self.step1ab()
        self.step1c()
        self.step2()
        self.step3()
        self.step4()
        self.step5()
        return self.b[: self.k + 1]


@lru_cache(maxsize=65536)
def stem(token: str) -> str:
    """Porter stem of a lowercase token, applied to fixpoint.

    A single rule pass is not idempotent for every word (e.g. "agreed" ->
    "agre" -> "agr"), so the pass repeats until the word stops changing.
    """
    if not token:
        raise ValueError("cannot stem an empty token")
    current = token
    for _ in range(8):
        reduced = _Porter(current).run()
        if reduced == current:
            return current
        current = reduced
    return current
