import json

import pytest

from capscore.embeddings import EmbeddingStore, write_embeddings

# Tokens used across the evaluation fixtures; within-item caption pairs share
# meaning but no tokens, so overlap metrics and embedding metrics disagree.
EVAL_CORPUS = [
    {
        "item_id": "i0",
        "captions": ["a woman speaks softly", "the lady talks quietly"],
        "tags": ["speech"],
    },
    {
        "item_id": "i1",
        "captions": ["a man laughs loudly", "the guy chuckles noisily"],
        "tags": ["speech", "laughter"],
    },
    {
        "item_id": "i2",
        "captions": ["dogs bark outside", "puppies yap outdoors"],
        "tags": ["dog"],
    },
    {
        "item_id": "i3",
        "captions": ["rain falls on metal", "water drips onto tin"],
        "tags": [],
    },
]

EVAL_VOCAB = sorted(
    {
        token
        for entry in EVAL_CORPUS
        for caption in entry["captions"]
        for token in caption.split()
    }
)

# crude 4-d "meaning space": one axis per item, small per-word jitter
_ITEM_AXES = {"i0": 0, "i1": 1, "i2": 2, "i3": 3}


def _word_vector(token, position):
    owner = next(
        (e["item_id"] for e in EVAL_CORPUS if any(token in c.split() for c in e["captions"])),
        "i0",
    )
    vec = [0.05 * (position % 3), 0.0, 0.0, 0.0]
    vec[_ITEM_AXES[owner]] += 1.0
    return vec


def build_eval_word_store():
    store = EmbeddingStore(dim=4, kind="word")
    for pos, token in enumerate(EVAL_VOCAB):
        store.add(token, _word_vector(token, pos))
    return store


def build_eval_sentence_store(with_candidates=False):
    store = EmbeddingStore(dim=4, kind="sentence")
    for entry in EVAL_CORPUS:
        axis = _ITEM_AXES[entry["item_id"]]
        for idx in range(len(entry["captions"])):
            vec = [0.01 * idx] * 4
            vec[axis] += 1.0
            store.add(f"{entry['item_id']}#{idx}", vec)
        if with_candidates:
            vec = [0.0] * 4
            vec[axis] += 1.0
            store.add(f"cand:{entry['item_id']}", vec)
    return store


@pytest.fixture
def eval_corpus_path(tmp_path):
    path = tmp_path / "eval_corpus.json"
    path.write_text(json.dumps(EVAL_CORPUS), encoding="utf-8")
    return path


@pytest.fixture
def eval_embedding_paths(tmp_path):
    words = tmp_path / "words.capemb"
    sents = tmp_path / "sents.capemb"
    write_embeddings(build_eval_word_store(), words)
    write_embeddings(build_eval_sentence_store(), sents)
    return {"word": words, "sentence": sents}


# --- perfect-prediction fixture (single reference per item) ------------------------

SCORE_CORPUS = [
    {"item_id": "c0", "captions": ["a woman speaks softly"], "tags": ["speech"]},
    {"item_id": "c1", "captions": ["dogs bark outside"], "tags": ["dog"]},
    {"item_id": "c2", "captions": ["rain falls on metal"], "tags": []},
]


@pytest.fixture
def perfect_prediction_paths(tmp_path):
    corpus_path = tmp_path / "score_corpus.json"
    corpus_path.write_text(json.dumps(SCORE_CORPUS), encoding="utf-8")
    cands_path = tmp_path / "cands.json"
    cands_path.write_text(
        json.dumps({e["item_id"]: e["captions"][0] for e in SCORE_CORPUS}), encoding="utf-8"
    )

    vocab = sorted({t for e in SCORE_CORPUS for c in e["captions"] for t in c.split()})
    words = EmbeddingStore(dim=3, kind="word")
    for pos, token in enumerate(vocab):
        words.add(token, [1.0 + 0.25 * pos, 0.5 * ((pos % 3) - 1), 0.125 * pos])
    words_path = tmp_path / "words.capemb"
    write_embeddings(words, words_path)

    sents = EmbeddingStore(dim=3, kind="sentence")
    for pos, entry in enumerate(SCORE_CORPUS):
        vec = [0.0, 0.0, 0.0]
        vec[pos % 3] = 1.0 + pos
        sents.add(f"{entry['item_id']}#0", vec)
        sents.add(f"cand:{entry['item_id']}", vec)
    sents_path = tmp_path / "sents.capemb"
    write_embeddings(sents, sents_path)

    return {
        "corpus": corpus_path,
        "candidates": cands_path,
        "word": words_path,
        "sentence": sents_path,
    }
