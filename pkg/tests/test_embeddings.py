import math
import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from capscore.embeddings import (
    EmbeddingStore,
    TokenDistribution,
    cosine_similarity,
    cross_entropy,
    cross_entropy_total,
    load_embeddings,
    sbert_sc,
    sentence_loss,
    sentence_loss_total,
    write_embeddings,
)
from capscore.errors import (
    DimensionMismatch,
    DuplicateKey,
    FormatError,
    NoReferences,
    ZeroNormVector,
)

finite_vec = st.lists(
    st.floats(min_value=-10, max_value=10, allow_nan=False, allow_infinity=False),
    min_size=2,
    max_size=8,
).filter(lambda v: sum(x * x for x in v) > 1e-6)


# --- cosine ----------------------------------------------------------------------

def test_cosine_self_is_one():
    assert cosine_similarity([3.0, 4.0], [3.0, 4.0]) == pytest.approx(1.0, abs=1e-15)


def test_cosine_orthogonal():
    assert cosine_similarity([1.0, 0.0], [0.0, 1.0]) == 0.0


def test_cosine_45_degrees():
    assert cosine_similarity([1.0, 1.0], [1.0, 0.0]) == pytest.approx(1 / math.sqrt(2), abs=1e-12)


def test_cosine_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        cosine_similarity([1.0, 2.0], [1.0, 2.0, 3.0])


def test_cosine_zero_norm():
    with pytest.raises(ZeroNormVector):
        cosine_similarity([0.0, 0.0], [1.0, 0.0])


@given(finite_vec, finite_vec)
@settings(max_examples=100)
def test_cosine_symmetry(a, b):
    if len(a) != len(b):
        a, b = a[: min(len(a), len(b))], b[: min(len(a), len(b))]
        if sum(x * x for x in a) == 0 or sum(x * x for x in b) == 0:
            return
    assert cosine_similarity(a, b) == cosine_similarity(b, a)


@given(
    finite_vec,
    st.floats(min_value=0.01, max_value=50),
    st.floats(min_value=0.01, max_value=50),
)
@settings(max_examples=100)
def test_cosine_scale_invariance(v, alpha, beta):
    w = [x + 0.5 for x in v]  # second vector, same length, nonzero
    base = cosine_similarity(v, w)
    scaled = cosine_similarity([alpha * x for x in v], [beta * x for x in w])
    assert scaled == pytest.approx(base, abs=1e-9)


def test_cosine_clamped_to_unit_interval():
    v = [0.1] * 7
    assert cosine_similarity(v, v) <= 1.0


# --- sbert_sc ---------------------------------------------------------------------

def test_sbert_single_reference_identity():
    v = [0.2, -0.4, 0.9]
    assert sbert_sc(v, [v]) == pytest.approx(1.0, abs=1e-12)


def test_sbert_mean_of_references():
    got = sbert_sc([1.0, 0.0], [[1.0, 0.0], [0.0, 1.0]])
    assert got == pytest.approx(0.5, abs=1e-12)


def test_sbert_max_aggregation():
    got = sbert_sc([1.0, 0.0], [[1.0, 0.0], [0.0, 1.0]], aggregate="max")
    assert got == pytest.approx(1.0, abs=1e-12)


def test_sbert_no_references():
    with pytest.raises(NoReferences):
        sbert_sc([1.0, 0.0], [])


# --- sentence loss ------------------------------------------------------------------

def test_sentence_loss_parallel():
    assert sentence_loss([1.0, 2.0], [1.0, 2.0]) == pytest.approx(0.0, abs=1e-15)


def test_sentence_loss_orthogonal():
    assert sentence_loss([1.0, 0.0], [0.0, 1.0]) == 1.0


def test_sentence_loss_antipodal():
    assert sentence_loss([1.0, 0.0], [-1.0, 0.0]) == 2.0


def test_sentence_loss_batch_sums():
    pairs = [([1.0, 0.0], [0.0, 1.0]), ([1.0, 0.0], [-1.0, 0.0])]
    assert sentence_loss_total(pairs) == pytest.approx(3.0, abs=1e-12)


@given(finite_vec)
@settings(max_examples=100)
def test_loss_plus_cosine_is_exactly_one(v):
    w = [x * 0.5 + 0.25 for x in v]
    if sum(x * x for x in w) == 0:
        return
    assert sentence_loss(v, w) + cosine_similarity(v, w) == 1.0


# --- cross entropy ------------------------------------------------------------------

def test_one_hot_perfect_prediction():
    p = TokenDistribution.one_hot(3)
    assert cross_entropy(p, p) == 0.0


def test_one_hot_half_probability():
    p = TokenDistribution.one_hot(1)
    q = TokenDistribution({1: 0.5, 2: 0.5})
    assert cross_entropy(p, q) == pytest.approx(math.log(2), abs=1e-12)


def test_missing_support_infinite():
    p = TokenDistribution.one_hot(1)
    q = TokenDistribution({2: 1.0})
    assert cross_entropy(p, q) == math.inf


def test_cross_entropy_batch_sums():
    p = TokenDistribution.one_hot(1)
    q = TokenDistribution({1: 0.5, 2: 0.5})
    assert cross_entropy_total([(p, q), (p, q)]) == pytest.approx(2 * math.log(2), abs=1e-12)


def test_self_cross_entropy_is_entropy():
    p = TokenDistribution({1: 0.25, 2: 0.75})
    expected = -(0.25 * math.log(0.25) + 0.75 * math.log(0.75))
    assert cross_entropy(p, p) == pytest.approx(expected, abs=1e-12)


def test_distribution_validation():
    with pytest.raises(ValueError):
        TokenDistribution({1: 0.5, 2: 0.6})
    with pytest.raises(ValueError):
        TokenDistribution({1: 1.5, 2: -0.5})


def random_distribution(rng, support):
    raw = [rng.random() + 1e-3 for _ in range(support)]
    total = sum(raw)
    probs = {i: x / total for i, x in enumerate(raw)}
    # re-normalize exactly enough for the 1e-6 invariant
    return TokenDistribution(probs)


def test_gibbs_inequality_randomized():
    rng = random.Random(7)
    for _ in range(300):
        support = rng.randint(2, 30)
        p = random_distribution(rng, support)
        q = random_distribution(rng, support)
        assert cross_entropy(p, q) >= cross_entropy(p, p) - 1e-9


# --- store and file format -----------------------------------------------------------

def small_store():
    store = EmbeddingStore(dim=3, kind="word")
    store.add("cat", [1.0, 0.5, -0.25])
    store.add("dog", [0.125, -1.0, 2.0])
    return store


def test_store_rejects_duplicate_key():
    store = small_store()
    with pytest.raises(DuplicateKey):
        store.add("cat", [1.0, 1.0, 1.0])


def test_store_rejects_wrong_dimension():
    store = small_store()
    with pytest.raises(DimensionMismatch):
        store.add("bird", [1.0, 2.0])


def test_store_rejects_zero_vector():
    store = small_store()
    with pytest.raises(ZeroNormVector):
        store.add("void", [0.0, 0.0, 0.0])


def test_text_round_trip(tmp_path):
    store = small_store()
    path = tmp_path / "vectors.capemb"
    write_embeddings(store, path)
    loaded = load_embeddings(path)
    assert loaded.dim == 3 and loaded.kind == "word" and len(loaded) == 2
    for key in store.keys():
        np.testing.assert_array_equal(loaded[key], store[key])


def test_binary_round_trip(tmp_path):
    store = small_store()
    path = tmp_path / "vectors.capembb"
    write_embeddings(store, path)
    loaded = load_embeddings(path)
    assert len(loaded) == 2
    for key in store.keys():
        np.testing.assert_array_equal(loaded[key], store[key])


def test_load_well_formed_two_entry_file(tmp_path):
    path = tmp_path / "v.capemb"
    path.write_text(
        "CAPEMB 1 sentence 3 2\n"
        "item1#0\t1.0 2.0 3.0\n"
        "cand:item1\t0.5 0.25 0.125\n",
        encoding="utf-8",
    )
    store = load_embeddings(path)
    assert len(store) == 2
    assert store.kind == "sentence"
    assert "cand:item1" in store


def test_load_ragged_rows_rejected(tmp_path):
    path = tmp_path / "v.capemb"
    path.write_text(
        "CAPEMB 1 word 3 2\na\t1 2 3\nb\t1 2 3 4\n",
        encoding="utf-8",
    )
    with pytest.raises(DimensionMismatch):
        load_embeddings(path)


def test_load_duplicate_key_rejected(tmp_path):
    path = tmp_path / "v.capemb"
    path.write_text(
        "CAPEMB 1 word 2 2\na\t1 2\na\t3 4\n",
        encoding="utf-8",
    )
    with pytest.raises(DuplicateKey):
        load_embeddings(path)


@pytest.mark.parametrize(
    "header",
    [
        "WRONG 1 word 2 1",
        "CAPEMB 2 word 2 1",
        "CAPEMB 1 noise 2 1",
        "CAPEMB 1 word x 1",
        "CAPEMB 1 word 2",
    ],
)
def test_bad_headers_rejected(tmp_path, header):
    path = tmp_path / "v.capemb"
    path.write_text(f"{header}\na\t1 2\n", encoding="utf-8")
    with pytest.raises(FormatError):
        load_embeddings(path)


def test_count_mismatch_rejected(tmp_path):
    path = tmp_path / "v.capemb"
    path.write_text("CAPEMB 1 word 2 3\na\t1 2\n", encoding="utf-8")
    with pytest.raises(FormatError):
        load_embeddings(path)


def test_text_and_binary_agree(tmp_path):
    store = small_store()
    t, b = tmp_path / "v.capemb", tmp_path / "v.capembb"
    write_embeddings(store, t)
    write_embeddings(store, b)
    text_store, bin_store = load_embeddings(t), load_embeddings(b)
    for key in store.keys():
        np.testing.assert_allclose(text_store[key], bin_store[key], atol=1e-6)
