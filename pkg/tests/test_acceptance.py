"""Acceptance suite: one test per criterion, each printing a pass/fail line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the criterion lines.
Embedding-file criteria use hand-written CAPEMB fixtures defined inline.
"""

import json
import math
import random
import time
from contextlib import contextmanager

import numpy as np
import pytest
from scipy.optimize import linprog

from capscore.cider import build_df, cider
from capscore.cli import EXIT_OK, main as cli_main
from capscore.discriminability import aggregate, normalize_scores, pairwise_scores
from capscore.embeddings import (
    EmbeddingStore,
    TokenDistribution,
    cosine_similarity,
    cross_entropy,
    load_embeddings,
    sbert_sc,
    sentence_loss,
)
from capscore.handles import BleuPair, CiderPair, SentenceCosinePair
from capscore.ingestion import CorpusItem
from capscore.overlap import bleu, meteor, rouge_l
from capscore.text import Caption
from capscore.wmd import TransportProblem, build_problem, relaxed_lower_bound, solve_exact


@contextmanager
def criterion(name):
    try:
        yield
    except BaseException:
        print(f"[ACCEPTANCE] {name}: FAIL")
        raise
    print(f"[ACCEPTANCE] {name}: PASS")


def cap(*tokens):
    return Caption(raw=" ".join(tokens), tokens=tuple(tokens))


def random_caption(rng, vocab, min_len=3, max_len=20):
    return cap(*[rng.choice(vocab) for _ in range(rng.randint(min_len, max_len))])


# --- criterion: metric self-scores ---------------------------------------------------

def test_metric_self_score_suite():
    with criterion("self-score suite (200 captions, <5s)"):
        rng = random.Random(1001)
        vocab = [f"w{i}" for i in range(50)]
        words = EmbeddingStore(dim=8, kind="word")
        for token in vocab:
            words.add(token, [rng.uniform(-1, 1) for _ in range(8)])
        started = time.monotonic()
        for _ in range(200):
            c = random_caption(rng, vocab)
            m = len(c.tokens)
            for order, score in enumerate(bleu(c, [c], max_n=4), start=1):
                if order <= m:
                    assert abs(score - 1.0) <= 1e-9
            assert abs(rouge_l(c, [c]) - 1.0) <= 1e-9
            assert abs(meteor(c, [c]) - (1.0 - 0.5 / m**3)) <= 1e-9
            plan = solve_exact(build_problem(c, c, words))
            assert abs(plan.objective) <= 1e-9
            emb = np.array([rng.uniform(-1, 1) for _ in range(16)])
            assert abs(sbert_sc(emb, [emb]) - 1.0) <= 1e-9
        elapsed = time.monotonic() - started
        assert elapsed < 5.0, f"self-score suite took {elapsed:.2f}s"


# --- criterion: WMD oracle equivalence -----------------------------------------------

def lp_transport_optimum(problem):
    m, n = problem.cost.shape
    a_eq = np.zeros((m + n, m * n))
    for i in range(m):
        a_eq[i, i * n : (i + 1) * n] = 1.0
    for j in range(n):
        a_eq[m + j, j::n] = 1.0
    b_eq = np.concatenate([problem.supply, problem.demand])
    result = linprog(problem.cost.ravel(), A_eq=a_eq, b_eq=b_eq, bounds=(0, None), method="highs")
    assert result.status == 0
    return float(result.fun)


def test_wmd_oracle_equivalence():
    with criterion("WMD vs LP oracle (500 problems, <30s)"):
        rng = random.Random(2002)
        started = time.monotonic()
        for _ in range(500):
            m, n = rng.randint(2, 6), rng.randint(2, 6)
            supply = np.array([rng.random() + 0.05 for _ in range(m)])
            supply /= supply.sum()
            demand = np.array([rng.random() + 0.05 for _ in range(n)])
            demand /= demand.sum()
            src = np.array([[rng.uniform(-1, 1) for _ in range(4)] for _ in range(m)])
            dst = np.array([[rng.uniform(-1, 1) for _ in range(4)] for _ in range(n)])
            cost = np.sqrt(((src[:, None, :] - dst[None, :, :]) ** 2).sum(axis=2))
            problem = TransportProblem(
                supply_tokens=tuple(f"s{i}" for i in range(m)),
                supply=supply,
                demand_tokens=tuple(f"d{j}" for j in range(n)),
                demand=demand,
                cost=cost,
            )
            exact = solve_exact(problem).objective
            assert abs(exact - lp_transport_optimum(problem)) <= 1e-7
            assert relaxed_lower_bound(problem) <= exact + 1e-12
        elapsed = time.monotonic() - started
        assert elapsed < 30.0, f"WMD oracle suite took {elapsed:.2f}s"


# --- criterion: CIDEr dense oracle ----------------------------------------------------

def dense_cider_oracle(candidate, references, reference_sets, max_n=4):
    num_items = len(reference_sets)
    totals = []
    for n in range(1, max_n + 1):
        def grams(tokens):
            return [tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1)]

        df = {}
        for captions in reference_sets:
            seen = set()
            for c in captions:
                seen.update(grams(c.tokens))
            for g in seen:
                df[g] = df.get(g, 0) + 1
        vocab = sorted(
            set(df) | set(grams(candidate.tokens)) | {g for r in references for g in grams(r.tokens)}
        )
        index = {g: k for k, g in enumerate(vocab)}

        def vector(tokens):
            v = np.zeros(len(vocab))
            gs = grams(tokens)
            if not gs:
                return v
            for g in gs:
                v[index[g]] += 1.0
            v /= len(gs)
            for g in set(gs):
                v[index[g]] *= math.log(num_items / max(df.get(g, 1), 1))
            return v

        cv = vector(candidate.tokens)
        sims = []
        for r in references:
            rv = vector(r.tokens)
            denom = np.linalg.norm(cv) * np.linalg.norm(rv)
            sims.append(float(cv @ rv) / denom if denom > 0 else 0.0)
        totals.append(sum(sims) / len(sims))
    return sum(totals) / len(totals)


def test_cider_dense_oracle_equivalence():
    with criterion("CIDEr sparse vs dense oracle (100 corpora)"):
        rng = random.Random(3003)
        vocab = [f"w{i}" for i in range(50)]
        for _ in range(100):
            sets = []
            for _ in range(rng.randint(2, 20)):
                sets.append(
                    [random_caption(rng, vocab, 1, 12) for _ in range(rng.randint(1, 3))]
                )
            candidate = random_caption(rng, vocab, 1, 12)
            references = sets[rng.randrange(len(sets))]
            got = cider(candidate, references, build_df(sets)).raw
            expected = dense_cider_oracle(candidate, references, sets)
            assert abs(got - expected) <= 1e-12


# --- criterion: Gibbs / entropy -------------------------------------------------------

def test_cross_entropy_gibbs_and_entropy():
    with criterion("cross-entropy Gibbs + one-hot identities (1000 pairs)"):
        rng = random.Random(4004)
        for _ in range(1000):
            support = rng.randint(1, 30)
            ids = rng.sample(range(100), support)

            def sample():
                raw = [rng.random() + 1e-6 for _ in ids]
                total = sum(raw)
                return TokenDistribution({i: x / total for i, x in zip(ids, raw)})

            p, q = sample(), sample()
            assert cross_entropy(p, q) >= cross_entropy(p, p) - 1e-9
        one_hot = TokenDistribution.one_hot(7)
        assert cross_entropy(one_hot, one_hot) == 0.0


# --- criterion: loss/cosine complement identity ----------------------------------------

def test_sentence_loss_cosine_identity():
    with criterion("loss + cosine == 1 exactly (1000 pairs, dims 2-384)"):
        rng = random.Random(5005)
        for _ in range(1000):
            dim = rng.randint(2, 384)
            t = np.array([rng.gauss(0, 1) for _ in range(dim)])
            u = np.array([rng.gauss(0, 1) for _ in range(dim)])
            if np.linalg.norm(t) == 0 or np.linalg.norm(u) == 0:
                continue
            assert sentence_loss(t, u) + cosine_similarity(t, u) == 1.0


# --- criterion: discriminability protocol ----------------------------------------------

class _ItemOracle:
    name = "oracle"
    orientation = "higher"
    symmetric = True

    def score_pair(self, x, y):
        return 1.0 if x.item_id == y.item_id else 0.0


def _six_item_corpus():
    def item(item_id, n_captions, tags):
        captions = tuple(cap(item_id, f"cap{k}", "sound") for k in range(n_captions))
        return CorpusItem(item_id=item_id, captions=captions, tags=frozenset(tags))

    return [
        item("A", 2, {"speech"}),
        item("B", 2, {"speech", "music"}),
        item("C", 1, {"dog"}),
        item("D", 3, set()),
        item("E", 1, {"dog", "street"}),
        item("F", 1, {"music"}),
    ]


def test_discriminability_bucket_membership():
    with criterion("six-item protocol: hand-counted buckets, oracle separation 1"):
        corpus = _six_item_corpus()
        matrix = pairwise_scores(corpus, _ItemOracle())
        assert len(matrix.scores) == 45  # C(10, 2)
        report = aggregate(matrix, corpus)
        # hand enumeration: similar C(2,2)+C(2,2)+C(3,2)=5; distinct 40;
        # tag-overlapping item pairs A-B (4 pairs), B-F (2), C-E (1) leave 33
        assert report.pair_counts == {"similar": 5, "distinct": 40, "different": 33}
        assert report.pair_counts["different"] <= report.pair_counts["distinct"]
        normalized = aggregate(normalize_scores(matrix, "higher"), corpus)
        assert normalized.avg_similar == 1.0
        assert normalized.avg_different == 0.0
        assert normalized.separation == 1.0


# --- criterion: directional separation ranking -----------------------------------------

SYNTHETIC_SENTENCE_CAPEMB = """CAPEMB 1 sentence 4 8
g0#0\t1 0 0 0
g0#1\t0.9 0.1 0 0
g1#0\t0 1 0 0
g1#1\t0 0.9 0.1 0
g2#0\t0 0 1 0
g2#1\t0 0 0.9 0.1
g3#0\t0 0 0 1
g3#1\t0.1 0 0 0.9
"""

SYNTHETIC_CORPUS = [
    ("g0", ["a woman speaks", "the lady talks"], {"t0"}),
    ("g1", ["a man shouts", "the guy yells"], {"t1"}),
    ("g2", ["a dog barks", "the puppy yaps"], {"t2"}),
    ("g3", ["rain falls down", "water drips below"], {"t3"}),
]


def _synthetic_items():
    items = []
    for item_id, captions, tags in SYNTHETIC_CORPUS:
        toks = tuple(cap(*c.split()) for c in captions)
        items.append(CorpusItem(item_id=item_id, captions=toks, tags=frozenset(tags)))
    return items


def test_directional_separation_ranking(tmp_path):
    with criterion("embedding cosine separates where BLEU-1/CIDEr do not"):
        emb_path = tmp_path / "sent.capemb"
        emb_path.write_text(SYNTHETIC_SENTENCE_CAPEMB, encoding="utf-8")
        store = load_embeddings(emb_path)
        corpus = _synthetic_items()

        def separation(handle):
            matrix = pairwise_scores(corpus, handle)
            return aggregate(normalize_scores(matrix, handle.orientation), corpus).separation

        sbert_sep = separation(SentenceCosinePair(store))
        bleu_sep = separation(BleuPair(order=1))
        cider_sep = separation(CiderPair(build_df(corpus)))
        assert sbert_sep > bleu_sep
        assert sbert_sep > cider_sep
        assert sbert_sep > 0.8  # within-item captions are embedding-close


# --- criterion: CLI determinism across thread counts ------------------------------------

DETERMINISM_WORD_CAPEMB_HEADER = "CAPEMB 1 word {dim} {count}\n"


def _write_determinism_fixtures(tmp_path):
    corpus_payload = [
        {"item_id": item_id, "captions": captions, "tags": sorted(tags)}
        for item_id, captions, tags in SYNTHETIC_CORPUS
    ]
    corpus_path = tmp_path / "corpus.json"
    corpus_path.write_text(json.dumps(corpus_payload), encoding="utf-8")

    sent_path = tmp_path / "sent.capemb"
    sent_path.write_text(SYNTHETIC_SENTENCE_CAPEMB, encoding="utf-8")

    vocab = sorted({t for _, caps, _ in SYNTHETIC_CORPUS for c in caps for t in c.split()})
    rng = random.Random(606)
    rows = [f"{tok}\t{rng.uniform(-1, 1):.6f} {rng.uniform(-1, 1):.6f} {rng.uniform(-1, 1):.6f}" for tok in vocab]
    word_path = tmp_path / "words.capemb"
    word_path.write_text(
        DETERMINISM_WORD_CAPEMB_HEADER.format(dim=3, count=len(rows)) + "\n".join(rows) + "\n",
        encoding="utf-8",
    )
    return corpus_path, word_path, sent_path


def test_evaluate_metrics_thread_determinism(tmp_path):
    with criterion("evaluate-metrics byte-identical for threads 1/4/8"):
        corpus_path, word_path, sent_path = _write_determinism_fixtures(tmp_path)
        outputs = []
        for threads in (1, 4, 8):
            out = tmp_path / f"report_t{threads}.json"
            code = cli_main(
                [
                    "evaluate-metrics",
                    "--corpus", str(corpus_path),
                    "--word-emb", str(word_path),
                    "--sent-emb", str(sent_path),
                    "--threads", str(threads),
                    "--out", str(out),
                ]
            )
            assert code == EXIT_OK
            outputs.append(out.read_bytes())
        assert outputs[0] == outputs[1] == outputs[2]
