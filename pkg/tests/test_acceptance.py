"""Acceptance criteria for the full pipeline, one test per criterion.

Each test prints a single PASS/FAIL line (visible with ``pytest -s`` or in
failure output) and asserts the criterion at its stated tolerance.  The
synthetic corpora play the role of the full-scale dataset: margins are
analogs of the reference results, not their exact values.
"""

import json
import time
from dataclasses import replace

import numpy as np
import pytest

from replytopics import lda, silver
from replytopics.container import load_model, save_model
from replytopics.corpus import Vocabulary, tokenize
from replytopics.evaluation import (bhattacharyya, dominant_topic_accuracy,
                                    text_ranking_recall1)
from replytopics.pipeline import Pipeline, PipelineConfig
from replytopics.regressor import loss_and_grad
from replytopics.synth import generate, write_corpus


def report(criterion: str, passed: bool, detail: str) -> None:
    print(f"{criterion}: {'PASS' if passed else 'FAIL'} — {detail}")
    assert passed, f"{criterion} failed: {detail}"


# ---------------------------------------------------------------------------
# Shared pipeline runs.


@pytest.fixture(scope="session")
def coupled_run(tmp_path_factory):
    """Full pipeline on the permutation-coupled corpus (P5, P6, P9)."""
    root = tmp_path_factory.mktemp("coupled")
    pairs, oracle = generate("coupled", seed=7)
    corpus_path = root / "corpus.jsonl"
    write_corpus(pairs, oracle, corpus_path)
    config = PipelineConfig(
        corpus=str(corpus_path), out_dir=str(root / "out"),
        m_grid=(10, 20, 50), seed=3, sweeps=200,
        min_agent=5,  # coupled agent replies are deliberately short
        t2_subsets="full")
    start = time.time()
    Pipeline(config).run_all()
    elapsed = time.time() - start
    out = root / "out"
    return {
        "t1": json.loads((out / "eval/t1_report.json").read_text()),
        "perplexity": json.loads((out / "eval/perplexity.json").read_text()),
        "elapsed": elapsed,
    }


@pytest.fixture(scope="session")
def chain_run(tmp_path_factory):
    """Full pipeline on the topic-Markov-chain corpus (P7, P8, P10)."""
    root = tmp_path_factory.mktemp("chain")
    pairs, oracle = generate("chain", seed=11)
    corpus_path = root / "corpus.jsonl"
    write_corpus(pairs, oracle, corpus_path)
    config = PipelineConfig(
        corpus=str(corpus_path), out_dir=str(root / "out"),
        m_grid=(20,), seed=3, sweeps=200, t2_subsets="full")
    pipeline = Pipeline(config)
    pipeline.ingest()
    pipeline.train_lda()
    pipeline.annotate()
    pipeline.train_predictors()
    pipeline.evaluate()
    out = root / "out"
    return {
        "t2": json.loads((out / "eval/t2_report.json").read_text()),
        "silver_train": str(out / "silver/m20_train.jsonl"),
        "M": 20,
    }


def t1_row(run, system, M):
    for row in run["t1"]["rows"]:
        if row["system"] == system and row["features"] == f"M={M}":
            return row
    raise KeyError((system, M))


def t2_row(run, system):
    for row in run["t2"]["rows"]:
        if row["system"] == system:
            return row
    raise KeyError(system)


# ---------------------------------------------------------------------------
# Criteria.


class TestP1TopicRecovery:
    def test_p1(self):
        start = time.time()
        pairs, oracle = generate("two_vocab", seed=1)  # 400 docs, V=10
        docs = [tokenize(p.customer_text) + tokenize(p.agent_text)
                for p in pairs]
        vocab = Vocabulary.build(docs, min_doc_freq=2)
        model = lda.train([vocab.encode(d) for d in docs], 2, vocab,
                          sweeps=200, seed=0)
        phi = model.phi()
        learned = {frozenset(vocab.tokens[w] for w in np.argsort(-phi[k])[:5])
                   for k in range(2)}
        truth = {frozenset(ws) for ws in oracle["topic_words"].values()}
        elapsed = time.time() - start
        report("P1", learned == truth and elapsed < 10.0,
               f"top-5 word sets {'match' if learned == truth else 'differ'}"
               f", runtime {elapsed:.1f}s")


class TestP2CountIntegrity:
    def test_p2(self):
        pairs, _ = generate("two_vocab", seed=2, n_docs=150)
        docs = [tokenize(p.customer_text) + tokenize(p.agent_text)
                for p in pairs]
        vocab = Vocabulary.build(docs, min_doc_freq=2)
        model = lda.train([vocab.encode(d) for d in docs], 4, vocab,
                          sweeps=80, seed=5)
        totals_ok = np.array_equal(
            model.topic_word_counts.sum(axis=1, dtype=np.int64),
            model.topic_totals)
        rng = np.random.default_rng(0)
        worst = 0.0
        for _ in range(1000):
            tokens = rng.integers(len(vocab), size=int(rng.integers(1, 40)))
            theta = lda.infer(model, tokens, burnin=2, samples=2)
            worst = max(worst, abs(float(theta.sum()) - 1.0))
            if theta.min() < 0:
                worst = 1.0
        report("P2", totals_ok and worst < 1e-9,
               f"totals consistent={totals_ok}, "
               f"worst |sum-1|={worst:.2e} over 1000 docs")


class TestP3GradientCorrectness:
    def test_p3(self):
        from replytopics.features import FeatureVector
        rng = np.random.default_rng(17)
        eps = 1e-6
        worst = 0.0
        for _ in range(20):
            nnz = int(rng.integers(1, 6))
            idx = np.sort(rng.choice(5, size=nnz, replace=False))
            x = FeatureVector(indices=idx.astype(np.int64),
                              values=rng.normal(size=nnz))
            y = rng.dirichlet(np.ones(3))[None, :]
            W = rng.normal(scale=0.5, size=(5, 3))
            _, grad = loss_and_grad(W, [x], y, l2=1e-3)
            numeric = np.zeros_like(W)
            for i in range(5):
                for j in range(3):
                    Wp, Wm = W.copy(), W.copy()
                    Wp[i, j] += eps
                    Wm[i, j] -= eps
                    numeric[i, j] = (loss_and_grad(Wp, [x], y, 1e-3)[0]
                                     - loss_and_grad(Wm, [x], y, 1e-3)[0]
                                     ) / (2 * eps)
            rel = np.abs(grad - numeric).max() / max(np.abs(numeric).max(),
                                                     1.0)
            worst = max(worst, rel)
        report("P3", worst < 1e-4,
               f"worst relative gradient error {worst:.2e} (< 1e-4)")


class TestP4MetricAnalytics:
    def test_p4(self):
        rng = np.random.default_rng(4)
        ok_identity = all(
            abs(bhattacharyya(p, p) - 1.0) <= 1e-12
            for p in (rng.dirichlet(np.ones(8)) for _ in range(50)))
        ok_delta = all(
            abs(bhattacharyya(np.full(M, 1 / M), np.eye(M)[0])
                - np.sqrt(1 / M)) <= 1e-12
            for M in (2, 10, 50))
        preds = [rng.dirichlet(np.ones(10)) for _ in range(200)]
        doms = list(rng.integers(10, size=200))
        accs = [dominant_topic_accuracy(preds, doms, K)
                for K in range(1, 11)]
        ok_monotone = all(a <= b for a, b in zip(accs, accs[1:]))
        n = 2000
        targets = [rng.dirichlet(np.ones(10)) for _ in range(n)]
        random_preds = [rng.dirichlet(np.ones(10)) for _ in range(n)]
        pool = [rng.dirichlet(np.ones(10)) for _ in range(500)]
        recall = text_ranking_recall1(random_preds, targets, pool, k=5,
                                      seed=0)
        ok_recall = abs(recall - 0.20) <= 0.03
        report("P4", ok_identity and ok_delta and ok_monotone and ok_recall,
               f"BC identity={ok_identity}, BC delta={ok_delta}, "
               f"DTA monotone={ok_monotone}, "
               f"random Recall@1={recall:.3f} (0.20±0.03)")


class TestP5WholeReplyBeatsCopy:
    def test_p5(self, coupled_run):
        predicted = t1_row(coupled_run, "predicted", 20)["mean_bc"]
        copy = t1_row(coupled_run, "copy_customer", 20)["mean_bc"]
        gap = predicted - copy
        elapsed = coupled_run["elapsed"]
        report("P5", gap >= 0.10 and elapsed < 300.0,
               f"mean BC predicted={predicted:.3f} vs copy={copy:.3f} "
               f"(gap {gap:.3f} >= 0.10), pipeline {elapsed:.0f}s < 300s")


class TestP6WholeReplyRanking:
    def test_p6(self, coupled_run):
        recall = t1_row(coupled_run, "predicted", 20)["recall1"]["5"]
        report("P6", recall >= 0.50,
               f"Recall@1 at k=5 is {recall:.3f} (>= 0.50)")


class TestP7NextSentenceOrdering:
    def test_p7(self, chain_run):
        M = chain_run["M"]
        proposed = t2_row(chain_run, "proposed")["dta"]["1"]
        average = t2_row(chain_run, "average")["dta"]["1"]
        uniform = t2_row(chain_run, "uniform")["dta"]["1"]
        ordering = proposed > average > uniform
        uniform_ok = abs(uniform - 1 / M) <= 0.01
        report("P7",
               proposed >= 0.75 and ordering and uniform_ok,
               f"DTA@1 proposed={proposed:.3f} (>=0.75) > "
               f"average={average:.3f} > uniform={uniform:.3f} "
               f"(within 1/{M}±0.01)")


class TestP8TopKGrowth:
    def test_p8(self, chain_run):
        dta = t2_row(chain_run, "proposed")["dta"]
        growth = dta["5"] - dta["1"]
        at_half_m = dta["10"]  # K = M/2 for M=20
        report("P8", growth >= 0.1 and at_half_m >= 0.95,
               f"DTA@5-DTA@1={growth:.3f} (>=0.1), "
               f"DTA@10={at_half_m:.3f} (>=0.95)")


class TestP9PerplexityOrdering:
    def test_p9(self, coupled_run):
        rows = {r["M"]: r for r in coupled_run["perplexity"]}
        ok = all(rows[M]["pp_conditional"] < rows[M]["pp_unconditional"]
                 for M in (10, 20, 50))
        detail = ", ".join(
            f"M={M}: {rows[M]['pp_conditional']:.1f} < "
            f"{rows[M]['pp_unconditional']:.1f}" for M in (10, 20, 50))
        report("P9", ok, f"conditional < unconditional at {detail}")


class TestP10Peakedness:
    def test_p10(self, chain_run):
        annotations = silver.load_silver(chain_run["silver_train"])
        rate = lda.peakedness_rate(
            [s.tau_s for a in annotations for s in a.sentences])
        report("P10", rate >= 0.9,
               f"sentence peakedness rate {rate:.3f} (>= 0.9)")


class TestP11Determinism:
    def test_p11(self, tmp_path_factory):
        root = tmp_path_factory.mktemp("determinism")
        pairs, oracle = generate("chain", seed=5, n_emails=150)
        corpus_path = root / "corpus.jsonl"
        write_corpus(pairs, oracle, corpus_path)
        base = PipelineConfig(corpus=str(corpus_path), out_dir="",
                              m_grid=(4,), seed=2, sweeps=50,
                              vocab_min_df=2, t2_subsets="full")
        outs = []
        for name in ("run_a", "run_b"):
            config = replace(base, out_dir=str(root / name))
            Pipeline(config).run_all()
            outs.append(root / name)
        a, b = outs
        models_identical = all(
            (a / rel).read_bytes() == (b / rel).read_bytes()
            for rel in [f"models/m4_{v}.tpam" for v in ("A", "CA", "S")])
        evals_identical = all(
            (a / "eval" / n).read_text() == (b / "eval" / n).read_text()
            for n in ("t1_report.json", "t2_report.json", "perplexity.json"))
        model = load_model(a / "models/m4_S.tpam")
        resaved = root / "resaved.tpam"
        save_model(model, resaved)
        round_trip = resaved.read_bytes() == \
            (a / "models/m4_S.tpam").read_bytes()
        report("P11",
               models_identical and evals_identical and round_trip,
               f"containers identical={models_identical}, "
               f"eval JSON identical={evals_identical}, "
               f"save/load round-trip bit-exact={round_trip}")
