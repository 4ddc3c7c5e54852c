"""LDA topic views trained by collapsed Gibbs sampling.

Four views of the corpus are supported: customer emails (C), agent emails
(A), concatenated pairs (CA) and individual agent sentences (S).  Training
and fold-in inference run through seeded numba kernels, so results are
deterministic for a fixed seed.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .corpus import EmailPair, Vocabulary, segment_sentences, tokenize

VIEWS = ("C", "A", "CA", "S")

# Mirrors the common "default setting" of off-the-shelf LDA trainers.
DEFAULT_ALPHA_TOTAL = 5.0
DEFAULT_BETA = 0.01
DEFAULT_SWEEPS = 1000

# Fold-in schedule for offline annotation.
FOLDIN_BURNIN = 20
FOLDIN_SAMPLES = 10


class TopicModelError(ValueError):
    pass


@dataclass
class TopicModel:
    """A trained LDA view: counts, priors and the vocabulary they index."""

    view: str
    M: int
    alpha: np.ndarray          # per-topic prior, length M
    beta: float                # symmetric word prior
    topic_word_counts: np.ndarray  # (M, V) uint32
    topic_totals: np.ndarray       # length M int64
    vocabulary: Vocabulary
    seed: int
    sweeps: int

    @property
    def V(self) -> int:
        return self.topic_word_counts.shape[1]

    def phi(self) -> np.ndarray:
        """Smoothed word distributions P(w|k), rows summing to 1."""
        counts = self.topic_word_counts.astype(np.float64)
        return (counts + self.beta) / (
            self.topic_totals[:, None].astype(np.float64) + self.V * self.beta)

    def check_counts(self) -> None:
        row_sums = self.topic_word_counts.sum(axis=1, dtype=np.int64)
        if not np.array_equal(row_sums, self.topic_totals):
            raise TopicModelError("topic_totals inconsistent with count matrix")


@dataclass(frozen=True)
class TopicDescriptor:
    topic: int
    top_words: tuple[str, ...]
    top_phrases: tuple[str, ...]


def build_documents(pairs: list[EmailPair], view: str,
                    vocab: Vocabulary) -> list[list[int]]:
    """Assemble the token documents for one model view.

    C: one doc per customer email; A: per agent email; CA: concatenation of
    both per pair; S: one doc per agent sentence.
    """
    if view not in VIEWS:
        raise TopicModelError(f"unknown model view {view!r}")
    docs: list[list[int]] = []
    for p in pairs:
        if view == "C":
            docs.append(tokenize(p.customer_text, vocab))
        elif view == "A":
            docs.append(tokenize(p.agent_text, vocab))
        elif view == "CA":
            docs.append(tokenize(p.customer_text, vocab)
                        + tokenize(p.agent_text, vocab))
        else:
            for sent in segment_sentences(p.agent_text):
                docs.append(tokenize(sent, vocab))
    return docs


@njit(cache=True)
def _gibbs_train(doc_ids, tokens, M, V, alpha, beta, sweeps, seed):
    np.random.seed(seed)
    n = tokens.shape[0]
    D = 0
    for i in range(n):
        if doc_ids[i] + 1 > D:
            D = doc_ids[i] + 1
    z = np.empty(n, np.int32)
    doc_topic = np.zeros((D, M), np.int32)
    topic_word = np.zeros((M, V), np.int64)
    topic_totals = np.zeros(M, np.int64)
    for i in range(n):
        k = np.random.randint(0, M)
        z[i] = k
        doc_topic[doc_ids[i], k] += 1
        topic_word[k, tokens[i]] += 1
        topic_totals[k] += 1
    dist = np.empty(M, np.float64)
    vbeta = V * beta
    for _ in range(sweeps):
        for i in range(n):
            d = doc_ids[i]
            w = tokens[i]
            k = z[i]
            doc_topic[d, k] -= 1
            topic_word[k, w] -= 1
            topic_totals[k] -= 1
            total = 0.0
            for kk in range(M):
                p = ((doc_topic[d, kk] + alpha[kk])
                     * (topic_word[kk, w] + beta)
                     / (topic_totals[kk] + vbeta))
                dist[kk] = p
                total += p
            r = np.random.random() * total
            acc = 0.0
            knew = M - 1
            for kk in range(M):
                acc += dist[kk]
                if r < acc:
                    knew = kk
                    break
            z[i] = knew
            doc_topic[d, knew] += 1
            topic_word[knew, w] += 1
            topic_totals[knew] += 1
    return z, doc_topic, topic_word, topic_totals


@njit(cache=True)
def _gibbs_foldin(tokens, topic_word, topic_totals, alpha, beta,
                  burnin, samples, seed):
    np.random.seed(seed)
    M = alpha.shape[0]
    V = topic_word.shape[1]
    n = tokens.shape[0]
    alpha_sum = alpha.sum()
    theta = np.zeros(M, np.float64)
    nd = np.zeros(M, np.int64)
    z = np.empty(n, np.int32)
    for i in range(n):
        k = np.random.randint(0, M)
        z[i] = k
        nd[k] += 1
    dist = np.empty(M, np.float64)
    vbeta = V * beta
    for s in range(burnin + samples):
        for i in range(n):
            w = tokens[i]
            k = z[i]
            nd[k] -= 1
            total = 0.0
            for kk in range(M):
                p = ((nd[kk] + alpha[kk])
                     * (topic_word[kk, w] + beta)
                     / (topic_totals[kk] + vbeta))
                dist[kk] = p
                total += p
            r = np.random.random() * total
            knew = M - 1
            acc = 0.0
            for kk in range(M):
                acc += dist[kk]
                if r < acc:
                    knew = kk
                    break
            z[i] = knew
            nd[knew] += 1
        if s >= burnin:
            for kk in range(M):
                theta[kk] += (nd[kk] + alpha[kk]) / (n + alpha_sum)
    return theta / samples


def train(documents: list[list[int]], M: int, vocabulary: Vocabulary,
          alpha: np.ndarray | float | None = None, beta: float = DEFAULT_BETA,
          sweeps: int = DEFAULT_SWEEPS, seed: int = 0,
          view: str = "CA") -> TopicModel:
    """Train an LDA view by collapsed Gibbs sampling.

    ``alpha`` may be a per-topic vector, a scalar concentration total
    (spread symmetrically), or None for the default total.  After sampling,
    alpha is moment-matched once to the mean training document-topic
    proportions, rescaled to the original concentration, so that the prior
    reflects the empirical topic marginal.
    """
    if view not in VIEWS:
        raise TopicModelError(f"unknown model view {view!r}")
    if M < 2:
        raise TopicModelError("need at least 2 topics")
    if sweeps < 1:
        raise TopicModelError("need at least 1 sweep")
    if not documents or all(len(d) == 0 for d in documents):
        raise TopicModelError("cannot train on empty documents")

    if alpha is None:
        alpha = DEFAULT_ALPHA_TOTAL
    alpha_vec = (np.full(M, float(alpha) / M) if np.isscalar(alpha)
                 else np.asarray(alpha, dtype=np.float64).copy())
    if alpha_vec.shape != (M,) or np.any(alpha_vec <= 0) or beta <= 0:
        raise TopicModelError("invalid hyperparameters")

    doc_ids = np.concatenate([np.full(len(d), i, dtype=np.int32)
                              for i, d in enumerate(documents)])
    tokens = np.concatenate([np.asarray(d, dtype=np.int32)
                             for d in documents])
    V = len(vocabulary)
    if tokens.size and int(tokens.max()) >= V:
        raise TopicModelError("token id outside vocabulary")

    _, doc_topic, topic_word, topic_totals = _gibbs_train(
        doc_ids, tokens, M, V, alpha_vec, float(beta), int(sweeps),
        np.uint32(seed & 0xFFFFFFFF))

    # Moment-match alpha: normalized mean document-topic proportions,
    # rescaled to the original concentration.
    doc_lens = doc_topic.sum(axis=1, dtype=np.float64)
    nonempty = doc_lens > 0
    theta = ((doc_topic[nonempty] + alpha_vec)
             / (doc_lens[nonempty, None] + alpha_vec.sum()))
    mean_theta = theta.mean(axis=0)
    alpha_fit = mean_theta / mean_theta.sum() * alpha_vec.sum()

    return TopicModel(view=view, M=M, alpha=alpha_fit, beta=float(beta),
                      topic_word_counts=topic_word.astype(np.uint32),
                      topic_totals=topic_totals.astype(np.int64),
                      vocabulary=vocabulary, seed=int(seed), sweeps=int(sweeps))


def _doc_seed(model_seed: int, tokens) -> int:
    data = np.asarray(tokens, dtype=np.int32).tobytes()
    return (zlib.crc32(data) ^ (model_seed * 0x9E3779B9)) & 0xFFFFFFFF


def infer(model: TopicModel, tokens, burnin: int = FOLDIN_BURNIN,
          samples: int = FOLDIN_SAMPLES, seed: int | None = None) -> np.ndarray:
    """Fold-in inference of a document's topic distribution.

    Topic-word counts stay frozen; after ``burnin`` sweeps the document-topic
    proportions are averaged over ``samples`` sweeps.  An empty token list
    yields the normalized prior.  The per-document seed is derived from the
    model seed and the tokens, so inference is order-independent across
    documents and reproducible.
    """
    tokens = np.asarray(tokens, dtype=np.int32)
    if tokens.size == 0:
        return model.alpha / model.alpha.sum()
    if seed is None:
        seed = _doc_seed(model.seed, tokens)
    theta = _gibbs_foldin(tokens, model.topic_word_counts.astype(np.int64),
                          model.topic_totals, model.alpha, model.beta,
                          int(burnin), int(samples), np.uint32(seed))
    return theta / theta.sum()


def dominant_topic(dist: np.ndarray) -> tuple[int, bool]:
    """Argmax topic (ties to the lowest index) and the peakedness flag.

    Peaked iff the top probability exceeds 0.5 and is at least twice the
    runner-up.
    """
    dist = np.asarray(dist, dtype=np.float64)
    top = int(np.argmax(dist))
    if dist.shape[0] < 2:
        return top, dist[top] > 0.5
    second = float(np.partition(dist, -2)[-2])
    peaked = dist[top] > 0.5 and dist[top] >= 2.0 * second
    return top, bool(peaked)


def peakedness_rate(dists) -> float:
    """Fraction of distributions classified as peaked."""
    dists = list(dists)
    if not dists:
        raise TopicModelError("peakedness_rate needs a non-empty input")
    return sum(dominant_topic(d)[1] for d in dists) / len(dists)


def describe_topics(model: TopicModel, top_n_words: int = 10,
                    top_n_phrases: int = 5,
                    documents: list[list[int]] | None = None,
                    min_phrase_count: int = 5) -> list[TopicDescriptor]:
    """Rank representative words and corpus phrases per topic.

    Words are ranked by P(w|k).  Phrases are corpus bigrams/trigrams with at
    least ``min_phrase_count`` occurrences, scored by the product of their
    member-word probabilities under the topic.
    """
    phi = model.phi()
    vocab = model.vocabulary

    phrase_counts: dict[tuple[int, ...], int] = {}
    if documents and top_n_phrases > 0:
        for doc in documents:
            for size in (2, 3):
                for i in range(len(doc) - size + 1):
                    gram = tuple(doc[i:i + size])
                    phrase_counts[gram] = phrase_counts.get(gram, 0) + 1
    grams = [g for g, c in phrase_counts.items() if c >= min_phrase_count]

    descriptors = []
    for k in range(model.M):
        order = np.argsort(-phi[k], kind="stable")[:top_n_words]
        words = tuple(vocab.tokens[w] for w in order)
        scored = sorted(
            ((float(np.prod(phi[k][list(g)])), g) for g in grams),
            key=lambda sg: (-sg[0], sg[1]))
        phrases = tuple(" ".join(vocab.tokens[w] for w in g)
                        for _, g in scored[:top_n_phrases])
        descriptors.append(TopicDescriptor(topic=k, top_words=words,
                                           top_phrases=phrases))
    return descriptors
