"""Synthetic corpus generators with recorded generating parameters.

Three profiles, each targeting one mechanism the pipeline must recover:

* ``two_vocab`` -- two disjoint vocabularies, a sanity corpus for topic
  recovery.
* ``coupled`` -- customer emails drawn from one topic cluster, agent
  replies mixing that cluster with a fixed-permutation partner cluster;
  exercises whole-reply prediction and context-conditioned perplexity.
* ``chain`` -- agent sentences following a first-order topic Markov chain;
  exercises next-sentence prediction.

The generating parameters are returned as an oracle record (and written
beside the corpus), so tests can check recovered structure against the
truth that produced it.
"""

from __future__ import annotations

import json

import numpy as np

from .corpus import EmailPair


class SynthError(ValueError):
    pass


def _cluster_word(k: int, i: int) -> str:
    return f"t{k:02d}w{i:02d}"


def _sentence(words: list[str]) -> str:
    return (words[0].capitalize() + " " + " ".join(words[1:]) + ".") \
        if len(words) > 1 else words[0].capitalize() + "."


def _draw_words(rng, cluster_ids, words_per_topic: int) -> list[str]:
    return [_cluster_word(k, rng.integers(words_per_topic))
            for k in cluster_ids]


def generate_two_vocab(n_docs: int = 400, words_per_topic: int = 5,
                       customer_len: int = 15, agent_len: int = 25,
                       seed: int = 0) -> tuple[list[EmailPair], dict]:
    """Disjoint-vocabulary corpus: every document uses a single word set."""
    if n_docs < 2 or words_per_topic < 1:
        raise SynthError("invalid two_vocab parameters")
    rng = np.random.default_rng(seed)
    pairs = []
    doc_topics = []
    for i in range(n_docs):
        topic = i % 2
        doc_topics.append(topic)
        cust = _draw_words(rng, [topic] * customer_len, words_per_topic)
        agent = _draw_words(rng, [topic] * agent_len, words_per_topic)
        pairs.append(EmailPair(f"tv{i:05d}", _sentence(cust), _sentence(agent)))
    oracle = {
        "profile": "two_vocab",
        "seed": seed,
        "topic_words": {str(t): [_cluster_word(t, i)
                                 for i in range(words_per_topic)]
                        for t in (0, 1)},
        "doc_topics": doc_topics,
    }
    return pairs, oracle


def generate_coupled(n_pairs: int = 5000, M: int = 20,
                     words_per_topic: int = 15, permutation_shift: int = 7,
                     shared_weight: float = 0.85, noise: float = 0.05,
                     customer_len: tuple[int, int] = (50, 70),
                     agent_len: tuple[int, int] = (5, 8),
                     seed: int = 0) -> tuple[list[EmailPair], dict]:
    """Permutation-coupled corpus.

    Each pair draws a cluster t; customer tokens come from t (with uniform
    cluster noise), agent tokens from t with probability ``shared_weight``
    and from the permuted partner pi(t) = t + shift mod M otherwise.  The
    shared component keeps the customer query genuinely informative about
    the agent's word distribution; the permuted component is the part a
    predictor must learn beyond copying the customer's topics.  Agent
    replies are deliberately short so their topic mixture is uncertain
    without the customer context.
    """
    if M < 2 or not 0 <= shared_weight <= 1 or not 0 <= noise < 1:
        raise SynthError("invalid coupled parameters")
    if permutation_shift % M == 0:
        raise SynthError("permutation must have no fixed points")
    rng = np.random.default_rng(seed)
    permutation = [(t + permutation_shift) % M for t in range(M)]
    pairs = []
    pair_topics = []
    for i in range(n_pairs):
        t = int(rng.integers(M))
        pair_topics.append(t)
        n_c = int(rng.integers(customer_len[0], customer_len[1] + 1))
        n_a = int(rng.integers(agent_len[0], agent_len[1] + 1))
        cust_clusters = np.where(rng.random(n_c) < noise,
                                 rng.integers(M, size=n_c), t)
        r = rng.random(n_a)
        agent_clusters = np.where(
            r < noise, rng.integers(M, size=n_a),
            np.where(r < noise + (1 - noise) * shared_weight,
                     t, permutation[t]))
        cust = _draw_words(rng, cust_clusters, words_per_topic)
        agent = _draw_words(rng, agent_clusters, words_per_topic)
        pairs.append(EmailPair(f"cp{i:05d}", _sentence(cust), _sentence(agent)))
    oracle = {
        "profile": "coupled",
        "seed": seed,
        "M": M,
        "permutation": permutation,
        "shared_weight": shared_weight,
        "noise": noise,
        "pair_topics": pair_topics,
    }
    return pairs, oracle


def chain_transition_matrix(M: int, concentration: float) -> np.ndarray:
    """Row-stochastic next-topic matrix concentrated on k -> k+1.

    The off-chain remainder is split between two fixed relative offsets
    (+2 and +5) rather than spread uniformly, so that top-K prediction has
    genuine secondary continuations to pick up.
    """
    T = np.zeros((M, M))
    rest = 1.0 - concentration
    for k in range(M):
        T[k, (k + 1) % M] = concentration
        T[k, (k + 2) % M] = rest * 0.6
        T[k, (k + 5) % M] = rest * 0.4
    return T


def generate_chain(n_emails: int = 3000, M: int = 20, sentences: int = 6,
                   concentration: float = 0.9, words_per_topic: int = 15,
                   words_per_sentence: tuple[int, int] = (10, 14),
                   customer_len: tuple[int, int] = (25, 35),
                   first_topic_boost: tuple[int, float] = (7, 0.10),
                   noise: float = 0.02,
                   seed: int = 0) -> tuple[list[EmailPair], dict]:
    """Markov-chain corpus: agent sentence topics follow a first-order chain.

    The first sentence's topic equals the customer's topic, drawn from a
    mildly skewed distribution (one boosted topic) so the topic marginal is
    not exactly flat; subsequent topics follow the transition matrix.
    """
    if not 0 < concentration <= 1 or sentences < 1:
        raise SynthError("invalid chain parameters")
    rng = np.random.default_rng(seed)
    T = chain_transition_matrix(M, concentration)
    boost_topic, boost_mass = first_topic_boost
    first_dist = np.full(M, (1.0 - boost_mass) / (M - 1))
    first_dist[boost_topic] = boost_mass
    pairs = []
    email_topics = []
    for i in range(n_emails):
        topics = [int(rng.choice(M, p=first_dist))]
        for _ in range(sentences - 1):
            topics.append(int(rng.choice(M, p=T[topics[-1]])))
        email_topics.append(topics)
        n_c = int(rng.integers(customer_len[0], customer_len[1] + 1))
        cust_clusters = np.where(rng.random(n_c) < noise,
                                 rng.integers(M, size=n_c), topics[0])
        cust = _sentence(_draw_words(rng, cust_clusters, words_per_topic))
        sents = []
        for t in topics:
            n_s = int(rng.integers(words_per_sentence[0],
                                   words_per_sentence[1] + 1))
            clusters = np.where(rng.random(n_s) < noise,
                                rng.integers(M, size=n_s), t)
            sents.append(_sentence(_draw_words(rng, clusters, words_per_topic)))
        pairs.append(EmailPair(f"ch{i:05d}", cust, " ".join(sents)))
    oracle = {
        "profile": "chain",
        "seed": seed,
        "M": M,
        "concentration": concentration,
        "transition_matrix": T.tolist(),
        "first_dist": first_dist.tolist(),
        "email_topics": email_topics,
    }
    return pairs, oracle


PROFILES = {
    "two_vocab": generate_two_vocab,
    "coupled": generate_coupled,
    "chain": generate_chain,
}


def generate(profile: str, seed: int = 0, **params) -> tuple[list[EmailPair], dict]:
    if profile not in PROFILES:
        raise SynthError(f"unknown synthetic profile {profile!r}")
    return PROFILES[profile](seed=seed, **params)


def write_corpus(pairs: list[EmailPair], oracle: dict, path) -> None:
    """Write the corpus as JSONL plus the oracle record beside it."""
    with open(path, "w", encoding="utf-8") as fh:
        for p in pairs:
            fh.write(json.dumps({"id": p.id, "customer": p.customer_text,
                                 "agent": p.agent_text},
                                sort_keys=True, separators=(",", ":")))
            fh.write("\n")
    with open(f"{path}.oracle.json", "w", encoding="utf-8") as fh:
        json.dump(oracle, fh, sort_keys=True, separators=(",", ":"))
        fh.write("\n")
