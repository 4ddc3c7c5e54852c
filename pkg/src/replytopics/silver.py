"""Silver-standard topic annotation of email pairs.

Applies the trained pair-level (CA) and sentence-level (S) topic models to
a corpus, producing per-pair and per-sentence topic distributions that act
as labels for the predictors and as targets for evaluation.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .container import vocabulary_hash
from .corpus import EmailPair, Vocabulary, segment_sentences, tokenize
from .lda import TopicModel, dominant_topic, infer


class SilverError(ValueError):
    pass


@dataclass(frozen=True)
class SentenceAnnotation:
    j: int
    tau_s: np.ndarray
    dominant: int
    peaked: bool
    oov: bool  # no in-vocabulary tokens; tau_s is the normalized prior


@dataclass(frozen=True)
class SilverAnnotation:
    pair_id: str
    tau_ca_customer: np.ndarray
    tau_ca_agent: np.ndarray
    sentences: tuple[SentenceAnnotation, ...]


@dataclass(frozen=True)
class TransitionExample:
    """One supervised example for next-sentence topic prediction.

    ``cur_j`` is None for the first-sentence case (customer-only context);
    otherwise it is the index of the current sentence and the target is the
    dominant topic of sentence ``cur_j + 1``.
    """

    pair_id: str
    cur_j: int | None
    cur_dominant: int | None
    cur_tau: np.ndarray | None
    next_dominant: int
    next_tau: np.ndarray


def annotate(pairs: list[EmailPair], model_ca: TopicModel,
             model_s: TopicModel,
             vocab: Vocabulary | None = None) -> list[SilverAnnotation]:
    """Annotate each pair with CA distributions and per-sentence S records."""
    if vocabulary_hash(model_ca.vocabulary.tokens) != vocabulary_hash(
            model_s.vocabulary.tokens):
        raise SilverError("CA and S models use different vocabularies")
    if vocab is None:
        vocab = model_ca.vocabulary

    annotations = []
    for p in pairs:
        cust = tokenize(p.customer_text, vocab)
        agent = tokenize(p.agent_text, vocab)
        tau_c = infer(model_ca, cust)
        tau_a = infer(model_ca, agent)
        records = []
        for j, sent in enumerate(segment_sentences(p.agent_text)):
            toks = tokenize(sent, vocab)
            tau_s = infer(model_s, toks)
            dom, peaked = dominant_topic(tau_s)
            records.append(SentenceAnnotation(j=j, tau_s=tau_s, dominant=dom,
                                              peaked=peaked,
                                              oov=len(toks) == 0))
        annotations.append(SilverAnnotation(pair_id=p.id, tau_ca_customer=tau_c,
                                            tau_ca_agent=tau_a,
                                            sentences=tuple(records)))
    return annotations


def transition_pairs(annotations: list[SilverAnnotation]) -> list[TransitionExample]:
    """Expand annotations into next-sentence training examples.

    Yields one example per consecutive sentence pair plus one first-sentence
    example per annotated pair; pairs without sentences contribute nothing.
    """
    examples = []
    for ann in annotations:
        if not ann.sentences:
            continue
        first = ann.sentences[0]
        examples.append(TransitionExample(
            pair_id=ann.pair_id, cur_j=None, cur_dominant=None, cur_tau=None,
            next_dominant=first.dominant, next_tau=first.tau_s))
        for cur, nxt in zip(ann.sentences, ann.sentences[1:]):
            examples.append(TransitionExample(
                pair_id=ann.pair_id, cur_j=cur.j, cur_dominant=cur.dominant,
                cur_tau=cur.tau_s, next_dominant=nxt.dominant,
                next_tau=nxt.tau_s))
    return examples


def save_silver(annotations: list[SilverAnnotation], path) -> None:
    """Write annotations as JSONL, one record per pair."""
    with open(path, "w", encoding="utf-8") as fh:
        for ann in annotations:
            rec = {
                "id": ann.pair_id,
                "tau_ca_c": [float(x) for x in ann.tau_ca_customer],
                "tau_ca_a": [float(x) for x in ann.tau_ca_agent],
                "sentences": [
                    {"j": s.j, "tau_s": [float(x) for x in s.tau_s],
                     "dom": s.dominant, "peaked": s.peaked, "oov": s.oov}
                    for s in ann.sentences
                ],
            }
            fh.write(json.dumps(rec, sort_keys=True, separators=(",", ":")))
            fh.write("\n")


def load_silver(path) -> list[SilverAnnotation]:
    annotations = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            rec = json.loads(line)
            sentences = tuple(
                SentenceAnnotation(j=s["j"],
                                   tau_s=np.asarray(s["tau_s"], dtype=np.float64),
                                   dominant=s["dom"], peaked=s["peaked"],
                                   oov=s.get("oov", False))
                for s in rec["sentences"])
            annotations.append(SilverAnnotation(
                pair_id=rec["id"],
                tau_ca_customer=np.asarray(rec["tau_ca_c"], dtype=np.float64),
                tau_ca_agent=np.asarray(rec["tau_ca_a"], dtype=np.float64),
                sentences=sentences))
    return annotations
