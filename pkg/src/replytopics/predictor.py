"""Whole-reply and next-sentence topic predictors, plus baselines.

The whole-reply model regresses the reply's topic distribution from the
customer query (soft labels, KL loss).  The next-sentence model is a family
of multiclass regressors, one per current dominant topic, with a pooled
fallback for rare topics and a customer-only model for the first sentence.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field

import numpy as np

from .corpus import EmailPair, Vocabulary, segment_sentences, tokenize
from .features import (FeatureLayout, FeatureVector, context_features,
                       transition_features)
from .regressor import SGDConfig, fit, predict
from .silver import SilverAnnotation, TransitionExample

FAMILY_MIN_EXAMPLES = 50


class PredictorError(ValueError):
    pass


@dataclass(frozen=True)
class PairContext:
    """Tokenized inputs of one pair, as the predictors consume them."""

    customer_ids: tuple[int, ...]
    tau_customer: np.ndarray
    sentence_ids: tuple[tuple[int, ...], ...]


def build_contexts(pairs: list[EmailPair],
                   annotations: list[SilverAnnotation],
                   vocab: Vocabulary) -> dict[str, PairContext]:
    by_id = {a.pair_id: a for a in annotations}
    contexts = {}
    for p in pairs:
        ann = by_id.get(p.id)
        if ann is None:
            continue
        contexts[p.id] = PairContext(
            customer_ids=tuple(tokenize(p.customer_text, vocab)),
            tau_customer=ann.tau_ca_customer,
            sentence_ids=tuple(tuple(tokenize(s, vocab))
                               for s in segment_sentences(p.agent_text)))
    return contexts


@dataclass
class PredictorSuite:
    M: int
    V: int
    t1_weights: np.ndarray
    t1_layout: FeatureLayout
    first_weights: np.ndarray
    first_layout: FeatureLayout
    fallback_weights: np.ndarray
    t2_layout: FeatureLayout
    family: dict[int, np.ndarray] = field(default_factory=dict)
    sgd: SGDConfig = SGDConfig()
    family_min_examples: int = FAMILY_MIN_EXAMPLES

    def __post_init__(self):
        if any(not 0 <= k < self.M for k in self.family):
            raise PredictorError("family keys must be topic ids in [0, M)")


def train_t1(annotations: list[SilverAnnotation],
             contexts: dict[str, PairContext], layout: FeatureLayout,
             sgd: SGDConfig = SGDConfig()) -> np.ndarray:
    """Fit the whole-reply regressor on silver soft labels."""
    examples, targets = [], []
    for ann in annotations:
        ctx = contexts.get(ann.pair_id)
        if ctx is None:
            continue
        examples.append(context_features(layout, ctx.customer_ids,
                                         ctx.tau_customer))
        targets.append(ann.tau_ca_agent)
    if not examples:
        raise PredictorError("no whole-reply training examples")
    return fit(examples, np.asarray(targets), layout.dim, sgd)


def predict_t1(weights: np.ndarray, layout: FeatureLayout, customer_ids,
               tau_customer) -> np.ndarray:
    return predict(weights, context_features(layout, customer_ids, tau_customer))


def _one_hot(k: int, M: int) -> np.ndarray:
    y = np.zeros(M)
    y[k] = 1.0
    return y


def _transition_feature(layout: FeatureLayout, ctx: PairContext,
                        ex: TransitionExample) -> FeatureVector:
    sent_ids = (ctx.sentence_ids[ex.cur_j]
                if ex.cur_j < len(ctx.sentence_ids) else ())
    return transition_features(layout, ctx.customer_ids, ctx.tau_customer,
                               sent_ids, ex.cur_tau, ex.cur_dominant, ex.cur_j)


def train_t2(transitions: list[TransitionExample],
             contexts: dict[str, PairContext], M: int,
             t2_layout: FeatureLayout, first_layout: FeatureLayout,
             sgd: SGDConfig = SGDConfig(),
             family_min_examples: int = FAMILY_MIN_EXAMPLES,
             ) -> tuple[dict[int, np.ndarray], np.ndarray, np.ndarray]:
    """Fit the per-topic family, the first-sentence model and the fallback.

    Transitions are partitioned by the current dominant topic; partitions
    with at least ``family_min_examples`` examples get their own regressor.
    The fallback is trained on the pooled transition set (the current
    dominant topic is visible to it as a one-hot feature), so it also covers
    topics whose partitions were too small.
    """
    usable = [ex for ex in transitions if ex.pair_id in contexts]
    first_examples = [ex for ex in usable if ex.cur_j is None]
    next_examples = [ex for ex in usable if ex.cur_j is not None]
    if not next_examples and not first_examples:
        raise PredictorError("no next-sentence training examples")

    if first_examples:
        xs = [context_features(first_layout, contexts[ex.pair_id].customer_ids,
                               contexts[ex.pair_id].tau_customer)
              for ex in first_examples]
        ys = np.asarray([_one_hot(ex.next_dominant, M) for ex in first_examples])
        first_weights = fit(xs, ys, first_layout.dim, sgd)
    else:
        first_weights = np.zeros((first_layout.dim, M))

    partitions: dict[int, list[TransitionExample]] = {}
    for ex in next_examples:
        partitions.setdefault(ex.cur_dominant, []).append(ex)

    family = {}
    for k, part in sorted(partitions.items()):
        if len(part) < family_min_examples:
            continue
        xs = [_transition_feature(t2_layout, contexts[ex.pair_id], ex)
              for ex in part]
        ys = np.asarray([_one_hot(ex.next_dominant, M) for ex in part])
        family[k] = fit(xs, ys, t2_layout.dim, sgd)

    if next_examples:
        xs = [_transition_feature(t2_layout, contexts[ex.pair_id], ex)
              for ex in next_examples]
        ys = np.asarray([_one_hot(ex.next_dominant, M) for ex in next_examples])
        fallback_weights = fit(xs, ys, t2_layout.dim, sgd)
    else:
        fallback_weights = np.zeros((t2_layout.dim, M))

    return family, first_weights, fallback_weights


def predict_next(suite: PredictorSuite, customer_ids, tau_customer,
                 sentences: list[tuple[tuple[int, ...], np.ndarray, int]],
                 ) -> np.ndarray:
    """Distribution over the topic of the next sentence.

    ``sentences`` lists (token_ids, tau_s, dominant) for the sentences
    composed so far; with none, the first-sentence model answers, otherwise
    the family member keyed by the last sentence's dominant topic (or the
    fallback when that key is absent).
    """
    j = len(sentences)
    if j == 0:
        return predict(suite.first_weights,
                       context_features(suite.first_layout, customer_ids,
                                        tau_customer))
    sent_ids, sent_tau, dominant = sentences[-1]
    weights = suite.family.get(dominant, suite.fallback_weights)
    x = transition_features(suite.t2_layout, customer_ids, tau_customer,
                            sent_ids, sent_tau, dominant, j - 1)
    return predict(weights, x)


def baseline_uniform(M: int) -> np.ndarray:
    if M < 1:
        raise PredictorError("need at least one topic")
    return np.full(M, 1.0 / M)


def baseline_average(alpha: np.ndarray) -> np.ndarray:
    """Normalized prior of the sentence model: one prediction for all inputs."""
    alpha = np.asarray(alpha, dtype=np.float64)
    return alpha / alpha.sum()


def baseline_copy_customer(tau_customer: np.ndarray) -> np.ndarray:
    return np.asarray(tau_customer, dtype=np.float64).copy()


# ---------------------------------------------------------------------------
# Suite container: same style as the topic-model container ("TPAM" magic,
# version, u64 JSON header, then raw matrices), with one f64 LE weight
# matrix per section.

SUITE_MAGIC = b"TPAM"
SUITE_VERSION = 1


def save_suite(suite: PredictorSuite, path) -> None:
    sections = [("t1", suite.t1_layout, suite.t1_weights),
                ("t2_first", suite.first_layout, suite.first_weights),
                ("t2_fallback", suite.t2_layout, suite.fallback_weights)]
    for k in sorted(suite.family):
        sections.append((f"t2_family_{k}", suite.t2_layout, suite.family[k]))
    header = {
        "kind": "predictor_suite",
        "M": suite.M,
        "V": suite.V,
        "sgd": suite.sgd.to_json(),
        "family_min_examples": suite.family_min_examples,
        "sections": [{"name": name, "layout": layout.to_json(),
                      "rows": int(W.shape[0]), "cols": int(W.shape[1])}
                     for name, layout, W in sections],
    }
    blob = json.dumps(header, sort_keys=True, separators=(",", ":")).encode()
    with open(path, "wb") as fh:
        fh.write(SUITE_MAGIC)
        fh.write(struct.pack("<I", SUITE_VERSION))
        fh.write(struct.pack("<Q", len(blob)))
        fh.write(blob)
        for _, _, W in sections:
            fh.write(np.ascontiguousarray(W, dtype="<f8").tobytes())


def load_suite(path) -> PredictorSuite:
    with open(path, "rb") as fh:
        if fh.read(4) != SUITE_MAGIC:
            raise PredictorError(f"{path}: not a predictor suite container")
        (version,) = struct.unpack("<I", fh.read(4))
        if version != SUITE_VERSION:
            raise PredictorError(f"{path}: unsupported suite version {version}")
        (meta_len,) = struct.unpack("<Q", fh.read(8))
        header = json.loads(fh.read(meta_len))
        matrices = {}
        layouts = {}
        for sec in header["sections"]:
            data = fh.read(8 * sec["rows"] * sec["cols"])
            matrices[sec["name"]] = np.frombuffer(data, dtype="<f8").reshape(
                sec["rows"], sec["cols"]).copy()
            layouts[sec["name"]] = FeatureLayout.from_json(sec["layout"])
    family = {int(name.rsplit("_", 1)[1]): W
              for name, W in matrices.items() if name.startswith("t2_family_")}
    return PredictorSuite(
        M=header["M"], V=header["V"],
        t1_weights=matrices["t1"], t1_layout=layouts["t1"],
        first_weights=matrices["t2_first"], first_layout=layouts["t2_first"],
        fallback_weights=matrices["t2_fallback"],
        t2_layout=layouts["t2_fallback"], family=family,
        sgd=SGDConfig.from_json(header["sgd"]),
        family_min_examples=header["family_min_examples"])
