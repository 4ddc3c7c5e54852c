"""Sparse feature construction for the topic predictors.

A :class:`FeatureLayout` fixes the ordered blocks of the feature space;
feature vectors are sparse (index, value) pairs with strictly increasing
indices.  Word blocks use log(1+tf) weighting over the pruned vocabulary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

POSITION_BUCKETS = 7  # j = 0, 1, 2, 3, 4, 5-7, >=8


class FeatureError(ValueError):
    pass


def position_bucket(j: int) -> int:
    if j < 0:
        raise FeatureError("sentence position must be >= 0")
    if j <= 4:
        return j
    return 5 if j <= 7 else 6


@dataclass(frozen=True)
class FeatureVector:
    indices: np.ndarray  # int64, strictly increasing
    values: np.ndarray   # float64, finite

    def __post_init__(self):
        if self.indices.shape != self.values.shape:
            raise FeatureError("indices and values must align")
        if self.indices.size and np.any(np.diff(self.indices) <= 0):
            raise FeatureError("feature indices must be strictly increasing")
        if not np.all(np.isfinite(self.values)):
            raise FeatureError("feature values must be finite")


@dataclass(frozen=True)
class FeatureLayout:
    """Ordered feature blocks for one predictor.

    ``kind`` is "context" (customer-only input: whole-reply and
    first-sentence models) or "transition" (customer plus current-sentence
    input).  The use_* flags select the ablation subset; ``sentence_topic``
    chooses between the one-hot dominant topic and the full distribution
    for the current-sentence topic block.
    """

    kind: str
    V: int
    M: int
    use_words: bool = True
    use_topics: bool = True
    use_position: bool = True
    sentence_topic: str = "onehot"  # or "tau"
    blocks: tuple[tuple[str, int], ...] = field(init=False)
    dim: int = field(init=False)

    def __post_init__(self):
        if self.kind not in ("context", "transition"):
            raise FeatureError(f"unknown layout kind {self.kind!r}")
        if self.sentence_topic not in ("onehot", "tau"):
            raise FeatureError(f"unknown sentence topic mode {self.sentence_topic!r}")
        if not (self.use_words or self.use_topics):
            raise FeatureError("layout needs at least words or topics")
        blocks = []
        if self.use_words:
            blocks.append(("customer_bow", self.V))
        if self.use_topics:
            blocks.append(("customer_tau", self.M))
        if self.kind == "transition":
            if self.use_words:
                blocks.append(("sentence_bow", self.V))
            if self.use_topics:
                blocks.append(("sentence_topic", self.M))
            if self.use_position:
                blocks.append(("position", POSITION_BUCKETS))
        blocks.append(("bias", 1))
        object.__setattr__(self, "blocks", tuple(blocks))
        object.__setattr__(self, "dim", sum(size for _, size in blocks))

    def offset(self, name: str) -> int:
        pos = 0
        for block, size in self.blocks:
            if block == name:
                return pos
            pos += size
        raise FeatureError(f"layout has no block {name!r}")

    def to_json(self) -> dict:
        return {"kind": self.kind, "V": self.V, "M": self.M,
                "use_words": self.use_words, "use_topics": self.use_topics,
                "use_position": self.use_position,
                "sentence_topic": self.sentence_topic}

    @classmethod
    def from_json(cls, obj: dict) -> "FeatureLayout":
        return cls(kind=obj["kind"], V=obj["V"], M=obj["M"],
                   use_words=obj["use_words"], use_topics=obj["use_topics"],
                   use_position=obj["use_position"],
                   sentence_topic=obj["sentence_topic"])


def _bow_entries(token_ids, offset: int):
    counts: dict[int, int] = {}
    for t in token_ids:
        counts[t] = counts.get(t, 0) + 1
    return [(offset + t, math.log1p(c)) for t, c in sorted(counts.items())]


def _dense_entries(vec, offset: int):
    return [(offset + i, float(v)) for i, v in enumerate(vec) if v != 0.0]


def _assemble(entries) -> FeatureVector:
    indices = np.asarray([i for i, _ in entries], dtype=np.int64)
    values = np.asarray([v for _, v in entries], dtype=np.float64)
    return FeatureVector(indices=indices, values=values)


def context_features(layout: FeatureLayout, customer_ids,
                     tau_customer) -> FeatureVector:
    """Customer-only features: whole-reply and first-sentence inputs."""
    if layout.kind != "context":
        raise FeatureError("layout is not a context layout")
    entries = []
    if layout.use_words:
        entries += _bow_entries(customer_ids, layout.offset("customer_bow"))
    if layout.use_topics:
        entries += _dense_entries(tau_customer, layout.offset("customer_tau"))
    entries.append((layout.offset("bias"), 1.0))
    return _assemble(entries)


def transition_features(layout: FeatureLayout, customer_ids, tau_customer,
                        sentence_ids, sentence_tau, sentence_dominant: int,
                        j: int) -> FeatureVector:
    """Features for predicting the topic of the sentence after index ``j``."""
    if layout.kind != "transition":
        raise FeatureError("layout is not a transition layout")
    entries = []
    if layout.use_words:
        entries += _bow_entries(customer_ids, layout.offset("customer_bow"))
    if layout.use_topics:
        entries += _dense_entries(tau_customer, layout.offset("customer_tau"))
    if layout.use_words:
        entries += _bow_entries(sentence_ids, layout.offset("sentence_bow"))
    if layout.use_topics:
        off = layout.offset("sentence_topic")
        if layout.sentence_topic == "onehot":
            entries.append((off + sentence_dominant, 1.0))
        else:
            entries += _dense_entries(sentence_tau, off)
    if layout.use_position:
        entries.append((layout.offset("position") + position_bucket(j), 1.0))
    entries.append((layout.offset("bias"), 1.0))
    return _assemble(entries)
