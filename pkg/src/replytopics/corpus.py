"""Corpus ingestion, filtering, tokenization, sentence segmentation, splits.

The corpus unit is an :class:`EmailPair`: one customer query and the agent's
reply to it.  Everything here is a pure function over immutable inputs.
"""

from __future__ import annotations

import json
import random
import re
from dataclasses import dataclass, field

from .stopwords import STOPWORDS


class CorpusError(ValueError):
    """Malformed corpus input or an unsatisfiable corpus operation."""


@dataclass(frozen=True)
class EmailPair:
    """One customer-query / agent-reply exchange."""

    id: str
    customer_text: str
    agent_text: str

    def __post_init__(self):
        if not self.id:
            raise CorpusError("EmailPair id must be non-empty")
        if not self.customer_text.strip() or not self.agent_text.strip():
            raise CorpusError(f"pair {self.id!r}: texts must be non-empty")


@dataclass(frozen=True)
class TokenizedDoc:
    """Vocabulary-encoded document with sentence boundaries.

    ``sentence_bounds`` holds half-open (start, end) token index ranges that
    partition ``[0, len(tokens))`` in order, with no gaps or overlaps.
    """

    tokens: tuple[int, ...]
    sentence_bounds: tuple[tuple[int, int], ...]

    def __post_init__(self):
        pos = 0
        for start, end in self.sentence_bounds:
            if start != pos or end < start:
                raise CorpusError("sentence_bounds must partition the token range")
            pos = end
        if pos != len(self.tokens):
            raise CorpusError("sentence_bounds must cover all tokens")


@dataclass
class Vocabulary:
    """Dense token <-> id mapping with document and corpus frequencies."""

    tokens: list[str] = field(default_factory=list)
    doc_freq: list[int] = field(default_factory=list)
    corpus_freq: list[int] = field(default_factory=list)
    _index: dict[str, int] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if not self._index:
            self._index = {t: i for i, t in enumerate(self.tokens)}

    def __len__(self) -> int:
        return len(self.tokens)

    def __contains__(self, token: str) -> bool:
        return token in self._index

    def id_of(self, token: str) -> int:
        return self._index[token]

    def encode(self, tokens: list[str]) -> list[int]:
        """Map tokens to ids, dropping out-of-vocabulary tokens."""
        idx = self._index
        return [idx[t] for t in tokens if t in idx]

    @classmethod
    def build(cls, docs: list[list[str]], min_doc_freq: int = 5,
              max_size: int = 20000) -> "Vocabulary":
        """Build a pruned vocabulary from tokenized documents.

        Keeps tokens with document frequency >= ``min_doc_freq``, capped at
        the ``max_size`` most corpus-frequent ones.  Ties and final ids are
        ordered by descending corpus frequency, then token string, so the
        result is deterministic.
        """
        df: dict[str, int] = {}
        cf: dict[str, int] = {}
        for doc in docs:
            for t in doc:
                cf[t] = cf.get(t, 0) + 1
            for t in set(doc):
                df[t] = df.get(t, 0) + 1
        kept = [t for t in cf if df[t] >= min_doc_freq]
        kept.sort(key=lambda t: (-cf[t], t))
        kept = kept[:max_size]
        return cls(tokens=kept,
                   doc_freq=[df[t] for t in kept],
                   corpus_freq=[cf[t] for t in kept])

    def to_json(self) -> dict:
        return {"tokens": self.tokens, "doc_freq": self.doc_freq,
                "corpus_freq": self.corpus_freq}

    @classmethod
    def from_json(cls, obj: dict) -> "Vocabulary":
        return cls(tokens=list(obj["tokens"]), doc_freq=list(obj["doc_freq"]),
                   corpus_freq=list(obj["corpus_freq"]))


@dataclass(frozen=True)
class CorpusSplit:
    """Deterministic train/test partition of pair ids."""

    train: tuple[str, ...]
    test: tuple[str, ...]
    seed: int

    def __post_init__(self):
        if set(self.train) & set(self.test):
            raise CorpusError("train and test ids overlap")


def ingest(path, format: str = "jsonl") -> list[EmailPair]:
    """Read email pairs from a JSONL file, one record per line.

    Each record needs ``id``, ``customer`` and ``agent`` fields.  Records are
    returned in file order; malformed lines and duplicate ids are rejected
    with the offending line number / id named in the error.
    """
    if format != "jsonl":
        raise CorpusError(f"unsupported corpus format: {format!r}")
    pairs: list[EmailPair] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                pair = EmailPair(str(rec["id"]), rec["customer"], rec["agent"])
            except (json.JSONDecodeError, KeyError, TypeError, CorpusError) as exc:
                raise CorpusError(f"malformed record at line {lineno}: {exc}") from exc
            if pair.id in seen:
                raise CorpusError(f"duplicate pair id {pair.id!r} at line {lineno}")
            seen.add(pair.id)
            pairs.append(pair)
    return pairs


def word_count(text: str) -> int:
    """Raw whitespace word count, used by the length filter and stats."""
    return len(text.split())


def filter_pairs(pairs: list[EmailPair], min_customer: int = 10,
                 min_agent: int = 20) -> list[EmailPair]:
    """Keep pairs whose customer/agent word counts meet the thresholds.

    Both bounds are inclusive ("at least").  Order is preserved.
    """
    if min_customer < 1 or min_agent < 1:
        raise CorpusError("length thresholds must be >= 1")
    return [p for p in pairs
            if word_count(p.customer_text) >= min_customer
            and word_count(p.agent_text) >= min_agent]


_TOKEN_RE = re.compile(r"[a-z0-9]+")


def tokenize(text: str, vocab: Vocabulary | None = None):
    """Normalize text into tokens; optionally encode against a vocabulary.

    Lowercases, splits on non-alphanumeric runs, and drops tokens shorter
    than two characters or in the stopword list.  With ``vocab`` given
    (lookup mode), returns vocabulary ids and silently drops OOV tokens.
    """
    tokens = [t for t in _TOKEN_RE.findall(text.lower())
              if len(t) >= 2 and t not in STOPWORDS]
    if vocab is None:
        return tokens
    return vocab.encode(tokens)


# Final-word guard: a terminator preceded by one of these is an abbreviation,
# not a sentence end.
_ABBREVIATIONS = frozenset([
    "mr", "mrs", "ms", "dr", "prof", "sr", "jr", "st", "vs", "etc",
    "e.g", "i.e", "eg", "ie", "inc", "ltd", "co", "fig", "al", "approx",
])

_SENT_BREAK_RE = re.compile(r"[.?!]+(?=\s+[A-Z0-9])")


def segment_sentences(text: str) -> list[str]:
    """Split text into sentences.

    Breaks after '.', '?' or '!' runs followed by whitespace and an uppercase
    letter or digit; the abbreviation guard list suppresses spurious breaks.
    Never returns empty sentences.
    """
    breaks: list[int] = []
    for m in _SENT_BREAK_RE.finditer(text):
        prefix = text[:m.start()]
        last_word = prefix.split()[-1].lower() if prefix.split() else ""
        last_word = last_word.strip("\"'()[]")
        if last_word in _ABBREVIATIONS:
            continue
        breaks.append(m.end())
    sentences = []
    start = 0
    for b in breaks:
        chunk = text[start:b].strip()
        if chunk:
            sentences.append(chunk)
        start = b
    tail = text[start:].strip()
    if tail:
        sentences.append(tail)
    return sentences


def split_corpus(pairs: list[EmailPair], ratio: float = 0.8,
                 seed: int = 0) -> CorpusSplit:
    """Shuffle deterministically by seed and cut into train/test prefixes."""
    if not 0 < ratio < 1:
        raise CorpusError("split ratio must be in (0, 1)")
    if len(pairs) < 2:
        raise CorpusError("need at least 2 pairs to split")
    ids = [p.id for p in pairs]
    random.Random(seed).shuffle(ids)
    n_train = int(round(ratio * len(ids)))
    n_train = min(max(n_train, 1), len(ids) - 1)
    return CorpusSplit(train=tuple(ids[:n_train]), test=tuple(ids[n_train:]),
                       seed=seed)


def corpus_stats(pairs: list[EmailPair]) -> dict:
    """Per-role corpus statistics: document count, avg words, avg sentences."""
    if not pairs:
        raise CorpusError("cannot compute statistics of an empty corpus")
    stats = {}
    for role, texts in (("customer", [p.customer_text for p in pairs]),
                        ("agent", [p.agent_text for p in pairs])):
        n = len(texts)
        stats[role] = {
            "docs": n,
            "avg_tokens": sum(word_count(t) for t in texts) / n,
            "avg_sentences": sum(len(segment_sentences(t)) for t in texts) / n,
        }
    return stats


def format_stats(stats: dict) -> str:
    """Aligned text table over the stats schema (D, avg T, avg S per role)."""
    lines = [f"{'Type':<10}{'D':>8}{'avg T':>10}{'avg S':>10}"]
    for role, row in stats.items():
        lines.append(f"{role:<10}{row['docs']:>8}"
                     f"{row['avg_tokens']:>10.1f}{row['avg_sentences']:>10.1f}")
    return "\n".join(lines)
