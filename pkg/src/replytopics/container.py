"""Binary container for trained topic models.

Layout: magic ``TPAM``, version u32 LE, u64 LE JSON-metadata length, the
JSON metadata (view, M, V, alpha, beta, seed, sweeps, vocabulary hash),
then the M x V topic-word counts as raw u32 LE row-major, then the
vocabulary as u32-length-prefixed UTF-8 strings.  Serialization is
canonical (sorted JSON keys, fixed float formatting via ``repr``), so
save/load round-trips are byte-exact.
"""

from __future__ import annotations

import hashlib
import json
import struct

import numpy as np

from .corpus import Vocabulary
from .lda import TopicModel

MAGIC = b"TPAM"
VERSION = 1


class ContainerError(ValueError):
    pass


def _canonical_json(obj) -> bytes:
    return json.dumps(obj, sort_keys=True, separators=(",", ":")).encode("utf-8")


def vocabulary_hash(tokens: list[str]) -> str:
    h = hashlib.sha256()
    for t in tokens:
        b = t.encode("utf-8")
        h.update(struct.pack("<I", len(b)))
        h.update(b)
    return h.hexdigest()


def save_model(model: TopicModel, path) -> None:
    meta = {
        "view": model.view,
        "M": model.M,
        "V": model.V,
        "alpha": [float(a) for a in model.alpha],
        "beta": model.beta,
        "seed": model.seed,
        "sweeps": model.sweeps,
        "vocabulary_hash": vocabulary_hash(model.vocabulary.tokens),
    }
    blob = _canonical_json(meta)
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", VERSION))
        fh.write(struct.pack("<Q", len(blob)))
        fh.write(blob)
        fh.write(np.ascontiguousarray(model.topic_word_counts,
                                      dtype="<u4").tobytes())
        for t in model.vocabulary.tokens:
            b = t.encode("utf-8")
            fh.write(struct.pack("<I", len(b)))
            fh.write(b)


def _read_exact(fh, n: int) -> bytes:
    data = fh.read(n)
    if len(data) != n:
        raise ContainerError("truncated container")
    return data


def load_model(path) -> TopicModel:
    """Load a model container.

    The container carries vocabulary token strings only; the reconstructed
    Vocabulary uses placeholder frequencies (1), which is sufficient for
    inference and re-serialization.
    """
    with open(path, "rb") as fh:
        if _read_exact(fh, 4) != MAGIC:
            raise ContainerError(f"{path}: bad magic, not a model container")
        (version,) = struct.unpack("<I", _read_exact(fh, 4))
        if version != VERSION:
            raise ContainerError(f"{path}: unsupported container version {version}")
        (meta_len,) = struct.unpack("<Q", _read_exact(fh, 8))
        meta = json.loads(_read_exact(fh, meta_len))
        M, V = meta["M"], meta["V"]
        counts = np.frombuffer(_read_exact(fh, 4 * M * V),
                               dtype="<u4").reshape(M, V).astype(np.uint32)
        tokens = []
        for _ in range(V):
            (n,) = struct.unpack("<I", _read_exact(fh, 4))
            try:
                tokens.append(_read_exact(fh, n).decode("utf-8"))
            except UnicodeDecodeError as exc:
                raise ContainerError(
                    f"{path}: corrupt vocabulary string") from exc
        if fh.read(1):
            raise ContainerError(f"{path}: trailing bytes after vocabulary")
    if vocabulary_hash(tokens) != meta["vocabulary_hash"]:
        raise ContainerError(f"{path}: vocabulary hash mismatch")
    vocab = Vocabulary(tokens=tokens, doc_freq=[1] * V, corpus_freq=[1] * V)
    return TopicModel(
        view=meta["view"], M=M,
        alpha=np.asarray(meta["alpha"], dtype=np.float64),
        beta=float(meta["beta"]),
        topic_word_counts=counts,
        topic_totals=counts.sum(axis=1, dtype=np.int64),
        vocabulary=vocab, seed=int(meta["seed"]), sweeps=int(meta["sweeps"]))


def file_sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()
