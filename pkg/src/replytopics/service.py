"""HTTP JSON API serving trained artifacts for interactive composition.

Endpoints: GET /health, POST /suggest/reply, POST /suggest/next,
GET /topics.  The service is stateless: artifacts are immutable after load
and every response is a pure function of the request body.  Serving-time
fold-in uses a reduced sweep schedule (burn-in 5, 3 samples by default) to
stay inside the interactive latency budget; the schedule is echoed in every
suggestion response.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from fastapi import FastAPI, HTTPException, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from . import container, corpus, lda, predictor, silver
from .evaluation import topk_topics

SERVE_BURNIN = 5
SERVE_SAMPLES = 3
EXEMPLARS_PER_TOPIC = 200
EXEMPLARS_PER_SUGGESTION = 3


@dataclass(frozen=True)
class ServiceConfig:
    models_dir: str
    M: int | None = None          # None: prefer 50, else largest available
    serve_burnin: int = SERVE_BURNIN
    serve_samples: int = SERVE_SAMPLES
    cors_origins: tuple[str, ...] = ("*",)
    top_words: int = 10
    top_phrases: int = 5


@dataclass
class ServiceArtifacts:
    """Everything a request handler reads; immutable after load."""

    M: int
    vocab: corpus.Vocabulary
    model_ca: lda.TopicModel
    model_s: lda.TopicModel
    suite: predictor.PredictorSuite
    descriptors: dict[str, list[lda.TopicDescriptor]]
    exemplars: dict[str, dict[int, list[str]]]  # space -> topic -> sentences
    fingerprints: dict[str, str]
    serve_burnin: int = SERVE_BURNIN
    serve_samples: int = SERVE_SAMPLES


@dataclass
class AppState:
    artifacts: ServiceArtifacts | None = None


def _pick_m(models_dir: Path, requested: int | None) -> int:
    available = sorted(int(p.stem[1:].split("_")[0])
                       for p in (models_dir / "models").glob("m*_CA.tpam"))
    if not available:
        raise FileNotFoundError(
            f"no trained models under {models_dir / 'models'}")
    if requested is not None:
        if requested not in available:
            raise FileNotFoundError(
                f"no trained model for M={requested} (available: {available})")
        return requested
    return 50 if 50 in available else max(available)


def _exemplar_index(pairs: list[corpus.EmailPair],
                    annotations: list[silver.SilverAnnotation],
                    cap: int = EXEMPLARS_PER_TOPIC,
                    ) -> dict[str, dict[int, list[str]]]:
    """Peaked training sentences per topic, ranked by dominant probability.

    The sentence space ("S") keys by each sentence's dominant topic; the
    pair space ("CA") keys by the reply's dominant pair-level topic, using
    the reply's first sentence as the representative text.
    """
    by_id = {p.id: p for p in pairs}
    scored: dict[str, dict[int, list[tuple[float, str, int, str]]]] = {
        "S": {}, "CA": {}}
    for ann in annotations:
        pair = by_id.get(ann.pair_id)
        if pair is None:
            continue
        sentences = corpus.segment_sentences(pair.agent_text)
        for s in ann.sentences:
            if not s.peaked or s.oov or s.j >= len(sentences):
                continue
            scored["S"].setdefault(s.dominant, []).append(
                (-float(s.tau_s[s.dominant]), ann.pair_id, s.j, sentences[s.j]))
        if sentences:
            dom, peaked = lda.dominant_topic(ann.tau_ca_agent)
            if peaked:
                scored["CA"].setdefault(dom, []).append(
                    (-float(ann.tau_ca_agent[dom]), ann.pair_id, 0,
                     sentences[0]))
    return {space: {topic: [text for _, _, _, text in sorted(items)[:cap]]
                    for topic, items in index.items()}
            for space, index in scored.items()}


def load_artifacts(config: ServiceConfig) -> ServiceArtifacts:
    """Load models, predictor suite, descriptors and exemplars from disk.

    ``models_dir`` is a pipeline output directory.  A throwaway inference
    call warms up the compiled sampling kernel so the first real request
    does not pay compilation latency.
    """
    root = Path(config.models_dir)
    M = _pick_m(root, config.M)
    paths = {
        "model_ca": root / "models" / f"m{M}_CA.tpam",
        "model_s": root / "models" / f"m{M}_S.tpam",
        "suite": root / "predictors" / f"m{M}.suite",
    }
    for name, p in paths.items():
        if not p.exists():
            raise FileNotFoundError(f"missing artifact {p}")
    model_ca = container.load_model(paths["model_ca"])
    model_s = container.load_model(paths["model_s"])
    suite = predictor.load_suite(paths["suite"])
    vocab_file = root / "vocab.json"
    vocab = (corpus.Vocabulary.from_json(json.loads(vocab_file.read_text()))
             if vocab_file.exists() else model_ca.vocabulary)

    train_pairs: list[corpus.EmailPair] = []
    annotations: list[silver.SilverAnnotation] = []
    corpus_file = root / "corpus.jsonl"
    silver_file = root / "silver" / f"m{M}_train.jsonl"
    if corpus_file.exists() and silver_file.exists():
        all_pairs = corpus.ingest(corpus_file)
        split_file = root / "split.json"
        if split_file.exists():
            train_ids = set(json.loads(split_file.read_text())["train"])
            train_pairs = [p for p in all_pairs if p.id in train_ids]
        else:
            train_pairs = all_pairs
        annotations = silver.load_silver(silver_file)

    train_docs = {
        "CA": lda.build_documents(train_pairs, "CA", vocab) if train_pairs else None,
        "S": lda.build_documents(train_pairs, "S", vocab) if train_pairs else None,
    }
    descriptors = {
        "CA": lda.describe_topics(model_ca, config.top_words,
                                  config.top_phrases, train_docs["CA"]),
        "S": lda.describe_topics(model_s, config.top_words,
                                 config.top_phrases, train_docs["S"]),
    }
    lda.infer(model_s, [0] if len(vocab) else [],
              burnin=config.serve_burnin, samples=config.serve_samples)

    return ServiceArtifacts(
        M=M, vocab=vocab, model_ca=model_ca, model_s=model_s, suite=suite,
        descriptors=descriptors,
        exemplars=_exemplar_index(train_pairs, annotations),
        fingerprints={name: container.file_sha256(p)
                      for name, p in paths.items()},
        serve_burnin=config.serve_burnin, serve_samples=config.serve_samples)


class ReplyRequest(BaseModel):
    customer: str
    k: int = 5


class NextRequest(BaseModel):
    customer: str
    sentences: list[str] = []
    k: int = 5


def _suggestions(art: ServiceArtifacts, tau: np.ndarray, k: int,
                 space: str) -> list[dict]:
    descriptors = art.descriptors[space]
    exemplars = art.exemplars.get(space, {})
    out = []
    for topic in topk_topics(tau, k):
        d = descriptors[topic]
        out.append({
            "topic": int(topic),
            "probability": float(tau[topic]),
            "top_words": list(d.top_words),
            "top_phrases": list(d.top_phrases),
            "exemplars": exemplars.get(int(topic),
                                       [])[:EXEMPLARS_PER_SUGGESTION],
        })
    return out


def create_app(state: AppState,
               cors_origins: tuple[str, ...] = ("*",)) -> FastAPI:
    app = FastAPI(title="replytopics suggestion service")
    app.add_middleware(CORSMiddleware, allow_origins=list(cors_origins),
                       allow_methods=["*"], allow_headers=["*"])

    @app.exception_handler(RequestValidationError)
    async def invalid_body(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400,
                            content={"detail": "invalid request body"})

    def _artifacts() -> ServiceArtifacts:
        if state.artifacts is None:
            raise HTTPException(status_code=503,
                                detail="artifacts not loaded yet")
        return state.artifacts

    def _check_k(k: int, M: int) -> None:
        if not 1 <= k <= M:
            raise HTTPException(status_code=400,
                                detail=f"k must be in [1, {M}]")

    @app.get("/health")
    def health():
        art = _artifacts()
        return {"status": "ok", "M": art.M, "fingerprints": art.fingerprints}

    @app.post("/suggest/reply")
    def suggest_reply(req: ReplyRequest):
        art = _artifacts()
        if not req.customer.strip():
            raise HTTPException(status_code=400,
                                detail="customer text must be non-empty")
        _check_k(req.k, art.M)
        ids = corpus.tokenize(req.customer, art.vocab)
        tau_c = lda.infer(art.model_ca, ids, burnin=art.serve_burnin,
                          samples=art.serve_samples)
        tau = predictor.predict_t1(art.suite.t1_weights, art.suite.t1_layout,
                                   ids, tau_c)
        return {"topics": _suggestions(art, tau, req.k, "CA"),
                "tau": [float(x) for x in tau],
                "serve_burnin": art.serve_burnin,
                "serve_samples": art.serve_samples}

    @app.post("/suggest/next")
    def suggest_next(req: NextRequest):
        art = _artifacts()
        if not req.customer.strip():
            raise HTTPException(status_code=400,
                                detail="customer text must be non-empty")
        _check_k(req.k, art.M)
        customer_ids = corpus.tokenize(req.customer, art.vocab)
        tau_c = lda.infer(art.model_ca, customer_ids,
                          burnin=art.serve_burnin, samples=art.serve_samples)
        sentence_states = []
        for text in req.sentences:
            ids = tuple(corpus.tokenize(text, art.vocab))
            tau_s = lda.infer(art.model_s, ids, burnin=art.serve_burnin,
                              samples=art.serve_samples)
            dom, _ = lda.dominant_topic(tau_s)
            sentence_states.append((ids, tau_s, dom))
        tau = predictor.predict_next(art.suite, customer_ids, tau_c,
                                     sentence_states)
        return {"topics": _suggestions(art, tau, req.k, "S"),
                "position": len(req.sentences),
                "serve_burnin": art.serve_burnin,
                "serve_samples": art.serve_samples}

    @app.get("/topics")
    def topics(view: str = "S"):
        art = _artifacts()
        if view not in art.descriptors:
            raise HTTPException(status_code=400,
                                detail=f"unknown view {view!r}")
        return {"view": view, "topics": [
            {"topic": d.topic, "top_words": list(d.top_words),
             "top_phrases": list(d.top_phrases)}
            for d in art.descriptors[view]]}

    return app


def build_service(config: ServiceConfig) -> FastAPI:
    """Load artifacts eagerly and return the ready-to-serve app."""
    state = AppState(artifacts=load_artifacts(config))
    return create_app(state, config.cors_origins)
