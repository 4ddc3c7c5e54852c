"""End-to-end pipeline: ingest -> LDA views -> silver -> predictors -> reports.

Every stage writes its artifacts plus a manifest recording the config hash
and the SHA-256 of each input; a stage whose manifest still matches is
skipped on re-run, and downstream stages refuse artifacts produced under a
different config.  Nothing here is time-stamped, so a full re-run with the
same seed reproduces every artifact byte for byte.
"""

from __future__ import annotations

import hashlib
import json
import zlib
from dataclasses import dataclass, asdict, replace
from pathlib import Path

import numpy as np

from . import container, corpus, evaluation, lda, perplexity, predictor, silver
from .features import FeatureLayout
from .regressor import SGDConfig

DEFAULT_M_GRID = (10, 20, 30, 40, 50, 75, 100)


class MissingPrerequisiteError(RuntimeError):
    """A required upstream artifact is absent; the message names its path."""


class StaleArtifactError(RuntimeError):
    """An upstream artifact was built under a different configuration."""


@dataclass(frozen=True)
class PipelineConfig:
    corpus: str
    out_dir: str
    m_grid: tuple[int, ...] = DEFAULT_M_GRID
    seed: int = 0
    min_customer: int = 10
    min_agent: int = 20
    split_ratio: float = 0.8
    vocab_min_df: int = 5
    vocab_max_size: int = 20000
    alpha_total: float = lda.DEFAULT_ALPHA_TOTAL
    beta: float = lda.DEFAULT_BETA
    sweeps: int = lda.DEFAULT_SWEEPS
    views: tuple[str, ...] = ("A", "CA", "S")
    foldin_burnin: int = lda.FOLDIN_BURNIN
    foldin_samples: int = lda.FOLDIN_SAMPLES
    sgd_learning_rate: float = 0.1
    sgd_epochs: int = 20
    sgd_l2: float = 1e-4
    family_min_examples: int = 50
    sentence_topic: str = "onehot"
    t2_m: int | None = None
    t2_subsets: str = "all"  # or "full": only the all-features row
    ranking_k: int = 5
    ranking_k_grid: tuple[int, ...] = (2, 3, 5, 10)
    dta_k_grid: tuple[int, ...] = (1, 2, 5, 10)

    def __post_init__(self):
        if any(m < 2 for m in self.m_grid):
            raise ValueError("all M values must be >= 2")

    def to_json(self) -> dict:
        obj = asdict(self)
        for key in ("m_grid", "views", "ranking_k_grid", "dta_k_grid"):
            obj[key] = list(obj[key])
        return obj

    @classmethod
    def from_json(cls, obj: dict) -> "PipelineConfig":
        obj = dict(obj)
        for key in ("m_grid", "views", "ranking_k_grid", "dta_k_grid"):
            if key in obj:
                obj[key] = tuple(obj[key])
        return cls(**obj)

    @property
    def config_hash(self) -> str:
        blob = json.dumps(self.to_json(), sort_keys=True,
                          separators=(",", ":")).encode()
        return hashlib.sha256(blob).hexdigest()

    @property
    def effective_t2_m(self) -> int:
        if self.t2_m is not None:
            return self.t2_m
        return 50 if 50 in self.m_grid else max(self.m_grid)

    def sgd(self) -> SGDConfig:
        return SGDConfig(learning_rate=self.sgd_learning_rate,
                         epochs=self.sgd_epochs, l2=self.sgd_l2,
                         seed=self.seed)


def _derived_seed(*parts) -> int:
    return zlib.crc32(":".join(str(p) for p in parts).encode()) & 0x7FFFFFFF


class Pipeline:
    def __init__(self, config: PipelineConfig):
        self.cfg = config
        self.out = Path(config.out_dir)

    # -- paths ------------------------------------------------------------

    def path(self, *parts) -> Path:
        return self.out.joinpath(*parts)

    def model_path(self, M: int, view: str) -> Path:
        return self.path("models", f"m{M}_{view}.tpam")

    def silver_path(self, M: int, part: str) -> Path:
        return self.path("silver", f"m{M}_{part}.jsonl")

    def suite_path(self, M: int) -> Path:
        return self.path("predictors", f"m{M}.suite")

    def _manifest_path(self, stage: str) -> Path:
        return self.path("manifests", f"{stage}.json")

    # -- manifest machinery -----------------------------------------------

    def _run_stage(self, stage: str, inputs: list[Path], outputs: list[Path],
                   builder) -> bool:
        """Run a stage unless its manifest matches; returns True if built."""
        in_hashes = {}
        for p in inputs:
            if not Path(p).exists():
                raise MissingPrerequisiteError(
                    f"stage {stage!r} needs missing artifact {p}")
            in_hashes[str(p)] = container.file_sha256(p)
        manifest_path = self._manifest_path(stage)
        if manifest_path.exists():
            manifest = json.loads(manifest_path.read_text())
            if (manifest.get("config_hash") == self.cfg.config_hash
                    and manifest.get("inputs") == in_hashes
                    and all(Path(o).exists() for o in manifest.get("outputs", {}))):
                return False
        for o in outputs:
            Path(o).parent.mkdir(parents=True, exist_ok=True)
        builder()
        manifest = {
            "stage": stage,
            "config_hash": self.cfg.config_hash,
            "seed": self.cfg.seed,
            "inputs": in_hashes,
            "outputs": {str(o): container.file_sha256(o) for o in outputs},
        }
        manifest_path.parent.mkdir(parents=True, exist_ok=True)
        manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True)
                                 + "\n")
        return True

    def _require_stage(self, stage: str) -> None:
        manifest_path = self._manifest_path(stage)
        if not manifest_path.exists():
            raise MissingPrerequisiteError(
                f"stage {stage!r} has not been run (expected {manifest_path})")
        manifest = json.loads(manifest_path.read_text())
        if manifest.get("config_hash") != self.cfg.config_hash:
            raise StaleArtifactError(
                f"artifacts of stage {stage!r} were built under a different "
                f"config (hash {manifest.get('config_hash')!r})")

    # -- artifact loading --------------------------------------------------

    def load_pairs(self) -> list[corpus.EmailPair]:
        return corpus.ingest(self.path("corpus.jsonl"))

    def load_split(self) -> corpus.CorpusSplit:
        obj = json.loads(self.path("split.json").read_text())
        return corpus.CorpusSplit(train=tuple(obj["train"]),
                                  test=tuple(obj["test"]), seed=obj["seed"])

    def load_vocab(self) -> corpus.Vocabulary:
        return corpus.Vocabulary.from_json(
            json.loads(self.path("vocab.json").read_text()))

    def _split_pairs(self):
        pairs = self.load_pairs()
        split = self.load_split()
        by_id = {p.id: p for p in pairs}
        return ([by_id[i] for i in split.train],
                [by_id[i] for i in split.test])

    # -- stages ------------------------------------------------------------

    def ingest(self) -> bool:
        cfg = self.cfg

        def build():
            pairs = corpus.ingest(cfg.corpus)
            kept = corpus.filter_pairs(pairs, cfg.min_customer, cfg.min_agent)
            split = corpus.split_corpus(kept, cfg.split_ratio, cfg.seed)
            with open(self.path("corpus.jsonl"), "w", encoding="utf-8") as fh:
                for p in kept:
                    fh.write(json.dumps(
                        {"id": p.id, "customer": p.customer_text,
                         "agent": p.agent_text},
                        sort_keys=True, separators=(",", ":")) + "\n")
            self.path("split.json").write_text(json.dumps(
                {"train": list(split.train), "test": list(split.test),
                 "seed": split.seed}, sort_keys=True) + "\n")
            train_ids = set(split.train)
            docs = []
            for p in kept:
                if p.id in train_ids:
                    docs.append(corpus.tokenize(p.customer_text))
                    docs.append(corpus.tokenize(p.agent_text))
            vocab = corpus.Vocabulary.build(docs, cfg.vocab_min_df,
                                            cfg.vocab_max_size)
            self.path("vocab.json").write_text(
                json.dumps(vocab.to_json(), sort_keys=True) + "\n")
            stats = corpus.corpus_stats(kept)
            self.path("stats.json").write_text(
                json.dumps(stats, indent=2, sort_keys=True) + "\n")

        outputs = [self.path(n) for n in
                   ("corpus.jsonl", "split.json", "vocab.json", "stats.json")]
        return self._run_stage("ingest", [Path(cfg.corpus)], outputs, build)

    def train_lda(self) -> bool:
        self._require_stage("ingest")
        cfg = self.cfg
        outputs = [self.model_path(M, v)
                   for M in cfg.m_grid for v in cfg.views]

        def build():
            train_pairs, _ = self._split_pairs()
            vocab = self.load_vocab()
            for M in cfg.m_grid:
                for view in cfg.views:
                    docs = lda.build_documents(train_pairs, view, vocab)
                    model = lda.train(
                        docs, M, vocab, alpha=cfg.alpha_total, beta=cfg.beta,
                        sweeps=cfg.sweeps,
                        seed=_derived_seed(cfg.seed, M, view), view=view)
                    model.check_counts()
                    container.save_model(model, self.model_path(M, view))

        inputs = [self.path(n) for n in ("corpus.jsonl", "split.json",
                                         "vocab.json")]
        return self._run_stage("train_lda", inputs, outputs, build)

    def annotate(self) -> bool:
        self._require_stage("train_lda")
        cfg = self.cfg
        inputs = [self.path("corpus.jsonl"), self.path("split.json"),
                  self.path("vocab.json")]
        inputs += [self.model_path(M, v) for M in cfg.m_grid
                   for v in ("CA", "S")]
        outputs = [self.silver_path(M, part)
                   for M in cfg.m_grid for part in ("train", "test")]

        def build():
            train_pairs, test_pairs = self._split_pairs()
            vocab = self.load_vocab()
            for M in cfg.m_grid:
                model_ca = container.load_model(self.model_path(M, "CA"))
                model_s = container.load_model(self.model_path(M, "S"))
                for part, pairs in (("train", train_pairs),
                                    ("test", test_pairs)):
                    anns = silver.annotate(pairs, model_ca, model_s, vocab)
                    silver.save_silver(anns, self.silver_path(M, part))

        return self._run_stage("annotate", inputs, outputs, build)

    def _layouts(self, M: int, V: int):
        cfg = self.cfg
        t1 = FeatureLayout(kind="context", V=V, M=M)
        first = FeatureLayout(kind="context", V=V, M=M)
        t2 = FeatureLayout(kind="transition", V=V, M=M,
                           sentence_topic=cfg.sentence_topic)
        return t1, first, t2

    def train_predictors(self) -> bool:
        self._require_stage("annotate")
        cfg = self.cfg
        inputs = [self.path("corpus.jsonl"), self.path("split.json"),
                  self.path("vocab.json")]
        inputs += [self.silver_path(M, "train") for M in cfg.m_grid]
        outputs = [self.suite_path(M) for M in cfg.m_grid]

        def build():
            train_pairs, _ = self._split_pairs()
            vocab = self.load_vocab()
            for M in cfg.m_grid:
                anns = silver.load_silver(self.silver_path(M, "train"))
                contexts = predictor.build_contexts(train_pairs, anns, vocab)
                t1_layout, first_layout, t2_layout = self._layouts(M, len(vocab))
                sgd = cfg.sgd()
                t1_w = predictor.train_t1(anns, contexts, t1_layout, sgd)
                transitions = silver.transition_pairs(anns)
                family, first_w, fallback_w = predictor.train_t2(
                    transitions, contexts, M, t2_layout, first_layout, sgd,
                    cfg.family_min_examples)
                suite = predictor.PredictorSuite(
                    M=M, V=len(vocab), t1_weights=t1_w, t1_layout=t1_layout,
                    first_weights=first_w, first_layout=first_layout,
                    fallback_weights=fallback_w, t2_layout=t2_layout,
                    family=family, sgd=sgd,
                    family_min_examples=cfg.family_min_examples)
                predictor.save_suite(suite, self.suite_path(M))

        return self._run_stage("train_predictors", inputs, outputs, build)

    def evaluate(self) -> bool:
        self._require_stage("train_predictors")
        cfg = self.cfg
        t2_m = cfg.effective_t2_m
        inputs = [self.path("corpus.jsonl"), self.path("split.json"),
                  self.path("vocab.json"), self.model_path(t2_m, "S")]
        inputs += [self.silver_path(M, part) for M in cfg.m_grid
                   for part in ("train", "test")]
        inputs += [self.suite_path(M) for M in cfg.m_grid]
        outputs = [self.path("eval", n) for n in
                   ("t1_report.json", "t1_report.csv",
                    "t2_report.json", "t2_report.csv")]

        def build():
            train_pairs, test_pairs = self._split_pairs()
            vocab = self.load_vocab()

            grid = {}
            for M in cfg.m_grid:
                suite = predictor.load_suite(self.suite_path(M))
                train_anns = silver.load_silver(self.silver_path(M, "train"))
                test_anns = silver.load_silver(self.silver_path(M, "test"))
                contexts = predictor.build_contexts(test_pairs, test_anns,
                                                    vocab)
                preds, targets, copies = [], [], []
                for ann in test_anns:
                    ctx = contexts[ann.pair_id]
                    preds.append(predictor.predict_t1(
                        suite.t1_weights, suite.t1_layout, ctx.customer_ids,
                        ctx.tau_customer))
                    targets.append(ann.tau_ca_agent)
                    copies.append(predictor.baseline_copy_customer(
                        ann.tau_ca_customer))
                grid[M] = evaluation.T1GridPoint(
                    predictions=preds, targets=targets,
                    copy_predictions=copies,
                    train_pool=[a.tau_ca_agent for a in train_anns])
            t1_report = evaluation.run_t1_eval(
                grid, k=cfg.ranking_k, k_grid=cfg.ranking_k_grid,
                seed=cfg.seed)
            evaluation.write_report(t1_report,
                                    self.path("eval", "t1_report.json"),
                                    self.path("eval", "t1_report.csv"))

            model_s = container.load_model(self.model_path(t2_m, "S"))
            train_anns = silver.load_silver(self.silver_path(t2_m, "train"))
            test_anns = silver.load_silver(self.silver_path(t2_m, "test"))
            data = evaluation.T2EvalData(
                M=t2_m, V=len(vocab), alpha_s=model_s.alpha,
                train_transitions=silver.transition_pairs(train_anns),
                train_contexts=predictor.build_contexts(train_pairs,
                                                        train_anns, vocab),
                test_transitions=silver.transition_pairs(test_anns),
                test_contexts=predictor.build_contexts(test_pairs, test_anns,
                                                       vocab),
                sgd=cfg.sgd(),
                family_min_examples=cfg.family_min_examples,
                sentence_topic=cfg.sentence_topic)
            subsets = (evaluation.T2_FEATURE_SUBSETS if cfg.t2_subsets == "all"
                       else evaluation.T2_FEATURE_SUBSETS[-1:])
            t2_report = evaluation.run_t2_eval(data, K_grid=cfg.dta_k_grid,
                                               subsets=subsets)
            evaluation.write_report(t2_report,
                                    self.path("eval", "t2_report.json"),
                                    self.path("eval", "t2_report.csv"))

        return self._run_stage("evaluate", inputs, outputs, build)

    def perplexity(self) -> bool:
        self._require_stage("train_lda")
        cfg = self.cfg
        for view in ("A", "CA"):
            if view not in cfg.views:
                raise MissingPrerequisiteError(
                    f"perplexity needs view {view!r} in the trained views")
        inputs = [self.path("corpus.jsonl"), self.path("split.json"),
                  self.path("vocab.json")]
        inputs += [self.model_path(M, v) for M in cfg.m_grid
                   for v in ("A", "CA")]
        outputs = [self.path("eval", "perplexity.json"),
                   self.path("eval", "perplexity.csv")]

        def build():
            _, test_pairs = self._split_pairs()
            vocab = self.load_vocab()
            pair_docs = [(corpus.tokenize(p.customer_text, vocab),
                          corpus.tokenize(p.agent_text, vocab))
                         for p in test_pairs]
            reports = []
            for M in cfg.m_grid:
                model_a = container.load_model(self.model_path(M, "A"))
                model_ca = container.load_model(self.model_path(M, "CA"))
                reports.append(perplexity.build_report(M, model_a, model_ca,
                                                       pair_docs))
            perplexity.write_reports(reports,
                                     self.path("eval", "perplexity.json"),
                                     self.path("eval", "perplexity.csv"))

        return self._run_stage("perplexity", inputs, outputs, build)

    def describe_topics(self, M: int | None = None, view: str = "S",
                        top_words: int = 10, top_phrases: int = 5) -> Path:
        self._require_stage("train_lda")
        M = M if M is not None else self.cfg.effective_t2_m
        model_file = self.model_path(M, view)
        if not model_file.exists():
            raise MissingPrerequisiteError(
                f"describe-topics needs missing artifact {model_file}")
        model = container.load_model(model_file)
        train_pairs, _ = self._split_pairs()
        vocab = self.load_vocab()
        docs = lda.build_documents(train_pairs, view, vocab)
        descriptors = lda.describe_topics(model, top_words, top_phrases, docs)
        out = self.path("eval", f"topics_m{M}_{view}.json")
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(json.dumps(
            [{"topic": d.topic, "top_words": list(d.top_words),
              "top_phrases": list(d.top_phrases)} for d in descriptors],
            indent=2, sort_keys=True) + "\n")
        return out

    def run_all(self) -> None:
        self.ingest()
        self.train_lda()
        self.annotate()
        self.train_predictors()
        self.evaluate()
        self.perplexity()
