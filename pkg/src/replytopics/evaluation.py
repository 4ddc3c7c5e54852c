"""Evaluation metrics and report assembly.

Three metrics: Bhattacharyya coefficient between predicted and silver
distributions, Recall@1 of ranking the true reply against sampled
distractors, and top-K dominant-topic accuracy.  KL divergence is computed
alongside for logging only.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np

from .features import FeatureLayout, context_features
from .predictor import (PairContext, baseline_average, baseline_uniform,
                        train_t2, _transition_feature)
from .regressor import SGDConfig, predict
from .silver import TransitionExample


class EvaluationError(ValueError):
    pass


def bhattacharyya(p, q) -> float:
    """sum_k sqrt(p_k q_k), clamped to [0, 1] against rounding."""
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.shape != q.shape:
        raise EvaluationError("distributions must have the same length")
    return float(np.clip(np.sqrt(p * q).sum(), 0.0, 1.0))


def mean_bc(predictions, targets) -> float:
    predictions, targets = list(predictions), list(targets)
    if not predictions or len(predictions) != len(targets):
        raise EvaluationError("need non-empty aligned prediction/target lists")
    return float(np.mean([bhattacharyya(p, q)
                          for p, q in zip(predictions, targets)]))


def kl_divergence(p, q) -> float:
    """KL(p || q); logged next to BC, carries no acceptance weight."""
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    mask = p > 0
    return float((p[mask] * np.log(p[mask] / q[mask])).sum())


def text_ranking_recall1(predictions, targets, train_pool, k: int,
                         seed: int = 0) -> float:
    """Recall@1 of ranking the true reply among k-1 sampled distractors.

    For each test item, k-1 distractor distributions are drawn (seeded,
    without replacement) from the training silver pool, and all k candidates
    are ranked by Bhattacharyya coefficient against the prediction.  The
    true reply must strictly outrank every distractor; ties count as misses.
    """
    predictions, targets = list(predictions), list(targets)
    if not predictions or len(predictions) != len(targets):
        raise EvaluationError("need non-empty aligned prediction/target lists")
    if k < 1:
        raise EvaluationError("k must be >= 1")
    pool = list(train_pool)
    if len(pool) < k - 1:
        raise EvaluationError(
            f"need at least {k - 1} training distributions, have {len(pool)}")
    rng = np.random.default_rng(seed)
    wins = 0
    for pred, true in zip(predictions, targets):
        true_score = bhattacharyya(pred, true)
        distractors = rng.choice(len(pool), size=k - 1, replace=False)
        if all(bhattacharyya(pred, pool[d]) < true_score for d in distractors):
            wins += 1
    return wins / len(predictions)


def topk_topics(dist, K: int) -> list[int]:
    """Indices of the K most probable topics, ties broken by lower index."""
    dist = np.asarray(dist, dtype=np.float64)
    return list(np.argsort(-dist, kind="stable")[:K])


def dominant_topic_accuracy(predictions, dominants, K: int) -> float:
    """Fraction of examples whose silver dominant is in the top-K prediction."""
    predictions, dominants = list(predictions), list(dominants)
    if not predictions or len(predictions) != len(dominants):
        raise EvaluationError("need non-empty aligned prediction/target lists")
    M = len(np.asarray(predictions[0]))
    if not 1 <= K <= M:
        raise EvaluationError(f"K must be in [1, {M}]")
    hits = sum(dom in topk_topics(pred, K)
               for pred, dom in zip(predictions, dominants))
    return hits / len(predictions)


@dataclass
class EvalReport:
    task: str  # "T1" or "T2"
    M: int
    test_size: int
    rows: list[dict] = field(default_factory=list)

    def add_row(self, system: str, features: str, **metrics) -> None:
        key = (system, features)
        if any((r["system"], r["features"]) == key for r in self.rows):
            raise EvaluationError(f"duplicate report row {key}")
        self.rows.append({"system": system, "features": features, **metrics})

    def to_json(self) -> dict:
        return {"task": self.task, "M": self.M, "test_size": self.test_size,
                "rows": self.rows}

    def format_table(self) -> str:
        if not self.rows:
            return "(empty report)"
        cols = ["system", "features"] + [c for c in self.rows[0]
                                         if c not in ("system", "features")]
        widths = {c: max(len(str(c)),
                         *(len(_fmt(r.get(c))) for r in self.rows))
                  for c in cols}
        lines = ["  ".join(f"{c:<{widths[c]}}" for c in cols)]
        for r in self.rows:
            lines.append("  ".join(f"{_fmt(r.get(c)):<{widths[c]}}"
                                   for c in cols))
        return "\n".join(lines)


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.4f}"
    if isinstance(v, dict):
        return " ".join(f"{k}:{val:.3f}" for k, val in sorted(v.items()))
    return str(v)


def write_report(report: EvalReport, json_path, csv_path) -> None:
    with open(json_path, "w", encoding="utf-8") as fh:
        json.dump(report.to_json(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    flat_rows = []
    for r in report.rows:
        flat = {}
        for key, val in r.items():
            if isinstance(val, dict):
                for sub, x in sorted(val.items()):
                    flat[f"{key}@{sub}"] = x
            else:
                flat[key] = val
        flat_rows.append(flat)
    fieldnames = sorted({k for r in flat_rows for k in r},
                        key=lambda k: (k not in ("system", "features"), k))
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=fieldnames)
        writer.writeheader()
        writer.writerows(flat_rows)


# ---------------------------------------------------------------------------
# Task-level report runners.


@dataclass(frozen=True)
class T1GridPoint:
    """Per-M inputs for the whole-reply evaluation."""

    predictions: list    # predicted reply distributions, one per test pair
    targets: list        # silver agent distributions
    copy_predictions: list  # customer distributions (copy baseline)
    train_pool: list     # training silver agent distributions (distractors)


def run_t1_eval(grid: dict[int, T1GridPoint], k: int = 5,
                k_grid: tuple[int, ...] = (2, 3, 5, 10),
                seed: int = 0) -> EvalReport:
    """Whole-reply report over an M grid: mean BC and Recall@1 curves."""
    if not grid:
        raise EvaluationError("empty evaluation grid")
    report = EvalReport(task="T1", M=max(grid),
                        test_size=len(next(iter(grid.values())).targets))
    for M in sorted(grid):
        point = grid[M]
        recall = {kk: text_ranking_recall1(point.predictions, point.targets,
                                           point.train_pool, kk, seed)
                  for kk in sorted(set(k_grid) | {k})
                  if kk - 1 <= len(point.train_pool)}
        report.add_row("predicted", f"M={M}",
                       mean_bc=mean_bc(point.predictions, point.targets),
                       recall1=recall)
        report.add_row("copy_customer", f"M={M}",
                       mean_bc=mean_bc(point.copy_predictions, point.targets),
                       recall1={})
    return report


T2_FEATURE_SUBSETS: tuple[tuple[str, dict], ...] = (
    ("words", {"use_words": True, "use_topics": False, "use_position": False}),
    ("words+position", {"use_words": True, "use_topics": False,
                        "use_position": True}),
    ("topics", {"use_words": False, "use_topics": True, "use_position": False}),
    ("topics+words", {"use_words": True, "use_topics": True,
                      "use_position": False}),
    ("topics+words+position", {"use_words": True, "use_topics": True,
                               "use_position": True}),
)


@dataclass(frozen=True)
class T2EvalData:
    M: int
    V: int
    alpha_s: np.ndarray  # sentence-model prior (re-estimated)
    train_transitions: list[TransitionExample]
    train_contexts: dict[str, PairContext]
    test_transitions: list[TransitionExample]
    test_contexts: dict[str, PairContext]
    sgd: SGDConfig = SGDConfig()
    family_min_examples: int = 50
    sentence_topic: str = "onehot"


def _t2_predictions(data: T2EvalData, flags: dict) -> tuple[list, list, list]:
    """Train a subset's models and predict every test sentence."""
    t2_layout = FeatureLayout(kind="transition", V=data.V, M=data.M,
                              sentence_topic=data.sentence_topic, **flags)
    first_flags = {k: v for k, v in flags.items() if k != "use_position"}
    first_layout = FeatureLayout(kind="context", V=data.V, M=data.M,
                                 **first_flags)
    family, first_w, fallback_w = train_t2(
        data.train_transitions, data.train_contexts, data.M, t2_layout,
        first_layout, data.sgd, data.family_min_examples)
    predictions, targets, dominants = [], [], []
    for ex in data.test_transitions:
        ctx = data.test_contexts.get(ex.pair_id)
        if ctx is None:
            continue
        if ex.cur_j is None:
            x = context_features(first_layout, ctx.customer_ids,
                                 ctx.tau_customer)
            predictions.append(predict(first_w, x))
        else:
            weights = family.get(ex.cur_dominant, fallback_w)
            predictions.append(predict(
                weights, _transition_feature(t2_layout, ctx, ex)))
        targets.append(ex.next_tau)
        dominants.append(ex.next_dominant)
    return predictions, targets, dominants


def run_t2_eval(data: T2EvalData,
                K_grid: tuple[int, ...] = (1, 2, 5, 10),
                subsets=T2_FEATURE_SUBSETS) -> EvalReport:
    """Next-sentence report: baselines plus the predictor per feature subset."""
    if not data.test_transitions:
        raise EvaluationError("no test transitions")
    targets = [ex.next_tau for ex in data.test_transitions
               if ex.pair_id in data.test_contexts]
    dominants = [ex.next_dominant for ex in data.test_transitions
                 if ex.pair_id in data.test_contexts]
    n = len(targets)
    K_grid = tuple(K for K in K_grid if K <= data.M)
    report = EvalReport(task="T2", M=data.M, test_size=n)

    for name, dist in (("uniform", baseline_uniform(data.M)),
                       ("average", baseline_average(data.alpha_s))):
        preds = [dist] * n
        report.add_row(name, "-",
                       mean_bc=mean_bc(preds, targets),
                       mean_kl=float(np.mean([kl_divergence(t, p)
                                              for p, t in zip(preds, targets)])),
                       dta={K: dominant_topic_accuracy(preds, dominants, K)
                            for K in K_grid})

    for name, flags in subsets:
        preds, targs, doms = _t2_predictions(data, flags)
        report.add_row("proposed", name,
                       mean_bc=mean_bc(preds, targs),
                       mean_kl=float(np.mean([kl_divergence(t, p)
                                              for p, t in zip(preds, targs)])),
                       dta={K: dominant_topic_accuracy(preds, doms, K)
                            for K in K_grid})
    return report
