"""Word-level perplexity of agent replies, with and without customer context.

The unconditional score uses the agent-only topic model; the conditional
score uses the pair-level model through the likelihood ratio of the
concatenated pair over the customer part alone, normalized by the agent
token count only.  Document likelihood is the deterministic point-estimate
approximation: fold-in a topic mixture, then multiply per-token mixture
probabilities.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np

from .lda import TopicModel, infer

LIKELIHOOD_ESTIMATOR = "foldin-point-estimate"


class PerplexityError(ValueError):
    pass


@dataclass(frozen=True)
class PerplexityReport:
    M: int
    pp_unconditional: float
    pp_conditional: float
    token_total: int
    doc_count: int
    estimator: str = LIKELIHOOD_ESTIMATOR


def doc_log_likelihood(model: TopicModel, tokens) -> float:
    """Point-estimate log-likelihood of a token sequence.

    Infers the topic mixture by fold-in, then sums per-token log mixture
    probabilities.  Empty input has likelihood 1 (log 0.0).
    """
    tokens = np.asarray(tokens, dtype=np.int64)
    if tokens.size == 0:
        return 0.0
    theta = infer(model, tokens)
    word_probs = theta @ model.phi()[:, tokens]
    return float(np.log(word_probs).sum())


def perplexity_unconditional(model_a: TopicModel,
                             agent_docs: list[list[int]]) -> float:
    """exp(-sum_i log L(A_i) / sum_i N_Ai) over the test agent emails."""
    if not agent_docs:
        raise PerplexityError("empty test set")
    total_tokens = sum(len(d) for d in agent_docs)
    if total_tokens == 0:
        raise PerplexityError("zero agent tokens in test set")
    log_l = sum(doc_log_likelihood(model_a, d) for d in agent_docs)
    return float(np.exp(-log_l / total_tokens))


def perplexity_conditional(model_ca: TopicModel,
                           pair_docs: list[tuple[list[int], list[int]]]) -> float:
    """Perplexity of agent emails given the customer query.

    ``pair_docs`` holds (customer_tokens, agent_tokens) per test pair.  Uses
    exp(-sum_i [log L(C_i + A_i) - log L(C_i)] / sum_i N_Ai); the mixture for
    the joint term is inferred from the concatenation, the one for the
    customer term from the customer tokens alone.
    """
    if not pair_docs:
        raise PerplexityError("empty test set")
    total_agent = sum(len(a) for _, a in pair_docs)
    if total_agent == 0:
        raise PerplexityError("zero agent tokens in test set")
    log_ratio = 0.0
    for cust, agent in pair_docs:
        log_ratio += (doc_log_likelihood(model_ca, list(cust) + list(agent))
                      - doc_log_likelihood(model_ca, cust))
    return float(np.exp(-log_ratio / total_agent))


def build_report(M: int, model_a: TopicModel, model_ca: TopicModel,
                 pair_docs: list[tuple[list[int], list[int]]]) -> PerplexityReport:
    agent_docs = [a for _, a in pair_docs]
    return PerplexityReport(
        M=M,
        pp_unconditional=perplexity_unconditional(model_a, agent_docs),
        pp_conditional=perplexity_conditional(model_ca, pair_docs),
        token_total=sum(len(a) for a in agent_docs),
        doc_count=len(pair_docs))


def write_reports(reports: list[PerplexityReport], json_path, csv_path) -> None:
    """Emit the report grid as JSON and as a two-series CSV over M."""
    with open(json_path, "w", encoding="utf-8") as fh:
        json.dump([report.__dict__ for report in reports], fh, indent=2,
                  sort_keys=True)
        fh.write("\n")
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["M", "pp_unconditional", "pp_conditional"])
        for report in reports:
            writer.writerow([report.M, report.pp_unconditional,
                             report.pp_conditional])
