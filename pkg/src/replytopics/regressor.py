"""Softmax regression over sparse features, trained by plain SGD.

One class covers both uses: soft labels (a target distribution, giving the
KL-divergence loss) and hard labels (one-hot targets, giving standard
multiclass cross-entropy).  The gradients coincide, so the trainer does not
distinguish the two.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .features import FeatureVector


class RegressorError(ValueError):
    pass


@dataclass(frozen=True)
class SGDConfig:
    learning_rate: float = 0.1   # decays as lr / sqrt(step)
    epochs: int = 20
    l2: float = 1e-4
    seed: int = 0

    def to_json(self) -> dict:
        return {"learning_rate": self.learning_rate, "epochs": self.epochs,
                "l2": self.l2, "seed": self.seed}

    @classmethod
    def from_json(cls, obj: dict) -> "SGDConfig":
        return cls(**obj)


def softmax(scores: np.ndarray) -> np.ndarray:
    shifted = scores - scores.max()
    e = np.exp(shifted)
    return e / e.sum()


def predict(W: np.ndarray, x: FeatureVector) -> np.ndarray:
    """Probability distribution over the output classes for one example."""
    if x.indices.size and int(x.indices[-1]) >= W.shape[0]:
        raise RegressorError("feature index outside the weight matrix")
    scores = x.values @ W[x.indices] if x.indices.size else np.zeros(W.shape[1])
    return softmax(scores)


def loss_and_grad(W: np.ndarray, examples: list[FeatureVector],
                  targets: np.ndarray, l2: float) -> tuple[float, np.ndarray]:
    """Full-batch KL loss sum_i KL(y_i || p_i) + l2 ||W||^2 and its gradient.

    This is the reference objective the SGD loop descends; kept exact and
    dense so it can be validated against finite differences.
    """
    if len(examples) != targets.shape[0]:
        raise RegressorError("examples and targets must align")
    loss = l2 * float((W * W).sum())
    grad = 2.0 * l2 * W.copy()
    for x, y in zip(examples, targets):
        p = predict(W, x)
        mask = y > 0
        loss += float((y[mask] * np.log(y[mask] / p[mask])).sum())
        grad[x.indices] += np.outer(x.values, p - y)
    return loss, grad


def fit(examples: list[FeatureVector], targets: np.ndarray, dim: int,
        config: SGDConfig = SGDConfig()) -> np.ndarray:
    """Train weights by per-example SGD with decaying learning rate.

    The L2 term is applied through a multiplicative scale factor so updates
    stay sparse; the step matches W <- W - eta * (x (p - y) + 2 l2 W).
    """
    if not examples:
        raise RegressorError("no training examples")
    n_classes = targets.shape[1]
    for x in examples:
        if x.indices.size and int(x.indices[-1]) >= dim:
            raise RegressorError("feature index outside the declared layout")

    W = np.zeros((dim, n_classes))
    scale = 1.0
    rng = np.random.default_rng(config.seed)
    step = 0
    for _ in range(config.epochs):
        for i in rng.permutation(len(examples)):
            step += 1
            eta = config.learning_rate / np.sqrt(step)
            x = examples[i]
            p = softmax(scale * (x.values @ W[x.indices]))
            shrink = 1.0 - 2.0 * eta * config.l2
            if shrink <= 1e-12:
                # Regularization dominates the step: weights collapse, and
                # the data gradient is negligible against the L2 pull.
                W[:] = 0.0
                scale = 1.0
                continue
            scale *= shrink
            W[x.indices] -= (eta / scale) * np.outer(x.values, p - targets[i])
            if scale < 1e-6:
                W *= scale
                scale = 1.0
    return scale * W
