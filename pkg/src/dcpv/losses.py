"""Evaluation-only versions of the training losses (no gradients)."""

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, ParameterError

DEFAULT_TAU = 0.07
DEFAULT_W = 0.8
PROB_FLOOR = 1e-12


@dataclass(frozen=True, eq=False)
class ContrastiveBatch:
    """Features ``z`` (one row per sample), integer ``labels`` and temperature ``tau``.

    Rows are used as given; callers wanting cosine similarities should
    L2-normalize them first.
    """

    z: np.ndarray
    labels: np.ndarray
    tau: float = DEFAULT_TAU

    def __post_init__(self):
        z = np.asarray(self.z, dtype=np.float64)
        labels = np.asarray(self.labels)
        if z.ndim != 2 or labels.shape != (z.shape[0],):
            raise DimensionError("z must be (n, d) with one label per row")
        if z.shape[0] < 2 or z.shape[0] % 2:
            raise DimensionError("batch size must be even and at least 2")
        if not self.tau > 0:
            raise ParameterError("temperature must be positive")
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "labels", labels)


def contrastive_loss(batch):
    """Supervised contrastive loss summed over anchors that have a positive.

    Each anchor's term averages the log-softmax over its positives, with the
    softmax taken over every other sample in the batch.
    """
    z, labels, tau = batch.z, batch.labels, batch.tau
    n = z.shape[0]
    logits = (z @ z.T) / tau
    others = ~np.eye(n, dtype=bool)
    masked = np.where(others, logits, -np.inf)
    peak = masked.max(axis=1, keepdims=True)
    log_denom = peak[:, 0] + np.log(np.exp(masked - peak).sum(axis=1))
    positives = (labels[:, None] == labels[None, :]) & others
    n_pos = positives.sum(axis=1)
    total = 0.0
    for i in range(n):
        if n_pos[i] == 0:
            continue
        log_prob = logits[i, positives[i]] - log_denom[i]
        total -= log_prob.sum() / n_pos[i]
    return float(total)


def cross_entropy(probabilities, labels):
    """Mean negative log-likelihood of the true class (natural log)."""
    q = np.asarray(probabilities, dtype=np.float64)
    labels = np.asarray(labels)
    if q.ndim != 2 or labels.shape != (q.shape[0],):
        raise DimensionError("probabilities must be (T, S) with one label per row")
    if np.any(q < 0) or np.any(np.abs(q.sum(axis=1) - 1) > 1e-9):
        raise ParameterError("each row must be a probability vector")
    if np.any((labels < 0) | (labels >= q.shape[1])):
        raise ParameterError("labels out of range")
    picked = np.maximum(q[np.arange(q.shape[0]), labels], PROB_FLOOR)
    return float(-np.mean(np.log(picked)))


def hybrid_loss(ce, tc, w=DEFAULT_W):
    if not 0.0 <= w <= 1.0:
        raise ParameterError("w must lie in [0, 1]")
    return w * ce + (1 - w) * tc
