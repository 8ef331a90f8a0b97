"""The four routing losses with analytic gradients w.r.t. the logits.

Each function returns (mean loss, d(mean loss)/d(logits)) so any linear or
deep backbone can chain its own parameter gradients behind them. The tiny
backbone's gradient check differentiates through these exact expressions.
"""

from __future__ import annotations

import numpy as np


def log_softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


def softmax(logits: np.ndarray) -> np.ndarray:
    return np.exp(log_softmax(logits))


def sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x, dtype=np.float64)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    expx = np.exp(x[~pos])
    out[~pos] = expx / (1.0 + expx)
    return out


def softplus(x: np.ndarray) -> np.ndarray:
    return np.logaddexp(0.0, x)


def multiclass_loss(logits: np.ndarray, labels: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean cross-entropy over tier labels."""
    n = len(labels)
    logp = log_softmax(logits)
    loss = -logp[np.arange(n), labels].mean()
    grad = softmax(logits)
    grad[np.arange(n), labels] -= 1.0
    return float(loss), grad / n


def binary_loss(logits: np.ndarray, targets: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean binary cross-entropy on capability verdicts (targets in {0,1})."""
    n = len(targets)
    # numerically stable BCE-with-logits: max(x,0) - x*y + log(1+exp(-|x|))
    loss = (np.maximum(logits, 0) - logits * targets + softplus(-np.abs(logits))).mean()
    grad = (sigmoid(logits) - targets) / n
    return float(loss), grad


def rank_loss(
    logits: np.ndarray,
    pairs: list[tuple[int, int, int]],
    margin: float = 1.0,
) -> tuple[float, np.ndarray]:
    """Mean margin ranking loss over (row, preferred, rejected) triples:
    max(0, margin - s_preferred + s_rejected)."""
    if not pairs:
        raise ValueError("rank loss needs at least one preference pair")
    grad = np.zeros_like(logits, dtype=np.float64)
    total = 0.0
    for row, preferred, rejected in pairs:
        slack = margin - logits[row, preferred] + logits[row, rejected]
        if slack > 0:
            total += slack
            grad[row, preferred] -= 1.0
            grad[row, rejected] += 1.0
    n = len(pairs)
    return total / n, grad / n


def dpo_loss(
    logits: np.ndarray,
    ref_logits: np.ndarray,
    pairs: list[tuple[int, int, int]],
    beta: float = 0.1,
) -> tuple[float, np.ndarray]:
    """Mean preference loss -log sigmoid(beta * margin-vs-reference).

    With a softmax policy over tiers, log pi(i) - log pi(j) equals the raw
    logit difference, so the inner term is
    beta * [(z_i - z_j) - (z_i_ref - z_j_ref)] and the loss is exactly
    ln 2 per pair whenever the policy equals the reference.
    """
    if beta <= 0:
        raise ValueError("beta must be positive")
    if not pairs:
        raise ValueError("dpo loss needs at least one preference pair")
    grad = np.zeros_like(logits, dtype=np.float64)
    total = 0.0
    for row, preferred, rejected in pairs:
        h = beta * (
            (logits[row, preferred] - logits[row, rejected])
            - (ref_logits[row, preferred] - ref_logits[row, rejected])
        )
        total += float(softplus(np.array(-h)))
        coeff = float(sigmoid(np.array(h)) - 1.0) * beta  # d(-log sigmoid(h))/dh * dh
        grad[row, preferred] += coeff
        grad[row, rejected] -= coeff
    n = len(pairs)
    return total / n, grad / n
