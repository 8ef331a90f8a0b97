"""Backbones that map featurized examples to tier logits.

The tiny backbone is the reference implementation: a linear layer over
hashed bag-of-words counts plus the two structural features, pure numpy,
deterministic under seed, cheap enough for gradient checking. The optional
transformer encoder lives in :mod:`tiertrainer.encoder` and needs torch.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class BackboneSpec:
    kind: str = "tiny"  # "tiny" | "encoder"
    buckets: int = 256
    # encoder-only knobs
    adapter_rank: int = 8
    learning_rate: float = 1e-4

    def __post_init__(self) -> None:
        if self.kind not in ("tiny", "encoder"):
            raise ValueError(f"unknown backbone kind {self.kind!r}")
        if self.buckets < 8:
            raise ValueError("buckets must be >= 8")


class TinyBackbone:
    """Linear layer over hashed features; n_outputs=3 for tier scoring,
    1 for a cascade stage's capability verdict."""

    def __init__(self, buckets: int = 256, n_outputs: int = 3, seed: int = 42):
        self.buckets = buckets
        self.n_outputs = n_outputs
        self.seed = seed
        rng = np.random.default_rng(seed)
        dim = buckets + 2
        self.W = rng.normal(0.0, 0.01, size=(n_outputs, dim))
        self.b = np.zeros(n_outputs, dtype=np.float64)

    @property
    def dim(self) -> int:
        return self.buckets + 2

    def logits(self, X: np.ndarray) -> np.ndarray:
        out = X @ self.W.T + self.b
        return out

    def step(self, X: np.ndarray, dlogits: np.ndarray, lr: float) -> None:
        """One gradient-descent update given d(loss)/d(logits)."""
        self.W -= lr * (dlogits.T @ X)
        self.b -= lr * dlogits.sum(axis=0)

    def clone(self) -> "TinyBackbone":
        twin = TinyBackbone(self.buckets, self.n_outputs, self.seed)
        twin.W = self.W.copy()
        twin.b = self.b.copy()
        return twin

    # flat-vector views used by the finite-difference gradient check
    def flat_params(self) -> np.ndarray:
        return np.concatenate([self.W.ravel(), self.b])

    def set_flat_params(self, vec: np.ndarray) -> None:
        n_w = self.W.size
        self.W = vec[:n_w].reshape(self.W.shape).copy()
        self.b = vec[n_w:].copy()

    def param_grad(self, X: np.ndarray, dlogits: np.ndarray) -> np.ndarray:
        """d(loss)/d(params) as a flat vector, matching flat_params order."""
        dW = dlogits.T @ X
        db = dlogits.sum(axis=0)
        return np.concatenate([dW.ravel(), db])
