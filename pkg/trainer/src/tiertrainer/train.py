"""Training loops for the four router losses, plus checkpoint persistence.

All four trainers run seeded minibatch gradient descent on the tiny
backbone and are bit-deterministic under a fixed seed. A checkpoint is a
directory: ``params.npz`` with the weights and ``manifest.json`` with
everything needed to reload and audit it (mode, seed, epochs, loss curve).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .backbone import BackboneSpec, TinyBackbone
from .data import (
    TIER_INDEX,
    TIER_NAMES,
    TrainerExample,
    feature_matrix,
    featurize,
    labels_vector,
    pair_index,
)
from .losses import binary_loss, dpo_loss, multiclass_loss, rank_loss, sigmoid


class DegenerateDataError(ValueError):
    """The training set cannot support the requested loss."""


@dataclass
class Checkpoint:
    """A trained scorer: weights plus the manifest that reproduces them."""

    kind: str  # backbone kind
    mode: str  # multiclass | binary | rank | dpo
    buckets: int
    W: np.ndarray
    b: np.ndarray
    target_tier: str | None = None  # binary checkpoints only
    manifest: dict = field(default_factory=dict)

    def tier_scores(self, text: str, n_tables: int, n_columns: int) -> dict[str, float]:
        if self.mode == "binary":
            raise ValueError("binary checkpoints score one tier, not all three")
        x = self._features(text, n_tables, n_columns)
        logits = self.W @ x + self.b
        return {name: float(logits[i]) for i, name in enumerate(TIER_NAMES)}

    def verdict(self, text: str, n_tables: int, n_columns: int) -> tuple[int, float]:
        if self.mode != "binary":
            raise ValueError("only binary checkpoints produce verdicts")
        x = self._features(text, n_tables, n_columns)
        logit = float(self.W[0] @ x + self.b[0])
        return int(sigmoid(np.array(logit)) >= 0.5), logit

    def _features(self, text: str, n_tables: int, n_columns: int) -> np.ndarray:
        example = TrainerExample(
            text=text, n_tables=n_tables, n_columns=n_columns, label=0
        )
        return featurize(example, self.buckets)

    def save(self, directory: str | Path) -> None:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        np.savez(directory / "params.npz", W=self.W, b=self.b)
        manifest = {
            "kind": self.kind,
            "mode": self.mode,
            "buckets": self.buckets,
            "target_tier": self.target_tier,
            "tier_names": list(TIER_NAMES),
            **self.manifest,
        }
        (directory / "manifest.json").write_text(
            json.dumps(manifest, indent=2) + "\n", encoding="utf-8"
        )

    @classmethod
    def load(cls, directory: str | Path) -> "Checkpoint":
        directory = Path(directory)
        manifest = json.loads((directory / "manifest.json").read_text(encoding="utf-8"))
        params = np.load(directory / "params.npz")
        known = {"kind", "mode", "buckets", "target_tier", "tier_names"}
        return cls(
            kind=manifest["kind"],
            mode=manifest["mode"],
            buckets=manifest["buckets"],
            W=params["W"],
            b=params["b"],
            target_tier=manifest.get("target_tier"),
            manifest={k: v for k, v in manifest.items() if k not in known},
        )


def _minibatches(n: int, batch_size: int, rng: np.random.Generator):
    order = rng.permutation(n)
    for start in range(0, n, batch_size):
        yield order[start : start + batch_size]


def _run_epochs(backbone, X, epochs, seed, lr, batch_size, batch_loss):
    """Shared SGD skeleton; batch_loss(rows, logits) -> (loss, dlogits)."""
    rng = np.random.default_rng(seed)
    curve = []
    for _ in range(epochs):
        for rows in _minibatches(len(X), batch_size, rng):
            logits = backbone.logits(X[rows])
            _, dlogits = batch_loss(rows, logits)
            backbone.step(X[rows], dlogits, lr)
        full_loss, _ = batch_loss(np.arange(len(X)), backbone.logits(X))
        curve.append(float(full_loss))
    return curve


def _base_manifest(seed, epochs, lr, curve, **extra) -> dict:
    return {"seed": seed, "epochs": epochs, "learning_rate": lr, "loss_curve": curve, **extra}


def train_multiclass(
    examples: list[TrainerExample],
    spec: BackboneSpec = BackboneSpec(),
    epochs: int = 10,
    seed: int = 42,
    lr: float = 0.5,
    batch_size: int = 16,
) -> Checkpoint:
    """Cross-entropy over the three tiers."""
    labels = labels_vector(examples)
    if len(np.unique(labels)) < 2:
        raise DegenerateDataError("multiclass training needs at least two distinct labels")
    X = feature_matrix(examples, spec.buckets)
    backbone = TinyBackbone(spec.buckets, n_outputs=3, seed=seed)

    def batch_loss(rows, logits):
        return multiclass_loss(logits, labels[rows])

    curve = _run_epochs(backbone, X, epochs, seed, lr, batch_size, batch_loss)
    return Checkpoint(
        kind="tiny", mode="multiclass", buckets=spec.buckets,
        W=backbone.W, b=backbone.b,
        manifest=_base_manifest(seed, epochs, lr, curve),
    )


def train_binary(
    examples: list[TrainerExample],
    target_tier: str,
    spec: BackboneSpec = BackboneSpec(),
    epochs: int = 10,
    seed: int = 42,
    lr: float = 0.5,
    batch_size: int = 16,
) -> Checkpoint:
    """Capability classifier for one cascade stage.

    Positives are examples whose label is at most the target tier (a query
    solvable by a cheaper pipeline is also routable to this stage).
    """
    if target_tier not in TIER_NAMES[:-1]:
        raise ValueError("cascade stages exist for Basic and Intermediate only")
    targets = (labels_vector(examples) <= TIER_INDEX[target_tier]).astype(np.float64)
    if targets.min() == targets.max():
        raise DegenerateDataError(
            f"binary training for {target_tier} needs both positives and negatives"
        )
    X = feature_matrix(examples, spec.buckets)
    backbone = TinyBackbone(spec.buckets, n_outputs=1, seed=seed)

    def batch_loss(rows, logits):
        loss, dflat = binary_loss(logits[:, 0], targets[rows])
        return loss, dflat[:, None]

    curve = _run_epochs(backbone, X, epochs, seed, lr, batch_size, batch_loss)
    return Checkpoint(
        kind="tiny", mode="binary", buckets=spec.buckets,
        W=backbone.W, b=backbone.b, target_tier=target_tier,
        manifest=_base_manifest(seed, epochs, lr, curve),
    )


def train_pairwise_rank(
    examples: list[TrainerExample],
    spec: BackboneSpec = BackboneSpec(),
    margin: float = 1.0,
    epochs: int = 10,
    seed: int = 42,
    lr: float = 0.5,
    batch_size: int = 16,
) -> Checkpoint:
    """Margin ranking loss over the labeler's preference pairs."""
    all_pairs = pair_index(examples)
    if not all_pairs:
        raise DegenerateDataError("pairwise ranking needs preference pairs")
    by_row: dict[int, list[tuple[int, int]]] = {}
    for row, preferred, rejected in all_pairs:
        by_row.setdefault(row, []).append((preferred, rejected))
    X = feature_matrix(examples, spec.buckets)
    backbone = TinyBackbone(spec.buckets, n_outputs=3, seed=seed)

    def batch_loss(rows, logits):
        pairs = [
            (local, preferred, rejected)
            for local, row in enumerate(np.atleast_1d(rows))
            for preferred, rejected in by_row.get(int(row), ())
        ]
        if not pairs:
            return 0.0, np.zeros_like(logits)
        return rank_loss(logits, pairs, margin)

    curve = _run_epochs(backbone, X, epochs, seed, lr, batch_size, batch_loss)
    return Checkpoint(
        kind="tiny", mode="rank", buckets=spec.buckets,
        W=backbone.W, b=backbone.b,
        manifest=_base_manifest(seed, epochs, lr, curve, margin=margin),
    )


def train_dpo(
    examples: list[TrainerExample],
    spec: BackboneSpec = BackboneSpec(),
    beta: float = 0.1,
    epochs: int = 10,
    seed: int = 42,
    lr: float = 5.0,  # the gradient carries a factor of beta; compensate
    batch_size: int = 16,
) -> Checkpoint:
    """Preference optimization against a frozen copy of the initialization."""
    if beta <= 0:
        raise ValueError("beta must be positive")
    all_pairs = pair_index(examples)
    if not all_pairs:
        raise DegenerateDataError("preference optimization needs preference pairs")
    by_row: dict[int, list[tuple[int, int]]] = {}
    for row, preferred, rejected in all_pairs:
        by_row.setdefault(row, []).append((preferred, rejected))
    X = feature_matrix(examples, spec.buckets)
    backbone = TinyBackbone(spec.buckets, n_outputs=3, seed=seed)
    reference = backbone.clone()  # frozen at initialization

    def batch_loss(rows, logits):
        rows = np.atleast_1d(rows)
        pairs = [
            (local, preferred, rejected)
            for local, row in enumerate(rows)
            for preferred, rejected in by_row.get(int(row), ())
        ]
        if not pairs:
            return 0.0, np.zeros_like(logits)
        ref_logits = reference.logits(X[rows])
        return dpo_loss(logits, ref_logits, pairs, beta)

    curve = _run_epochs(backbone, X, epochs, seed, lr, batch_size, batch_loss)
    return Checkpoint(
        kind="tiny", mode="dpo", buckets=spec.buckets,
        W=backbone.W, b=backbone.b,
        manifest=_base_manifest(seed, epochs, lr, curve, beta=beta),
    )


def evaluate_router(
    checkpoint: Checkpoint, examples: list[TrainerExample]
) -> tuple[float, list[list[int]], float]:
    """(accuracy, 3x3 confusion rows=true label, majority-class baseline)."""
    if not examples:
        raise ValueError("evaluation needs at least one example")
    labels = labels_vector(examples)
    confusion = [[0] * 3 for _ in range(3)]
    correct = 0
    for example, label in zip(examples, labels):
        scores = checkpoint.tier_scores(example.text, example.n_tables, example.n_columns)
        predicted = int(np.argmax([scores[name] for name in TIER_NAMES]))
        confusion[int(label)][predicted] += 1
        correct += int(predicted == label)
    counts = np.bincount(labels, minlength=3)
    majority = counts.max() / len(examples)
    return correct / len(examples), confusion, majority
